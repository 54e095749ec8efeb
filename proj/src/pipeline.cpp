#include "ctts/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "ctts/inventory.hpp"

namespace ctts::pipe {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

TtsModel build_model(const BuildOptions& opt) {
    TtsModel m;
    m.fe_cfg = opt.tiny ? fe::tiny_config(opt.optimized) : fe::release_config(opt.optimized);
    m.fe_plan = fe::plan_for(opt.optimized);
    m.ac_cfg = opt.tiny ? ac::tiny_config(opt.optimized) : ac::release_config(opt.optimized);
    m.vo_cfg = opt.tiny ? vo::tiny_config() : vo::release_config();

    const std::map<std::string, float> targets = m.vo_cfg.sparsity;
    m.vo_cfg.sparsity.clear();  // dense until pruning actually runs

    m.fe_reg = fe::build_registry(m.fe_cfg, m.fe_plan, opt.seed);
    m.ac_reg = ac::build_registry(m.ac_cfg, opt.seed + 1);
    m.vo_reg = vo::build_registry(m.vo_cfg, opt.seed + 2);

    if (opt.optimized) {
        quantize_acoustic(m, quant::CalibMethod::maxabs);
        prune_vocoder(m, targets, 1);
    }
    return m;
}

QuantizeOutcome quantize_acoustic(TtsModel& model, quant::CalibMethod method, double percentile) {
    QuantizeOutcome out;
    ParamRegistry& reg = model.ac_reg;
    for (uint32_t id = 0; id < reg.unique_count(); ++id) {
        const std::string& name = reg.canonical_name(id);
        if (!ac::quantizable_slot(name)) continue;
        PhysicalTensor& t = *reg.tensor(id);
        if (t.store_dtype == Dtype::i8) {
            out.skipped.push_back(name);
            continue;
        }
        quant::CalibReport rep = quant::calibrate_report(name, t.values, method, percentile);
        t.quant = quant::quantize(t.values, rep.scale);
        t.values = quant::dequantize(*t.quant);
        t.store_dtype = Dtype::i8;
        out.reports.push_back(std::move(rep));
    }
    return out;
}

std::vector<PruneTraceRow> prune_vocoder(TtsModel& model,
                                         const std::map<std::string, float>& targets,
                                         int64_t steps) {
    if (steps < 1) throw ArgumentError("prune steps must be >= 1");
    const std::vector<std::string>& eligible = vo::sparse_slots();
    for (const auto& [slot, target] : targets) {
        if (std::find(eligible.begin(), eligible.end(), slot) == eligible.end())
            throw ArgumentError("not a sparse-eligible vocoder slot: " + slot);
        if (target < 0.0f || target >= 1.0f)
            throw ArgumentError("sparsity target must be in [0, 1): " + slot);
    }

    sparse::PruneSchedule sched;
    sched.t_start = 0;
    sched.t_end = steps;
    sched.s_final = 1.0;  // per-slot targets scale this unit ramp

    std::vector<PruneTraceRow> trace;
    for (int64_t k = 1; k <= steps; ++k) {
        const double ramp = sparse::sparsity_at(sched, k);
        PruneTraceRow row{k, ramp, 0.0};
        for (const auto& [slot, target] : targets) {
            PhysicalTensor& t = model.vo_reg.physical_mut(slot);
            auto [mask, masked] =
                sparse::prune(t.values, ramp * target, model.vo_cfg.block_rows,
                              model.vo_cfg.block_cols);
            t.values = std::move(masked);
            if (k == steps) t.sparse = sparse::to_block_sparse(t.values, mask);
            row.achieved += sparse::achieved_sparsity(mask);
        }
        if (!targets.empty()) row.achieved /= static_cast<double>(targets.size());
        trace.push_back(row);
    }
    for (const auto& [slot, target] : targets) model.vo_cfg.sparsity[slot] = target;
    return trace;
}

std::vector<PruneTraceRow> prune_vocoder(TtsModel& model, double target, int64_t steps) {
    std::map<std::string, float> targets;
    for (const std::string& slot : vo::sparse_slots())
        targets[slot] = static_cast<float>(target);
    return prune_vocoder(model, targets, steps);
}

SynthResult synth(const TtsModel& model, const std::string& text, uint64_t seed,
                  const vo::ChunkConsumer& consumer, size_t chunk_size) {
    SynthResult r;
    const auto t0 = Clock::now();

    const TokenInventory graphemes = make_grapheme_inventory(model.fe_cfg.grapheme_vocab);
    r.phonemes = fe::g2p(model.fe_reg, model.fe_cfg, graphemes, text);
    const auto t1 = Clock::now();

    auto [mel, variances] = ac::acoustic_infer(model.ac_reg, model.ac_cfg, r.phonemes);
    mel.frame_hop = model.vo_cfg.frame_hop;
    const auto t2 = Clock::now();

    r.wav = vo::generate(model.vo_reg, model.vo_cfg, mel, seed, consumer, chunk_size);
    const auto t3 = Clock::now();

    r.mel = std::move(mel);
    r.variances = std::move(variances);
    r.times.fe_ms = ms_between(t0, t1);
    r.times.ac_ms = ms_between(t1, t2);
    r.times.vo_ms = ms_between(t2, t3);
    r.times.total_ms = ms_between(t0, t3);
    return r;
}

namespace {

int worker_count(size_t sentences) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("CTTS_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
    }
    return static_cast<int>(std::min<size_t>(hw, sentences));
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct RoundResult {
    StageTimes sums;
    double audio_ms = 0.0;
};

RoundResult run_round(const TtsModel& model, const std::vector<std::string>& sentences,
                      uint64_t seed, int threads) {
    std::vector<StageTimes> times(sentences.size());
    std::vector<double> audio(sentences.size(), 0.0);
    std::atomic<size_t> next{0};
    auto work = [&] {
        for (size_t i = next.fetch_add(1); i < sentences.size(); i = next.fetch_add(1)) {
            SynthResult r = synth(model, sentences[i], seed + i);
            times[i] = r.times;
            audio[i] = 1000.0 * static_cast<double>(r.wav.samples.size()) /
                       static_cast<double>(r.wav.sample_rate);
        }
    };
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    RoundResult out;
    for (size_t i = 0; i < sentences.size(); ++i) {
        out.sums.fe_ms += times[i].fe_ms;
        out.sums.ac_ms += times[i].ac_ms;
        out.sums.vo_ms += times[i].vo_ms;
        out.sums.total_ms += times[i].total_ms;
        out.audio_ms += audio[i];
    }
    return out;
}

}  // namespace

BenchReport bench(const TtsModel& model, const std::vector<std::string>& sentences,
                  int iterations, int warmup, uint64_t seed) {
    if (sentences.empty()) throw ArgumentError("bench needs at least one sentence");
    if (iterations < 1) throw ArgumentError("bench needs at least one iteration");
    if (warmup < 0) throw ArgumentError("warmup must be >= 0");

    BenchReport rep;
    rep.iterations = iterations;
    rep.warmup = warmup;
    rep.threads = worker_count(sentences.size());
    rep.sentences = sentences.size();

    for (int i = 0; i < warmup; ++i) run_round(model, sentences, seed, rep.threads);

    std::vector<double> fe, acs, vos, totals;
    for (int i = 0; i < iterations; ++i) {
        const RoundResult r = run_round(model, sentences, seed, rep.threads);
        fe.push_back(r.sums.fe_ms);
        acs.push_back(r.sums.ac_ms);
        vos.push_back(r.sums.vo_ms);
        totals.push_back(r.sums.total_ms);
        rep.audio_ms = r.audio_ms;
    }
    rep.fe_ms = median(fe);
    rep.ac_ms = median(acs);
    rep.vo_ms = median(vos);
    rep.total_ms = median(totals);
    rep.rtf = rep.total_ms > 0.0 ? rep.audio_ms / rep.total_ms : 0.0;
    rep.rtf_above_threshold = rep.rtf > 1.5;
    return rep;
}

}  // namespace ctts::pipe
