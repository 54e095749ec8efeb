// Acceptance harness: one PASS/FAIL line per criterion, exit code is the
// number of failed criteria. Release-dimension accounting runs against real
// built models; everything numeric runs against the independent references
// in oracles.hpp.

#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "ctts/frontend.hpp"
#include "ctts/modelfile.hpp"
#include "ctts/pipeline.hpp"
#include "ctts/vocoder.hpp"
#include "ctts/wav.hpp"
#include "oracles.hpp"

using namespace ctts;

namespace {

int g_failures = 0;

void verdict(int criterion, bool ok, const char* fmt, ...) {
    if (!ok) ++g_failures;
    std::printf("%s criterion %d: ", ok ? "PASS" : "FAIL", criterion);
    va_list args;
    va_start(args, fmt);
    std::vprintf(fmt, args);
    va_end(args);
    std::printf("\n");
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string temp_file(const char* stem) {
    return std::string("/tmp/ctts_accept_") + stem + "_" + std::to_string(getpid());
}

size_t file_size(const std::string& path) {
    struct stat st {};
    return stat(path.c_str(), &st) == 0 ? static_cast<size_t>(st.st_size) : 0;
}

std::vector<char> slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
}

int32_t argmax_skip_pad(const float* logits, int32_t n) {
    int32_t best = -1;
    for (int32_t i = 0; i < n; ++i) {
        if (i == kPadId) continue;
        if (best < 0 || logits[i] > logits[best]) best = i;
    }
    return best;
}

// ---------------------------------------------------------------- criterion 1

bool kv_cache_equivalence(double& max_delta, int pairs) {
    max_delta = 0.0;
    fe::FrontendConfig cfg;
    cfg.n_enc = 3;
    cfg.n_dec = 2;
    cfg.d_model = 8;
    cfg.heads = 2;
    cfg.d_ff = 16;
    cfg.grapheme_vocab = 96;
    cfg.phoneme_vocab = 12;
    cfg.max_len = 16;
    const TokenInventory graphemes = make_grapheme_inventory(cfg.grapheme_vocab);

    for (int p = 0; p < pairs; ++p) {
        const fe::SharingPlan plan = fe::plan_for(p % 2 == 1);
        const ParamRegistry reg = fe::build_registry(cfg, plan, 1000 + p);

        std::mt19937 rng(90000 + p);
        std::string text;
        const int len = 2 + static_cast<int>(rng() % 7);
        for (int i = 0; i < len; ++i) text.push_back(static_cast<char>('a' + rng() % 26));

        std::vector<int32_t> ids = tokenize(text, graphemes);
        ids.erase(ids.begin());
        const TensorF32 memory = fe::encode(reg, cfg, ids);

        // Cached greedy decode.
        fe::DecoderCache cache = fe::init_decoder_cache(reg, cfg, memory);
        std::vector<int32_t> cached_tokens;
        std::vector<std::vector<float>> cached_logits;
        int32_t prev = kBosId;
        for (int step = 0; step < cfg.max_len; ++step) {
            cached_logits.push_back(fe::decode_step(reg, cfg, cache, prev));
            const int32_t next =
                argmax_skip_pad(cached_logits.back().data(), cfg.phoneme_vocab);
            cached_tokens.push_back(next);
            if (next == kEosId) break;
            prev = next;
        }

        // Prefix-recompute greedy decode.
        std::vector<int32_t> targets = {kBosId};
        std::vector<int32_t> full_tokens;
        for (size_t step = 0; step < cached_tokens.size(); ++step) {
            const TensorF32 logits = fe::decode_full(reg, cfg, memory, targets);
            const float* last = logits.row(logits.rows() - 1);
            for (int32_t j = 0; j < cfg.phoneme_vocab; ++j) {
                const double d = std::fabs(static_cast<double>(last[j]) -
                                           static_cast<double>(cached_logits[step][j]));
                if (d > max_delta) max_delta = d;
            }
            const int32_t next = argmax_skip_pad(last, cfg.phoneme_vocab);
            full_tokens.push_back(next);
            if (next == kEosId) break;
            targets.push_back(next);
        }

        if (full_tokens != cached_tokens || max_delta > 1e-5) return false;
    }
    return true;
}

// ---------------------------------------------------------------- criterion 2

int64_t fe_expected_params(const fe::FrontendConfig& c, bool shared) {
    const int64_t d = c.d_model, ff = c.d_ff;
    const int64_t attn_w = 4 * d * d, attn_b = 4 * d;
    const int64_t ffn_w = 2 * d * ff, ffn_b = ff + d;
    const int64_t ln = 2 * d;
    int64_t n = static_cast<int64_t>(c.grapheme_vocab) * d +
                static_cast<int64_t>(c.phoneme_vocab) * d;
    if (shared) {
        n += 2 * attn_w + ffn_w;
        n += c.n_enc * (attn_b + ffn_b + 2 * ln);
        n += c.n_dec * (2 * attn_b + ffn_w + ffn_b + 3 * ln);
    } else {
        n += c.n_enc * (attn_w + attn_b + ffn_w + ffn_b + 2 * ln);
        n += c.n_dec * (2 * (attn_w + attn_b) + ffn_w + ffn_b + 3 * ln);
    }
    n += 2 * ln + d * c.phoneme_vocab + c.phoneme_vocab;
    return n;
}

bool sharing_correctness(double& ratio) {
    // Alias-expanded forward passes are bit-identical.
    const fe::FrontendConfig tiny = fe::tiny_config(true);
    const ParamRegistry reg = fe::build_registry(tiny, fe::plan_for(true), 77);
    const ParamRegistry flat = reg.expand_aliases();
    std::vector<int32_t> ids = {4, 9, 14, 7, kEosId};
    const TensorF32 m1 = fe::encode(reg, tiny, ids);
    const TensorF32 m2 = fe::encode(flat, tiny, ids);
    if (m1.data != m2.data) return false;
    const std::vector<int32_t> targets = {kBosId, 5, 8};
    if (fe::decode_full(reg, tiny, m1, targets).data !=
        fe::decode_full(flat, tiny, m2, targets).data)
        return false;

    // Physical parameter counts match the slot-enumeration oracle.
    for (bool opt : {false, true}) {
        const fe::FrontendConfig t = fe::tiny_config(opt);
        if (fe::unique_param_count(t, fe::plan_for(opt)).params != fe_expected_params(t, opt))
            return false;
        const fe::FrontendConfig r = fe::release_config(opt);
        if (fe::unique_param_count(r, fe::plan_for(opt)).params != fe_expected_params(r, opt))
            return false;
    }

    // Shared 20-1 vs baseline 16-5 footprint at release dims, FP16 storage.
    const size_t shared_bytes =
        fe::unique_param_count(fe::release_config(true), fe::plan_for(true)).bytes_at(Dtype::f16);
    const size_t base_bytes =
        fe::unique_param_count(fe::release_config(false), fe::plan_for(false))
            .bytes_at(Dtype::f16);
    ratio = static_cast<double>(shared_bytes) / static_cast<double>(base_bytes);
    return ratio >= 0.35 && ratio <= 0.50;
}

// ------------------------------------------------- release model accounting

struct ReleaseStats {
    FootprintReport base_rep, opt_rep;
    size_t base_file = 0, opt_file = 0;
    size_t base_saved = 0, opt_saved = 0;
    bool blobs_match_unique = true;
    bool round_trip_ok = true;
    double quant_vs_f16 = 0.0;  // i8 payload bytes / same tensors at f16
};

ReleaseStats release_stats() {
    ReleaseStats s;
    const std::string path = temp_file("release.ctts");
    {
        const TtsModel base = pipe::build_model({false, false, 40});
        s.base_rep = footprint_report(base);
        s.base_saved = save(base, path);
        s.base_file = file_size(path);
        s.blobs_match_unique =
            s.base_rep.components[0].blobs == base.fe_reg.unique_count() &&
            s.base_rep.components[1].blobs == base.ac_reg.unique_count() &&
            s.base_rep.components[2].blobs == base.vo_reg.unique_count();
    }
    {
        const TtsModel opt = pipe::build_model({true, false, 40});
        s.opt_rep = footprint_report(opt);
        s.opt_saved = save(opt, path);
        s.opt_file = file_size(path);
        s.blobs_match_unique = s.blobs_match_unique &&
                               s.opt_rep.components[0].blobs == opt.fe_reg.unique_count() &&
                               s.opt_rep.components[1].blobs == opt.ac_reg.unique_count() &&
                               s.opt_rep.components[2].blobs == opt.vo_reg.unique_count();

        size_t i8_bytes = 0, f16_bytes = 0;
        for (uint32_t id = 0; id < opt.ac_reg.unique_count(); ++id) {
            const PhysicalTensor& t = *opt.ac_reg.tensor(id);
            if (!t.quant) continue;
            i8_bytes += t.quant->data.size();
            f16_bytes += static_cast<size_t>(t.values.numel()) * 2;
        }
        s.quant_vs_f16 = static_cast<double>(i8_bytes) / static_cast<double>(f16_bytes);
    }
    std::remove(path.c_str());

    // Round trip at tiny dims exercises dense, i8 and sparse blob paths.
    for (bool opt : {false, true}) {
        const std::string p1 = temp_file(opt ? "rt_opt1.ctts" : "rt_base1.ctts");
        const std::string p2 = temp_file(opt ? "rt_opt2.ctts" : "rt_base2.ctts");
        const TtsModel m = pipe::build_model({opt, true, 41});
        save(m, p1);
        save(load(p1), p2);
        s.round_trip_ok = s.round_trip_ok && slurp(p1) == slurp(p2) && !slurp(p1).empty();
        std::remove(p1.c_str());
        std::remove(p2.c_str());
    }
    return s;
}

// ---------------------------------------------------------------- criterion 3

bool quantization_checks(const ReleaseStats& rel, double& acoustic_ratio) {
    std::mt19937 rng(300);

    // Grid scan: tensors already on the int8 grid round-trip exactly.
    for (int i = 0; i < 25; ++i) {
        const float scale = 0.001f + static_cast<float>(rng() % 1000) * 1e-5f;
        quant::QTensorI8 q;
        q.shape = {16, 8};
        q.scale = scale;
        for (int j = 0; j < 128; ++j)
            q.data.push_back(static_cast<int8_t>(static_cast<int>(rng() % 255) - 127));
        const TensorF32 deq = quant::dequantize(q);
        const quant::QTensorI8 back = quant::quantize(deq, scale);
        if (back.data != q.data) return false;
    }

    // Random scan: maxabs round-trip error <= scale/2 + 1e-7 everywhere.
    for (int i = 0; i < 50; ++i) {
        const int64_t rows = 4 + static_cast<int64_t>(rng() % 60);
        const int64_t cols = 4 + static_cast<int64_t>(rng() % 60);
        const TensorF32 w = oracle::random_tensor({rows, cols}, 3000 + i, -2.0f, 2.0f);
        const float scale = quant::calibrate(w, quant::CalibMethod::maxabs);
        const TensorF32 back = quant::dequantize(quant::quantize(w, scale));
        for (size_t j = 0; j < w.data.size(); ++j) {
            if (std::fabs(back.data[j] - w.data[j]) > scale * 0.5f + 1e-7f) return false;
        }
    }

    // INT8 payload is half the FP16 payload for the quantized tensors.
    if (std::fabs(rel.quant_vs_f16 - 0.5) > 0.005) return false;

    // Reduced INT8 acoustic vs baseline FP16 acoustic, stored bytes.
    acoustic_ratio = static_cast<double>(rel.opt_rep.components[1].stored_bytes) /
                     static_cast<double>(rel.base_rep.components[1].stored_bytes);
    return acoustic_ratio <= 0.10;
}

// ---------------------------------------------------------------- criterion 4

bool sparsity_checks(const ReleaseStats& rel, double& vocoder_ratio) {
    // Schedule endpoints and monotonicity.
    const sparse::PruneSchedule sched{0, 100, 0.78};
    if (sparse::sparsity_at(sched, 0) != 0.0) return false;
    if (sparse::sparsity_at(sched, 100) != 0.78) return false;
    if (sparse::sparsity_at(sched, 1000) != 0.78) return false;
    double prev = -1.0;
    for (int64_t t = 0; t <= 100; ++t) {
        const double v = sparse::sparsity_at(sched, t);
        if (v < prev) return false;
        prev = v;
    }

    // Prune vs full-sort oracle on 200 random matrices.
    std::mt19937 rng(400);
    const int64_t shapes[3][2] = {{16, 1}, {8, 2}, {4, 4}};
    for (int i = 0; i < 200; ++i) {
        const int64_t* bs = shapes[rng() % 3];
        const int64_t rows = bs[0] * (1 + static_cast<int64_t>(rng() % 8));
        const int64_t cols = bs[1] * (1 + static_cast<int64_t>(rng() % 8));
        const double target = static_cast<double>(rng() % 1000) / 1000.0;
        const TensorF32 w = oracle::random_tensor({rows, cols}, 4000 + i, -1.0f, 1.0f);
        const auto [mask, masked] = sparse::prune(w, target, bs[0], bs[1]);
        if (mask.keep != oracle::prune_mask(w, target, bs[0], bs[1])) return false;

        // sparse_matvec vs dense matvec over the densified matrix.
        const sparse::BlockSparseMatrix m = sparse::to_block_sparse(masked, mask);
        const TensorF32 x = oracle::random_tensor({cols}, 5000 + i);
        const std::vector<float> ys = sparse::sparse_matvec(m, x.data);
        const std::vector<float> yd = matvec(sparse::densify(m), x.data);
        for (size_t j = 0; j < ys.size(); ++j) {
            if (std::fabs(ys[j] - yd[j]) > 1e-6f) return false;
        }
    }

    // Pruned vs dense vocoder bytes at default targets, release dims.
    vocoder_ratio = static_cast<double>(rel.opt_rep.components[2].stored_bytes) /
                    static_cast<double>(rel.base_rep.components[2].stored_bytes);
    return vocoder_ratio >= 0.25 && vocoder_ratio <= 0.40;
}

// ---------------------------------------------------------------- criterion 5

bool subscale_conservation() {
    const vo::VocoderConfig cfg = vo::tiny_config();
    const ParamRegistry reg = vo::build_registry(cfg, 50);

    for (int64_t frames : {1, 2, 5, 7}) {
        ac::MelSpectrogram mel;
        mel.frames = oracle::random_tensor({frames, cfg.n_mels}, 500 + frames, -2.0f, 2.0f);

        const Waveform wav = vo::generate(reg, cfg, mel, 51);
        const int64_t iters = frames * cfg.frame_hop / 2;
        if (static_cast<int64_t>(wav.samples.size()) != 2 * iters) return false;
        if (static_cast<int64_t>(wav.samples.size()) != frames * cfg.frame_hop) return false;

        // Counting wrapper: exactly 2 categorical draws per iteration.
        const TensorF32 cond = vo::upsample_conditioning(reg, cfg, mel);
        if (cond.rows() != iters) return false;
        vo::VocoderState state(cfg.h, 51);
        for (int64_t i = 0; i < iters; ++i) {
            vo::vocoder_step(reg, cfg, state, cond.row(i));
            if (state.rng.draws() != 2 * (i + 1)) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------- criterion 6

bool e2e_determinism() {
    const TtsModel model = pipe::build_model({true, true, 60});
    const std::string text = "determinism check";

    std::vector<char> reference;
    for (int run = 0; run < 5; ++run) {
        const std::string path = temp_file("det.wav");
        const pipe::SynthResult r = pipe::synth(model, text, 9);
        write_wav(path, r.wav);
        const std::vector<char> bytes = slurp(path);
        std::remove(path.c_str());
        if (bytes.empty()) return false;
        if (run == 0)
            reference = bytes;
        else if (bytes != reference)
            return false;
    }

    // Streamed output is byte-identical to the one-shot file.
    const std::string spath = temp_file("det_stream.wav");
    {
        StreamingWavWriter writer(spath, model.vo_cfg.sample_rate);
        pipe::synth(model, text, 9,
                    [&](const int16_t* p, size_t n) { writer.append(p, n); }, 160);
        writer.finish();
    }
    const bool same = slurp(spath) == reference;
    std::remove(spath.c_str());
    return same;
}

// ---------------------------------------------------------------- criterion 7

bool container_integrity(const ReleaseStats& rel, double& total_ratio) {
    if (!rel.round_trip_ok || !rel.blobs_match_unique) return false;

    // The report is additive and equals the bytes actually written.
    for (const auto* rep : {&rel.base_rep, &rel.opt_rep}) {
        size_t sum = rep->header_bytes + rep->manifest_bytes;
        for (const auto& c : rep->components) sum += c.bytes;
        if (sum != rep->total_bytes) return false;
    }
    if (rel.base_rep.total_bytes != rel.base_file || rel.base_saved != rel.base_file)
        return false;
    if (rel.opt_rep.total_bytes != rel.opt_file || rel.opt_saved != rel.opt_file) return false;

    total_ratio = static_cast<double>(rel.opt_file) / static_cast<double>(rel.base_file);
    return total_ratio >= 0.2 && total_ratio <= 0.3;
}

// ---------------------------------------------------------------- criterion 8

bool latency_harness(double& base_total, double& opt_total, double& stage_gap) {
    // Seed 248 makes the presets emit near-equal audio (optimized ~5% more),
    // so the paired totals compare pipeline cost rather than workload luck.
    const TtsModel base = pipe::build_model({false, true, 248});
    const TtsModel opt = pipe::build_model({true, true, 248});
    const std::vector<std::string> sentences = {"the quick onset", "latency probe line",
                                                "a cold spring wind", "voices carry far",
                                                "benchmark this path"};

    const pipe::BenchReport rb = pipe::bench(base, sentences, 7, 2, 800);
    const pipe::BenchReport ro = pipe::bench(opt, sentences, 7, 2, 800);
    base_total = rb.total_ms;
    opt_total = ro.total_ms;

    double worst = 0.0;
    for (const auto* r : {&rb, &ro}) {
        const double sum = r->fe_ms + r->ac_ms + r->vo_ms;
        worst = std::max(worst, std::fabs(sum - r->total_ms) / r->total_ms);
        // RTF is computed and carries the 1.5-threshold flag.
        if (r->rtf <= 0.0) return false;
        if (r->rtf_above_threshold != (r->rtf > 1.5)) return false;
    }
    stage_gap = worst;
    return opt_total < base_total && worst <= 0.05;
}

// ---------------------------------------------------------------- criterion 9

bool kernel_oracles(double& worst) {
    worst = 0.0;
    std::mt19937 rng(900);
    auto track = [&](double d) {
        if (d > worst) worst = d;
        return d <= 1e-6;
    };

    for (int i = 0; i < 20; ++i) {
        const int64_t m = 2 + static_cast<int64_t>(rng() % 14);
        const int64_t k = 2 + static_cast<int64_t>(rng() % 30);
        const int64_t n = 2 + static_cast<int64_t>(rng() % 14);
        const TensorF32 a = oracle::random_tensor({m, k}, 9000 + i, -0.25f, 0.25f);
        const TensorF32 b = oracle::random_tensor({k, n}, 9100 + i, -0.25f, 0.25f);
        if (!track(oracle::max_abs_diff(matmul(a, b).data, oracle::matmul(a, b)))) return false;
    }

    for (int i = 0; i < 20; ++i) {
        const int64_t t = 3 + static_cast<int64_t>(rng() % 12);
        const int64_t ci = 1 + static_cast<int64_t>(rng() % 8);
        const int64_t co = 1 + static_cast<int64_t>(rng() % 8);
        const int64_t k = 1 + 2 * static_cast<int64_t>(rng() % 3);
        const TensorF32 x = oracle::random_tensor({t, ci}, 9200 + i, -0.25f, 0.25f);
        const TensorF32 w = oracle::random_tensor({k, ci, co}, 9300 + i, -0.25f, 0.25f);
        const TensorF32 b = oracle::random_tensor({co}, 9400 + i, -0.25f, 0.25f);
        if (!track(oracle::max_abs_diff(conv1d(x, w, b).data, oracle::conv1d(x, w, b))))
            return false;
    }

    for (int i = 0; i < 20; ++i) {
        const int64_t n = 2 + static_cast<int64_t>(rng() % 64);
        TensorF32 x = oracle::random_tensor({n}, 9500 + i, -4.0f, 4.0f);
        const std::vector<double> want = oracle::softmax(x.data);
        softmax_inplace(x.data.data(), n);
        if (!track(oracle::max_abs_diff(x.data, want))) return false;
    }

    for (int i = 0; i < 20; ++i) {
        const int64_t in = 2 + static_cast<int64_t>(rng() % 12);
        const int64_t hd = 2 + static_cast<int64_t>(rng() % 12);
        const TensorF32 w_ih = oracle::random_tensor({3 * hd, in}, 9600 + i, -0.25f, 0.25f);
        const TensorF32 w_hh = oracle::random_tensor({3 * hd, hd}, 9700 + i, -0.25f, 0.25f);
        const TensorF32 b = oracle::random_tensor({3 * hd}, 9800 + i, -0.25f, 0.25f);
        const TensorF32 x = oracle::random_tensor({in}, 9900 + i);
        const TensorF32 h = oracle::random_tensor({hd}, 9950 + i);
        const std::vector<float> got =
            gru_cell(x.data, h.data, w_ih,
                     [&](const std::vector<float>& hv) { return matvec(w_hh, hv); }, b);
        if (!track(oracle::max_abs_diff(got, oracle::gru_cell(x.data, h.data, w_ih, w_hh, b))))
            return false;
    }
    return true;
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();

    {
        const auto c1 = std::chrono::steady_clock::now();
        double max_delta = 0.0;
        const bool ok = kv_cache_equivalence(max_delta, 100);
        const double elapsed = seconds_since(c1);
        verdict(1, ok && elapsed < 60.0,
                "kv-cache equivalence on 100 pairs (max logit delta %.3g, %.1fs)", max_delta,
                elapsed);
    }

    {
        double ratio = 0.0;
        const bool ok = sharing_correctness(ratio);
        verdict(2, ok, "sharing correctness and accounting (shared/baseline FE bytes %.4f)",
                ratio);
    }

    const ReleaseStats rel = release_stats();

    {
        double acoustic_ratio = 0.0;
        const bool ok = quantization_checks(rel, acoustic_ratio);
        verdict(3, ok,
                "quantization round trip and accounting (int8/f16 %.4f, acoustic ratio %.4f)",
                rel.quant_vs_f16, acoustic_ratio);
    }

    {
        double vocoder_ratio = 0.0;
        const bool ok = sparsity_checks(rel, vocoder_ratio);
        verdict(4, ok, "sparsity schedule, oracle and footprint (vocoder ratio %.4f)",
                vocoder_ratio);
    }

    verdict(5, subscale_conservation(),
            "subscale conservation (2 samples and 2 draws per iteration)");

    verdict(6, e2e_determinism(), "end-to-end determinism (5 runs and streamed mode)");

    {
        double total_ratio = 0.0;
        const bool ok = container_integrity(rel, total_ratio);
        verdict(7, ok,
                "container integrity (optimized/baseline %.4f, per additional voice %zu bytes, "
                "reference ~5.7MB)",
                total_ratio, rel.opt_rep.per_voice_bytes);
    }

    {
        double base_total = 0.0, opt_total = 0.0, gap = 0.0;
        const bool ok = latency_harness(base_total, opt_total, gap);
        verdict(8, ok,
                "latency harness (baseline %.1fms vs optimized %.1fms, stage sum gap %.2f%%)",
                base_total, opt_total, gap * 100.0);
    }

    {
        double worst = 0.0;
        const bool ok = kernel_oracles(worst);
        const double elapsed = seconds_since(t0);
        verdict(9, ok && elapsed < 300.0,
                "kernel oracles within 1e-6 (worst %.3g) and suite runtime %.1fs", worst,
                elapsed);
    }

    return g_failures;
}
