#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctts/acoustic.hpp"
#include "ctts/inventory.hpp"
#include "ctts/modelfile.hpp"
#include "ctts/pipeline.hpp"
#include "ctts/vocoder.hpp"
#include "ctts/wav.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct InitOpts {
    std::string out;
    std::string preset = "baseline";
    std::string dims = "release";
    uint64_t seed = 0;
};

struct SynthOpts {
    std::string model;
    std::string text;
    std::string out;
    std::string mel_out;
    uint64_t seed = 0;
    bool stream = false;
    size_t chunk = 2048;
};

struct RequantOpts {
    std::string in;
    std::string out;
    std::string method = "maxabs";
    double percentile = 99.9;
};

struct PruneOpts {
    std::string in;
    std::string out;
    double target = 0.78;
    int64_t steps = 1;
};

struct BenchOpts {
    std::string model;
    std::string text_file;
    int iters = 20;
    int warmup = 3;
    uint64_t seed = 0;
};

std::string sibling_path(const std::string& model_path, const std::string& suffix) {
    const std::string ext = ".ctts";
    if (model_path.size() > ext.size() &&
        model_path.compare(model_path.size() - ext.size(), ext.size(), ext) == 0)
        return model_path.substr(0, model_path.size() - ext.size()) + suffix;
    return model_path + suffix;
}

int cmd_init_random(const InitOpts& o) {
    ctts::pipe::BuildOptions b;
    b.optimized = o.preset == "optimized";
    b.tiny = o.dims == "tiny";
    b.seed = o.seed;
    const ctts::TtsModel model = ctts::pipe::build_model(b);
    const size_t bytes = ctts::save(model, o.out);

    ctts::save_inventory(sibling_path(o.out, ".graphemes.txt"),
                         ctts::make_grapheme_inventory(model.fe_cfg.grapheme_vocab));
    ctts::save_inventory(sibling_path(o.out, ".phonemes.txt"),
                         ctts::make_phoneme_inventory(model.fe_cfg.phoneme_vocab));

    const ctts::FootprintReport rep = ctts::footprint_report(model);
    std::printf("wrote %s (%zu bytes, preset=%s dims=%s seed=%" PRIu64 ")\n", o.out.c_str(),
                bytes, o.preset.c_str(), o.dims.c_str(), o.seed);
    for (const auto& c : rep.components)
        std::printf("  %-8s %10" PRId64 " params %12zu bytes\n", c.name.c_str(),
                    c.physical_params, c.bytes);
    return kExitOk;
}

int cmd_synth(const SynthOpts& o) {
    const ctts::TtsModel model = ctts::load(o.model);

    ctts::pipe::SynthResult r;
    if (o.stream) {
        ctts::StreamingWavWriter writer(o.out, model.vo_cfg.sample_rate);
        r = ctts::pipe::synth(model, o.text, o.seed,
                              [&](const int16_t* s, size_t n) { writer.append(s, n); },
                              o.chunk);
        writer.finish();
    } else {
        r = ctts::pipe::synth(model, o.text, o.seed);
        ctts::write_wav(o.out, r.wav);
    }
    if (!o.mel_out.empty()) ctts::ac::write_mel(o.mel_out, r.mel);

    const double seconds =
        static_cast<double>(r.wav.samples.size()) / static_cast<double>(r.wav.sample_rate);
    std::printf("wrote %s: %zu samples (%.2f s), %zu phonemes, %" PRId64 " frames%s\n",
                o.out.c_str(), r.wav.samples.size(), seconds, r.phonemes.size(),
                r.mel.frames.shape[0], o.stream ? ", streamed" : "");
    std::printf("stages fe=%.2fms ac=%.2fms vo=%.2fms total=%.2fms\n", r.times.fe_ms,
                r.times.ac_ms, r.times.vo_ms, r.times.total_ms);
    return kExitOk;
}

int cmd_quantize(const RequantOpts& o) {
    ctts::TtsModel model = ctts::load(o.in);
    const ctts::quant::CalibMethod method = o.method == "percentile"
                                                ? ctts::quant::CalibMethod::percentile
                                                : ctts::quant::CalibMethod::maxabs;
    const ctts::pipe::QuantizeOutcome res =
        ctts::pipe::quantize_acoustic(model, method, o.percentile);

    std::printf("%-24s %12s %14s %12s\n", "tensor", "max_abs", "scale", "max_err");
    for (const auto& rep : res.reports)
        std::printf("%-24s %12.6f %14.9f %12.6f\n", rep.name.c_str(), rep.max_abs, rep.scale,
                    rep.max_err);
    for (const auto& slot : res.skipped)
        std::printf("%-24s already quantized, skipped\n", slot.c_str());

    const size_t bytes = ctts::save(model, o.out);
    std::printf("quantized %zu tensors (%zu skipped), wrote %s (%zu bytes)\n",
                res.reports.size(), res.skipped.size(), o.out.c_str(), bytes);
    return kExitOk;
}

int cmd_prune(const PruneOpts& o) {
    ctts::TtsModel model = ctts::load(o.in);
    const std::vector<ctts::pipe::PruneTraceRow> trace =
        ctts::pipe::prune_vocoder(model, o.target, o.steps);

    std::printf("%6s %12s %12s\n", "step", "scheduled", "achieved");
    for (const auto& row : trace)
        std::printf("%6" PRId64 " %12.6f %12.6f\n", row.step, row.scheduled * o.target,
                    row.achieved);

    const size_t bytes = ctts::save(model, o.out);
    std::printf("pruned to target %.4f in %" PRId64 " steps, wrote %s (%zu bytes)\n", o.target,
                o.steps, o.out.c_str(), bytes);
    return kExitOk;
}

int cmd_bench(const BenchOpts& o) {
    const ctts::TtsModel model = ctts::load(o.model);

    std::ifstream f(o.text_file);
    if (!f) throw ctts::IoError("cannot open text file: " + o.text_file);
    std::vector<std::string> sentences;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) sentences.push_back(line);
    }
    if (sentences.empty()) throw ctts::InputError("text file has no sentences: " + o.text_file);

    const ctts::pipe::BenchReport rep =
        ctts::pipe::bench(model, sentences, o.iters, o.warmup, o.seed);

    std::printf("%zu sentences, %d iterations after %d warmup, %d worker(s)\n", rep.sentences,
                rep.iterations, rep.warmup, rep.threads);
    std::printf("%-10s %12s\n", "stage", "median ms");
    std::printf("%-10s %12.3f\n", "frontend", rep.fe_ms);
    std::printf("%-10s %12.3f\n", "acoustic", rep.ac_ms);
    std::printf("%-10s %12.3f\n", "vocoder", rep.vo_ms);
    std::printf("%-10s %12.3f\n", "total", rep.total_ms);
    std::printf("audio %.3f ms, rtf %.4f%s\n", rep.audio_ms, rep.rtf,
                rep.rtf_above_threshold ? " (above 1.5)" : "");
    std::printf("BENCH fe_ms=%.6f ac_ms=%.6f vo_ms=%.6f total_ms=%.6f audio_ms=%.6f rtf=%.6f "
                "rtf_above_threshold=%d iterations=%d warmup=%d threads=%d sentences=%zu\n",
                rep.fe_ms, rep.ac_ms, rep.vo_ms, rep.total_ms, rep.audio_ms, rep.rtf,
                rep.rtf_above_threshold ? 1 : 0, rep.iterations, rep.warmup, rep.threads,
                rep.sentences);
    return kExitOk;
}

int cmd_inspect(const std::string& path) {
    const ctts::TtsModel model = ctts::load(path);
    const ctts::FootprintReport rep = ctts::footprint_report(model);

    std::printf("%s\n", path.c_str());
    std::printf("  frontend plan: %s (%d enc, %d dec)\n",
                model.fe_plan.mode == ctts::fe::PlanMode::shared ? "shared" : "baseline",
                model.fe_cfg.n_enc, model.fe_cfg.n_dec);
    std::printf("  acoustic preset: %s\n", model.ac_cfg.preset.c_str());
    std::printf("  header   %zu bytes, manifest %zu bytes\n", rep.header_bytes,
                rep.manifest_bytes);
    std::printf("  %-8s %12s %12s %12s %10s %6s %6s\n", "module", "bytes", "stored", "logical",
                "params", "blobs", "slots");
    for (const auto& c : rep.components) {
        std::printf("  %-8s %12zu %12zu %12zu %10" PRId64 " %6zu %6zu\n", c.name.c_str(),
                    c.bytes, c.stored_bytes, c.logical_bytes, c.physical_params, c.blobs,
                    c.slots);
        if (c.logical_bytes > c.stored_bytes)
            std::printf("  %-8s sharing saves %zu bytes\n", "",
                        c.logical_bytes - c.stored_bytes);
    }

    const ctts::vo::VocoderFootprint vf = ctts::vo::vocoder_footprint(model.vo_reg, model.vo_cfg);
    for (const auto& row : vf.rows)
        if (row.sparsity > 0.0)
            std::printf("  %-24s %s sparsity %.4f (%zu bytes)\n", row.name.c_str(),
                        row.dtype.c_str(), row.sparsity, row.bytes);

    std::printf("  total %zu bytes, per additional voice %zu bytes\n", rep.total_bytes,
                rep.per_voice_bytes);
    std::printf("FOOTPRINT total_bytes=%zu per_voice_bytes=%zu manifest_bytes=%zu\n",
                rep.total_bytes, rep.per_voice_bytes, rep.manifest_bytes);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compact neural text-to-speech engine"};
    app.require_subcommand(1);

    InitOpts init_o;
    CLI::App* init = app.add_subcommand("init-random", "create a random-weight model file");
    init->alias("init_random");
    init->add_option("--out", init_o.out, "output .ctts path")->required();
    init->add_option("--seed", init_o.seed, "init seed");
    init->add_option("--preset", init_o.preset, "baseline|optimized")
        ->check(CLI::IsMember({"baseline", "optimized"}));
    init->add_option("--dims", init_o.dims, "release|tiny")
        ->check(CLI::IsMember({"release", "tiny"}));

    SynthOpts synth_o;
    CLI::App* synth = app.add_subcommand("synth", "synthesize text to a wav file");
    synth->add_option("--model", synth_o.model, "model .ctts path")->required();
    synth->add_option("--text", synth_o.text, "text to speak")->required();
    synth->add_option("--out", synth_o.out, "output wav path")->required();
    synth->add_option("--seed", synth_o.seed, "sampling seed");
    synth->add_flag("--stream", synth_o.stream, "write audio in chunks as it is generated");
    synth->add_option("--chunk", synth_o.chunk, "chunk size in samples for --stream");
    synth->add_option("--mel-out", synth_o.mel_out, "also dump the mel spectrogram");

    RequantOpts quant_o;
    CLI::App* quantize = app.add_subcommand("quantize", "quantize acoustic weights to int8");
    quantize->add_option("--in", quant_o.in, "input .ctts path")->required();
    quantize->add_option("--out", quant_o.out, "output .ctts path")->required();
    quantize->add_option("--method", quant_o.method, "maxabs|percentile")
        ->check(CLI::IsMember({"maxabs", "percentile"}));
    quantize->add_option("--percentile", quant_o.percentile, "percentile for --method percentile");

    PruneOpts prune_o;
    CLI::App* prune = app.add_subcommand("prune", "block-prune the vocoder");
    prune->add_option("--in", prune_o.in, "input .ctts path")->required();
    prune->add_option("--out", prune_o.out, "output .ctts path")->required();
    prune->add_option("--target", prune_o.target, "final block sparsity in [0, 1)");
    prune->add_option("--steps", prune_o.steps, "schedule steps");

    BenchOpts bench_o;
    CLI::App* bench = app.add_subcommand("bench", "measure per-stage latency");
    bench->add_option("--model", bench_o.model, "model .ctts path")->required();
    bench->add_option("--text-file", bench_o.text_file, "one sentence per line")->required();
    bench->add_option("--iters", bench_o.iters, "timed iterations");
    bench->add_option("--warmup", bench_o.warmup, "warmup iterations");
    bench->add_option("--seed", bench_o.seed, "sampling seed base");

    std::string inspect_path;
    CLI::App* inspect = app.add_subcommand("inspect", "report model footprint");
    inspect->add_option("--model", inspect_path, "model .ctts path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (app.got_subcommand(init)) return cmd_init_random(init_o);
        if (app.got_subcommand(synth)) {
            if (synth_o.text.empty()) throw ctts::ArgumentError("--text must not be empty");
            if (synth_o.chunk == 0) throw ctts::ArgumentError("--chunk must be positive");
            return cmd_synth(synth_o);
        }
        if (app.got_subcommand(quantize)) {
            if (quant_o.percentile <= 0.0 || quant_o.percentile > 100.0)
                throw ctts::ArgumentError("--percentile must be in (0, 100]");
            return cmd_quantize(quant_o);
        }
        if (app.got_subcommand(prune)) {
            if (prune_o.target < 0.0 || prune_o.target >= 1.0)
                throw ctts::ArgumentError("--target must be in [0, 1)");
            if (prune_o.steps < 1) throw ctts::ArgumentError("--steps must be >= 1");
            return cmd_prune(prune_o);
        }
        if (app.got_subcommand(bench)) {
            if (bench_o.iters < 1) throw ctts::ArgumentError("--iters must be >= 1");
            if (bench_o.warmup < 0) throw ctts::ArgumentError("--warmup must be >= 0");
            return cmd_bench(bench_o);
        }
        if (app.got_subcommand(inspect)) return cmd_inspect(inspect_path);
    } catch (const ctts::ArgumentError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const ctts::InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const ctts::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
