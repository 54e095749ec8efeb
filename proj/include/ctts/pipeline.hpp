#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ctts/modelfile.hpp"
#include "ctts/quant.hpp"
#include "ctts/vocoder.hpp"

namespace ctts::pipe {

struct BuildOptions {
    bool optimized = false;  // shared frontend, quantized acoustic, pruned vocoder
    bool tiny = false;       // scaled-down dims for fast tests
    uint64_t seed = 0;
};

// Deterministic random-weight model. Components draw from independent seed
// streams (seed, seed+1, seed+2). The baseline preset is fully dense; the
// optimized preset applies quantization and pruning right after init.
TtsModel build_model(const BuildOptions& opt);

struct QuantizeOutcome {
    std::vector<quant::CalibReport> reports;
    std::vector<std::string> skipped;  // slots that were already int8
};

// Quantizes every eligible acoustic weight matrix in place. Idempotent:
// re-running skips already-quantized slots and reports them.
QuantizeOutcome quantize_acoustic(TtsModel& model, quant::CalibMethod method,
                                  double percentile = 99.9);

struct PruneTraceRow {
    int64_t step = 0;
    double scheduled = 0.0;  // schedule value at this step
    double achieved = 0.0;   // mean achieved block sparsity across sparse slots
};

// Walks the cubic schedule over `steps` steps, pruning the sparse vocoder
// slots toward their targets. Masks only ever grow between steps. The final
// step switches the slots to block-sparse storage and records the targets in
// the vocoder config.
std::vector<PruneTraceRow> prune_vocoder(TtsModel& model,
                                         const std::map<std::string, float>& targets,
                                         int64_t steps);
// Same target for every sparse slot.
std::vector<PruneTraceRow> prune_vocoder(TtsModel& model, double target, int64_t steps);

struct StageTimes {
    double fe_ms = 0.0, ac_ms = 0.0, vo_ms = 0.0, total_ms = 0.0;
};

struct SynthResult {
    std::vector<int32_t> phonemes;  // g2p output; the terminating EOS is kept
    ac::MelSpectrogram mel;
    ac::Variances variances;
    Waveform wav;
    StageTimes times;
};

// Full text-to-waveform pass. The EOS token rides through the acoustic stage
// like a silence marker, so non-empty text always yields at least one frame.
SynthResult synth(const TtsModel& model, const std::string& text, uint64_t seed,
                  const vo::ChunkConsumer& consumer = nullptr, size_t chunk_size = 2048);

struct BenchReport {
    // Medians across iterations of the per-iteration sums over sentences.
    double fe_ms = 0.0, ac_ms = 0.0, vo_ms = 0.0, total_ms = 0.0;
    double audio_ms = 0.0;  // synthesized audio duration per iteration
    double rtf = 0.0;       // audio_ms / total_ms
    bool rtf_above_threshold = false;  // rtf > 1.5, reported but never asserted
    int iterations = 0;
    int warmup = 0;
    int threads = 1;
    size_t sentences = 0;
};

// Runs `warmup` throwaway rounds, then `iterations` timed rounds over the
// sentence list. Sentence i always synthesizes with seed + i, so every round
// does identical work. Per-stage cost is summed over sentences even when
// sentences run on CTTS_THREADS workers, which keeps stage sums comparable
// to the total.
BenchReport bench(const TtsModel& model, const std::vector<std::string>& sentences,
                  int iterations, int warmup, uint64_t seed);

}  // namespace ctts::pipe
