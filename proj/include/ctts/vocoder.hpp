#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ctts/acoustic.hpp"
#include "ctts/registry.hpp"
#include "ctts/wav.hpp"

namespace ctts::vo {

// Subscale WaveRNN: one GRU whose hidden-to-hidden weights are block-sparse,
// followed by two sparse post-net branches that each emit one mu-law sample
// per iteration (two samples total). Input-to-hidden and the conditioning
// projection stay dense.
struct VocoderConfig {
    int32_t h = 1024;
    int32_t d = 512;
    int32_t n_classes = 256;  // fixed: 8-bit mu-law
    int32_t sample_rate = 24000;
    int32_t frame_hop = 256;
    int32_t subscale_factor = 2;  // fixed: two samples per iteration
    int32_t cond_dim = 128;
    int32_t emb_dim = 64;
    int32_t n_mels = 80;
    int64_t block_rows = 16;
    int64_t block_cols = 1;
    // Pruning targets keyed by parameter slot.
    std::map<std::string, float> sparsity;
};

VocoderConfig release_config();
VocoderConfig tiny_config();

void validate(const VocoderConfig& cfg);

ParamRegistry build_registry(const VocoderConfig& cfg, uint64_t seed);

// Slots eligible for block-sparse storage: GRU hidden-to-hidden plus the
// four post-net matrices.
const std::vector<std::string>& sparse_slots();

// mu = 255 companding over [-1, 1] onto 256 classes; class 128 is exact zero.
int32_t mu_law_encode(float x);
float mu_law_decode(int32_t c);

// Seeded sampling stream. Floats map from raw mt19937 words; `draws` counts
// categorical samples taken (the contract is exactly 2 per iteration).
class SampleRng {
public:
    explicit SampleRng(uint64_t seed) : engine_(static_cast<uint32_t>(seed)) {}

    float next_unit();  // [0, 1)
    int32_t sample_categorical(const std::vector<float>& probs);
    int64_t draws() const { return draws_; }

private:
    std::mt19937 engine_;
    int64_t draws_ = 0;
};

struct VocoderState {
    std::vector<float> hidden;  // [h]
    int32_t prev_a = 128, prev_b = 128;
    SampleRng rng;

    VocoderState(int32_t h, uint64_t seed)
        : hidden(static_cast<size_t>(h), 0.0f), rng(seed) {}
};

// Each mel frame is linearly projected to a conditioning vector and repeated
// frame_hop / 2 times: one vector per RNN iteration.
TensorF32 upsample_conditioning(const ParamRegistry& reg, const VocoderConfig& cfg,
                                const ac::MelSpectrogram& mel);

// One iteration: GRU update on concat(cond, embedded previous pair), branch A
// samples the first class, branch B is conditioned on branch A's sample and
// samples the second. Consumes exactly 2 rng draws.
std::pair<int32_t, int32_t> vocoder_step(const ParamRegistry& reg, const VocoderConfig& cfg,
                                         VocoderState& state, const float* cond);

// Ordered PCM chunks during generation; concatenation is bit-identical to the
// returned waveform.
using ChunkConsumer = std::function<void(const int16_t*, size_t)>;

Waveform generate(const ParamRegistry& reg, const VocoderConfig& cfg,
                  const ac::MelSpectrogram& mel, uint64_t seed,
                  const ChunkConsumer& consumer = nullptr, size_t chunk_size = 2048);

struct FootprintRow {
    std::string name;
    std::string dtype;
    size_t bytes = 0;
    double sparsity = 0.0;  // fraction of blocks pruned; 0 for dense rows
};

struct VocoderFootprint {
    std::vector<FootprintRow> rows;
    size_t total_bytes = 0;
};

VocoderFootprint vocoder_footprint(const ParamRegistry& reg, const VocoderConfig& cfg);

}  // namespace ctts::vo
