#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ctts/registry.hpp"
#include "ctts/tensor.hpp"

namespace ctts::ac {

// FastSpeech2-style non-autoregressive acoustic model: FFT blocks
// (self-attention + kx1 conv feed-forward), variance adaptors for
// duration/pitch/energy, length regulator, linear mel head.
struct AcousticConfig {
    int32_t d_model = 256;
    int32_t heads = 2;
    int32_t n_enc_blocks = 3;
    int32_t n_dec_blocks = 3;
    int32_t conv_channels = 1024;
    int32_t conv_kernel = 7;
    int32_t n_mels = 80;
    int32_t n_var_bins = 256;
    int32_t var_channels = 256;
    int32_t var_kernel = 3;
    float pitch_min = 60.0f, pitch_max = 400.0f;
    float energy_min = 0.0f, energy_max = 8.0f;
    int32_t phoneme_vocab = 512;
    std::string preset = "baseline";  // baseline | reduced
};

// The reduced preset shrinks the conv feed-forward (fewer and narrower
// filters) and drops one block per stack; everything else matches baseline.
AcousticConfig release_config(bool reduced);
AcousticConfig tiny_config(bool reduced);

void validate(const AcousticConfig& cfg);

ParamRegistry build_registry(const AcousticConfig& cfg, uint64_t seed);

struct MelSpectrogram {
    TensorF32 frames;        // [T x n_mels]
    int32_t frame_hop = 0;   // samples per frame, filled in by the pipeline
};

struct Variances {
    std::vector<int64_t> duration;  // frames per phoneme, >= 0
    std::vector<float> pitch;       // raw per-phoneme predictions
    std::vector<float> energy;
};

// Phoneme embedding + position encoding + n_enc_blocks FFT blocks.
TensorF32 encode_phonemes(const ParamRegistry& reg, const AcousticConfig& cfg,
                          const std::vector<int32_t>& phonemes);

// duration = max(0, round_half_away_from_zero(exp(log_dur) - 1)); pitch and
// energy stay raw floats.
Variances predict_variances(const ParamRegistry& reg, const AcousticConfig& cfg,
                            const TensorF32& hidden);

// Repeat row i durations[i] times; zero-duration rows are dropped.
TensorF32 length_regulate(const TensorF32& hidden, const std::vector<int64_t>& durations);
std::vector<float> expand_by_duration(const std::vector<float>& values,
                                      const std::vector<int64_t>& durations);

// clamp to [lo, hi], then linear bucket over n_bins.
int32_t bucket_index(float value, float lo, float hi, int32_t n_bins);

// Adds pitch/energy bucket embeddings (frame-granular) onto the expanded
// hidden sequence in place.
void add_variance_embeddings(const ParamRegistry& reg, const AcousticConfig& cfg,
                             TensorF32& expanded, const std::vector<float>& pitch,
                             const std::vector<float>& energy);

// n_dec_blocks FFT blocks + linear projection to n_mels.
MelSpectrogram decode_mel(const ParamRegistry& reg, const AcousticConfig& cfg,
                          const TensorF32& conditioned);

// Full stage. If every predicted duration rounds to 0, the first phoneme is
// forced to 1 frame so non-empty input always yields audio.
std::pair<MelSpectrogram, Variances> acoustic_infer(const ParamRegistry& reg,
                                                    const AcousticConfig& cfg,
                                                    const std::vector<int32_t>& phonemes);

// Quantization policy: matmul/conv weight tensors only; embeddings, biases
// and layer norms stay at storage dtype.
bool quantizable_slot(const std::string& slot);

// Flat binary mel dump: magic "MEL0", u32 T, u32 n_mels, then row-major f32,
// all little-endian.
void write_mel(const std::string& path, const MelSpectrogram& mel);
MelSpectrogram read_mel(const std::string& path);

}  // namespace ctts::ac
