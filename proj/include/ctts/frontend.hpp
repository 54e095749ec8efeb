#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctts/inventory.hpp"
#include "ctts/registry.hpp"
#include "ctts/tensor.hpp"

namespace ctts::fe {

// Sentence-level G2P transformer. Depth is allocated deep-encoder /
// shallow-decoder; the optimized preset moves almost all layers into the
// encoder because the decoder runs once per output token.
struct FrontendConfig {
    int32_t n_enc = 16;
    int32_t n_dec = 5;
    int32_t d_model = 192;
    int32_t heads = 4;
    int32_t d_ff = 768;
    int32_t grapheme_vocab = 28672;
    int32_t phoneme_vocab = 512;
    int32_t max_len = 512;
};

enum class PlanMode { baseline, shared };

// baseline: every layer owns its weights. shared: two physical attention
// sets serve all layers (encoder alternates A/B by layer parity, decoder
// self-attention ties to A, cross-attention to B) and one physical FFN set
// serves every encoder layer. Biases and layer norms never alias.
struct SharingPlan {
    PlanMode mode = PlanMode::baseline;
};

// 16-5 / 20-1 presets at release dims and scaled-down test dims.
FrontendConfig release_config(bool optimized);
FrontendConfig tiny_config(bool optimized);
inline SharingPlan plan_for(bool optimized) {
    return SharingPlan{optimized ? PlanMode::shared : PlanMode::baseline};
}

void validate(const FrontendConfig& cfg, const SharingPlan& plan);

// Seeded deterministic build: weights uniform in +-1/sqrt(fan_in) snapped to
// f16, biases zero, layer norm gains one. Same seed, same registry.
ParamRegistry build_registry(const FrontendConfig& cfg, const SharingPlan& plan, uint64_t seed);

struct ParamCount {
    int64_t params = 0;
    size_t bytes_at(Dtype dtype) const { return static_cast<size_t>(params) * dtype_bytes(dtype); }
};
// Distinct physical parameters only; shared slots counted once.
ParamCount unique_param_count(const FrontendConfig& cfg, const SharingPlan& plan);

// Runs the encoder stack over grapheme ids -> [len x d_model] memory.
TensorF32 encode(const ParamRegistry& reg, const FrontendConfig& cfg,
                 const std::vector<int32_t>& graphemes);

// Per-layer self-attention K/V appended step by step; cross-attention K/V
// projected from the encoder memory exactly once at init.
struct DecoderCache {
    std::vector<KVCacheLayer> self_kv;
    std::vector<KVCacheLayer> cross_kv;
    int64_t steps = 0;
    bool initialized = false;
};

DecoderCache init_decoder_cache(const ParamRegistry& reg, const FrontendConfig& cfg,
                                const TensorF32& memory);

// One autoregressive step: appends to the cache and returns logits over the
// phoneme vocabulary for the next token.
std::vector<float> decode_step(const ParamRegistry& reg, const FrontendConfig& cfg,
                               DecoderCache& cache, int32_t prev_token);

// Cache-free teacher-forced decoder pass over a full target sequence;
// reference path for cache equivalence checks. Returns [T x phoneme_vocab].
TensorF32 decode_full(const ParamRegistry& reg, const FrontendConfig& cfg,
                      const TensorF32& memory, const std::vector<int32_t>& targets);

// Greedy argmax over phoneme logits; PAD is never emitted, ties go to the
// lowest token id. Returns kPadId-free ids ending with EOS unless max_len
// cut generation short.
std::vector<int32_t> g2p(const ParamRegistry& reg, const FrontendConfig& cfg,
                         const TokenInventory& graphemes, const std::string& text);

}  // namespace ctts::fe
