#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "ctts/common.hpp"

namespace ctts {

// Dense row-major FP32 tensor. This is the only compute type in the engine;
// FP16 and INT8 exist purely as storage encodings in the model container.
struct TensorF32 {
    std::vector<int64_t> shape;
    std::vector<float> data;

    TensorF32() = default;
    TensorF32(std::vector<int64_t> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != static_cast<int64_t>(data.size()))
            throw ShapeError("tensor data size does not match shape");
    }

    static int64_t numel_of(const std::vector<int64_t>& s) {
        int64_t n = 1;
        for (int64_t d : s) n *= d;
        return n;
    }

    static TensorF32 zeros(std::vector<int64_t> s) {
        const int64_t n = numel_of(s);
        return TensorF32(std::move(s), std::vector<float>(static_cast<size_t>(n), 0.0f));
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int64_t rows() const { return shape.empty() ? 0 : shape[0]; }
    int64_t cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }

    float& at(int64_t r, int64_t c) { return data[static_cast<size_t>(r * cols() + c)]; }
    float at(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * cols() + c)]; }

    const float* row(int64_t r) const { return data.data() + r * cols(); }
    float* row(int64_t r) { return data.data() + r * cols(); }
};

// Projection weights for one attention block. The four weight matrices form
// the shareable unit; biases stay per-layer (layer specific adaptation).
struct AttentionParams {
    TensorF32 wq, wk, wv, wo;  // [d_model x d_model], applied as y = x * W
    TensorF32 bq, bk, bv, bo;  // [d_model]
};

// Non-owning view used by model forwards so shared physical tensors are not
// copied per call.
struct AttentionView {
    const TensorF32 *wq, *wk, *wv, *wo;
    const TensorF32 *bq, *bk, *bv, *bo;
};

inline AttentionView view_of(const AttentionParams& p) {
    return AttentionView{&p.wq, &p.wk, &p.wv, &p.wo, &p.bq, &p.bk, &p.bv, &p.bo};
}

enum class Mask { none, causal };

// Appended key/value memory for one attention site. Projected K and V rows,
// one per cached position.
struct KVCacheLayer {
    TensorF32 k;  // [len x d_model]
    TensorF32 v;  // [len x d_model]
    int64_t len() const { return k.shape.empty() ? 0 : k.shape[0]; }
};

// y = a * b with a fixed left-to-right summation over the inner dimension.
// Deterministic and bit-reproducible; oracle tests rely on the order.
TensorF32 matmul(const TensorF32& a, const TensorF32& b);

// y = x * W + b for [T x in] inputs.
TensorF32 linear(const TensorF32& x, const TensorF32& w, const TensorF32& b);

// Dense matvec y = W * x for [out x in] weight layout.
std::vector<float> matvec(const TensorF32& w, const std::vector<float>& x);

// 1-D convolution over time with "same" zero padding.
//   x: [T x C_in], w: [K x C_in x C_out] (K odd), b: [C_out] -> [T x C_out]
// Accumulation order is fixed: bias, then kernel tap, then input channel.
TensorF32 conv1d(const TensorF32& x, const TensorF32& w, const TensorF32& b);

// Row-wise layer norm over the last dimension.
TensorF32 layer_norm(const TensorF32& x, const TensorF32& gamma, const TensorF32& beta,
                     float eps = 1e-5f);

// Numerically stable softmax over a vector (max subtraction first).
TensorF32 softmax(const TensorF32& x);
void softmax_inplace(float* x, int64_t n);

// Scaled dot-product attention with projections.
//   q_in:  [Tq x d]   pre-projection queries
//   kv_in: [Tkv x d]  pre-projection keys/values
// Without a cache, K/V come from kv_in and `mask` applies (causal requires
// Tq == Tkv). With a cache, K/V of kv_in (if non-empty) are appended first
// and every query row then attends over the full cache; q_in is expected to
// be a single step in that mode.
TensorF32 multi_head_attention(const TensorF32& q_in, const TensorF32& kv_in,
                               const AttentionView& params, int heads, Mask mask,
                               KVCacheLayer* cache = nullptr);
TensorF32 multi_head_attention(const TensorF32& q_in, const TensorF32& kv_in,
                               const AttentionParams& params, int heads, Mask mask,
                               KVCacheLayer* cache = nullptr);

// Project kv_in through the layer's K/V weights and append to the cache
// without attending. Used to prefill cross-attention memory once.
void append_kv(KVCacheLayer& cache, const TensorF32& kv_in, const AttentionView& params,
               int heads);

// Hidden-to-hidden matvec provider: maps h [hdim] -> [3*hdim] gate
// pre-activations. Abstract so the vocoder can plug in a block-sparse matrix.
using MatvecProvider = std::function<std::vector<float>(const std::vector<float>&)>;

// One GRU step. Gates are stacked (update, reset, candidate):
//   z = sigmoid(a_z + u_z + b_z)
//   r = sigmoid(a_r + u_r + b_r)
//   n = tanh(a_n + r .* u_n + b_n)
//   h' = (1 - z) .* h + z .* n
// where a = w_ih * x and u = w_hh(h).
std::vector<float> gru_cell(const std::vector<float>& x, const std::vector<float>& h,
                            const TensorF32& w_ih, const MatvecProvider& w_hh,
                            const TensorF32& b);

// Row gather: table [V x d], ids in [0, V).
TensorF32 embedding_lookup(const TensorF32& table, const std::vector<int32_t>& ids);

// Fixed sinusoidal position encodings, added in place starting at `offset`.
void add_position_encoding(TensorF32& x, int64_t offset = 0);

void relu_inplace(TensorF32& x);
void add_inplace(TensorF32& x, const TensorF32& y);

}  // namespace ctts
