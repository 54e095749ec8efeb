#include "ctts/tensor.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace ctts {

namespace {

void require_2d(const TensorF32& t, const char* what) {
    if (t.shape.size() != 2) throw ShapeError(std::string(what) + ": expected a 2-D tensor");
}

}  // namespace

TensorF32 matmul(const TensorF32& a, const TensorF32& b) {
    require_2d(a, "matmul lhs");
    require_2d(b, "matmul rhs");
    const int64_t m = a.shape[0], k = a.shape[1], k2 = b.shape[0], n = b.shape[1];
    if (k != k2)
        throw ShapeError("matmul: inner dims mismatch " + std::to_string(k) + " vs " +
                         std::to_string(k2));
    TensorF32 out = TensorF32::zeros({m, n});
    for (int64_t i = 0; i < m; ++i) {
        const float* arow = a.row(i);
        float* orow = out.row(i);
        for (int64_t l = 0; l < k; ++l) {
            const float av = arow[l];
            const float* brow = b.row(l);
            for (int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

TensorF32 linear(const TensorF32& x, const TensorF32& w, const TensorF32& b) {
    TensorF32 out = matmul(x, w);
    const int64_t n = out.shape[1];
    if (b.numel() != n) throw ShapeError("linear: bias length mismatch");
    for (int64_t i = 0; i < out.shape[0]; ++i) {
        float* orow = out.row(i);
        for (int64_t j = 0; j < n; ++j) orow[j] += b.data[static_cast<size_t>(j)];
    }
    return out;
}

std::vector<float> matvec(const TensorF32& w, const std::vector<float>& x) {
    require_2d(w, "matvec");
    const int64_t rows = w.shape[0], cols = w.shape[1];
    if (cols != static_cast<int64_t>(x.size())) throw ShapeError("matvec: length mismatch");
    std::vector<float> out(static_cast<size_t>(rows), 0.0f);
    for (int64_t i = 0; i < rows; ++i) {
        const float* wrow = w.row(i);
        float acc = 0.0f;
        for (int64_t j = 0; j < cols; ++j) acc += wrow[j] * x[static_cast<size_t>(j)];
        out[static_cast<size_t>(i)] = acc;
    }
    return out;
}

TensorF32 conv1d(const TensorF32& x, const TensorF32& w, const TensorF32& b) {
    require_2d(x, "conv1d input");
    if (w.shape.size() != 3) throw ShapeError("conv1d: weight must be [K x C_in x C_out]");
    const int64_t t_len = x.shape[0], c_in = x.shape[1];
    const int64_t k = w.shape[0], wc_in = w.shape[1], c_out = w.shape[2];
    if (k % 2 == 0) throw ConfigError("conv1d: kernel size must be odd for same padding");
    if (wc_in != c_in) throw ShapeError("conv1d: channel mismatch");
    if (b.numel() != c_out) throw ShapeError("conv1d: bias length mismatch");
    const int64_t half = k / 2;
    TensorF32 out = TensorF32::zeros({t_len, c_out});
    for (int64_t t = 0; t < t_len; ++t) {
        float* orow = out.row(t);
        for (int64_t co = 0; co < c_out; ++co) orow[co] = b.data[static_cast<size_t>(co)];
        for (int64_t kk = 0; kk < k; ++kk) {
            const int64_t src = t + kk - half;
            if (src < 0 || src >= t_len) continue;  // zero padding
            const float* xrow = x.row(src);
            for (int64_t ci = 0; ci < c_in; ++ci) {
                const float xv = xrow[ci];
                const float* wrow = w.data.data() + (kk * c_in + ci) * c_out;
                for (int64_t co = 0; co < c_out; ++co) orow[co] += xv * wrow[co];
            }
        }
    }
    return out;
}

TensorF32 layer_norm(const TensorF32& x, const TensorF32& gamma, const TensorF32& beta,
                     float eps) {
    const int64_t d = x.shape.empty() ? 0 : x.shape.back();
    if (d < 1) throw ShapeError("layer_norm: last dim must be >= 1");
    if (gamma.numel() != d || beta.numel() != d) throw ShapeError("layer_norm: param length mismatch");
    const int64_t rows = x.numel() / d;
    TensorF32 out(x.shape, std::vector<float>(x.data.size()));
    for (int64_t r = 0; r < rows; ++r) {
        const float* xr = x.data.data() + r * d;
        float* orow = out.data.data() + r * d;
        float mean = 0.0f;
        for (int64_t j = 0; j < d; ++j) mean += xr[j];
        mean /= static_cast<float>(d);
        float var = 0.0f;
        for (int64_t j = 0; j < d; ++j) {
            const float c = xr[j] - mean;
            var += c * c;
        }
        var /= static_cast<float>(d);
        const float inv = 1.0f / std::sqrt(var + eps);
        for (int64_t j = 0; j < d; ++j)
            orow[j] = (xr[j] - mean) * inv * gamma.data[static_cast<size_t>(j)] +
                      beta.data[static_cast<size_t>(j)];
    }
    return out;
}

void softmax_inplace(float* x, int64_t n) {
    float mx = x[0];
    for (int64_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    float sum = 0.0f;
    for (int64_t i = 0; i < n; ++i) {
        x[i] = std::exp(x[i] - mx);
        sum += x[i];
    }
    const float inv = 1.0f / sum;
    for (int64_t i = 0; i < n; ++i) x[i] *= inv;
}

TensorF32 softmax(const TensorF32& x) {
    if (x.numel() < 1) throw ShapeError("softmax: need at least one element");
    TensorF32 out = x;
    softmax_inplace(out.data.data(), out.numel());
    return out;
}

namespace {

// Project one input through W [d x d] + b and append the rows to dst.
void append_projected(TensorF32& dst, const TensorF32& src, const TensorF32& w,
                      const TensorF32& b) {
    TensorF32 proj = linear(src, w, b);
    if (dst.shape.empty()) {
        dst = std::move(proj);
        return;
    }
    dst.data.insert(dst.data.end(), proj.data.begin(), proj.data.end());
    dst.shape[0] += proj.shape[0];
}

}  // namespace

void append_kv(KVCacheLayer& cache, const TensorF32& kv_in, const AttentionView& p, int heads) {
    (void)heads;
    if (kv_in.numel() == 0) return;
    append_projected(cache.k, kv_in, *p.wk, *p.bk);
    append_projected(cache.v, kv_in, *p.wv, *p.bv);
}

TensorF32 multi_head_attention(const TensorF32& q_in, const TensorF32& kv_in,
                               const AttentionView& p, int heads, Mask mask,
                               KVCacheLayer* cache) {
    const int64_t d = q_in.shape.size() == 2 ? q_in.shape[1] : -1;
    if (d <= 0) throw ShapeError("attention: query must be [T x d]");
    if (heads < 1 || d % heads != 0)
        throw ConfigError("attention: d_model must be divisible by head count");
    const int64_t dh = d / heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(dh));

    TensorF32 q = linear(q_in, *p.wq, *p.bq);

    TensorF32 local_k, local_v;
    const TensorF32 *kp, *vp;
    if (cache) {
        append_kv(*cache, kv_in, p, heads);
        if (cache->len() == 0) throw StateError("attention: cache is empty");
        kp = &cache->k;
        vp = &cache->v;
    } else {
        local_k = linear(kv_in, *p.wk, *p.bk);
        local_v = linear(kv_in, *p.wv, *p.bv);
        kp = &local_k;
        vp = &local_v;
    }
    const TensorF32& km = *kp;
    const TensorF32& vm = *vp;
    const int64_t tq = q.shape[0], tk = km.shape[0];
    if (!cache && mask == Mask::causal && tq != tk)
        throw ShapeError("attention: causal mask needs square attention");

    TensorF32 ctx = TensorF32::zeros({tq, d});
    std::vector<float> scores(static_cast<size_t>(tk));
    for (int64_t h = 0; h < heads; ++h) {
        const int64_t off = h * dh;
        for (int64_t i = 0; i < tq; ++i) {
            // with a cache every query row sees the whole memory
            const int64_t limit = (!cache && mask == Mask::causal) ? i + 1 : tk;
            const float* qrow = q.row(i) + off;
            for (int64_t j = 0; j < limit; ++j) {
                const float* krow = km.row(j) + off;
                float acc = 0.0f;
                for (int64_t l = 0; l < dh; ++l) acc += qrow[l] * krow[l];
                scores[static_cast<size_t>(j)] = acc * scale;
            }
            softmax_inplace(scores.data(), limit);
            float* crow = ctx.row(i) + off;
            for (int64_t j = 0; j < limit; ++j) {
                const float wgt = scores[static_cast<size_t>(j)];
                const float* vrow = vm.row(j) + off;
                for (int64_t l = 0; l < dh; ++l) crow[l] += wgt * vrow[l];
            }
        }
    }
    return linear(ctx, *p.wo, *p.bo);
}

TensorF32 multi_head_attention(const TensorF32& q_in, const TensorF32& kv_in,
                               const AttentionParams& params, int heads, Mask mask,
                               KVCacheLayer* cache) {
    return multi_head_attention(q_in, kv_in, view_of(params), heads, mask, cache);
}

namespace {
inline float sigmoidf(float v) { return 1.0f / (1.0f + std::exp(-v)); }
}  // namespace

std::vector<float> gru_cell(const std::vector<float>& x, const std::vector<float>& h,
                            const TensorF32& w_ih, const MatvecProvider& w_hh,
                            const TensorF32& b) {
    const int64_t hdim = static_cast<int64_t>(h.size());
    if (w_ih.shape.size() != 2 || w_ih.shape[0] != 3 * hdim ||
        w_ih.shape[1] != static_cast<int64_t>(x.size()))
        throw ShapeError("gru_cell: w_ih must be [3*hdim x in]");
    if (b.numel() != 3 * hdim) throw ShapeError("gru_cell: bias must be [3*hdim]");
    const std::vector<float> a = matvec(w_ih, x);
    const std::vector<float> u = w_hh(h);
    if (static_cast<int64_t>(u.size()) != 3 * hdim)
        throw ShapeError("gru_cell: w_hh provider must return [3*hdim]");
    std::vector<float> out(static_cast<size_t>(hdim));
    const float* bz = b.data.data();
    const float* br = bz + hdim;
    const float* bn = br + hdim;
    for (int64_t i = 0; i < hdim; ++i) {
        const float z = sigmoidf(a[static_cast<size_t>(i)] + u[static_cast<size_t>(i)] + bz[i]);
        const float r = sigmoidf(a[static_cast<size_t>(hdim + i)] +
                                 u[static_cast<size_t>(hdim + i)] + br[i]);
        const float n = std::tanh(a[static_cast<size_t>(2 * hdim + i)] +
                                  r * u[static_cast<size_t>(2 * hdim + i)] + bn[i]);
        out[static_cast<size_t>(i)] =
            (1.0f - z) * h[static_cast<size_t>(i)] + z * n;
    }
    return out;
}

TensorF32 embedding_lookup(const TensorF32& table, const std::vector<int32_t>& ids) {
    require_2d(table, "embedding_lookup");
    const int64_t v = table.shape[0], d = table.shape[1];
    TensorF32 out = TensorF32::zeros({static_cast<int64_t>(ids.size()), d});
    for (size_t i = 0; i < ids.size(); ++i) {
        const int32_t id = ids[i];
        if (id < 0 || id >= v)
            throw IndexError("embedding_lookup: id " + std::to_string(id) + " out of range [0, " +
                             std::to_string(v) + ")");
        std::memcpy(out.row(static_cast<int64_t>(i)), table.row(id), sizeof(float) * d);
    }
    return out;
}

void add_position_encoding(TensorF32& x, int64_t offset) {
    const int64_t t_len = x.shape[0], d = x.shape[1];
    for (int64_t t = 0; t < t_len; ++t) {
        float* row = x.row(t);
        const double pos = static_cast<double>(t + offset);
        for (int64_t j = 0; j < d; j += 2) {
            const double freq = std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(d));
            row[j] += static_cast<float>(std::sin(pos * freq));
            if (j + 1 < d) row[j + 1] += static_cast<float>(std::cos(pos * freq));
        }
    }
}

void relu_inplace(TensorF32& x) {
    for (float& v : x.data) v = v > 0.0f ? v : 0.0f;
}

void add_inplace(TensorF32& x, const TensorF32& y) {
    if (x.shape != y.shape) throw ShapeError("add: shape mismatch");
    for (size_t i = 0; i < x.data.size(); ++i) x.data[i] += y.data[i];
}

}  // namespace ctts
