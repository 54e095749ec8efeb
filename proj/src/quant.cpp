#include "ctts/quant.hpp"

#include <algorithm>
#include <cmath>

namespace ctts::quant {

float calibrate(const TensorF32& w, CalibMethod method, double percentile) {
    if (w.numel() == 0) throw ArgumentError("calibrate: empty tensor");
    float basis = 0.0f;
    if (method == CalibMethod::maxabs) {
        for (float v : w.data) basis = std::max(basis, std::fabs(v));
    } else {
        if (percentile <= 0.0 || percentile > 100.0)
            throw ArgumentError("calibrate: percentile must be in (0, 100]");
        std::vector<float> mags(w.data.size());
        for (size_t i = 0; i < w.data.size(); ++i) mags[i] = std::fabs(w.data[i]);
        std::sort(mags.begin(), mags.end());
        // nearest-rank
        size_t rank = static_cast<size_t>(
            std::ceil(percentile / 100.0 * static_cast<double>(mags.size())));
        rank = std::min(std::max<size_t>(rank, 1), mags.size());
        basis = mags[rank - 1];
    }
    const float scale = basis / 127.0f;
    return std::max(scale, kScaleFloor);
}

QTensorI8 quantize(const TensorF32& w, float scale) {
    if (!(scale > 0.0f)) throw ArgumentError("quantize: scale must be positive");
    QTensorI8 q;
    q.shape = w.shape;
    q.scale = scale;
    q.data.resize(w.data.size());
    for (size_t i = 0; i < w.data.size(); ++i) {
        const float r = round_half_even(w.data[i] / scale);
        q.data[i] = static_cast<int8_t>(std::clamp(r, -127.0f, 127.0f));
    }
    return q;
}

TensorF32 dequantize(const QTensorI8& q) {
    TensorF32 out;
    out.shape = q.shape;
    out.data.resize(q.data.size());
    for (size_t i = 0; i < q.data.size(); ++i)
        out.data[i] = static_cast<float>(q.data[i]) * q.scale;
    return out;
}

TensorF32 qmatmul(const TensorF32& x, const QTensorI8& qw) {
    if (x.shape.size() != 2 || qw.shape.size() != 2)
        throw ShapeError("qmatmul: expected 2-D operands");
    const int64_t m = x.shape[0], k = x.shape[1], k2 = qw.shape[0], n = qw.shape[1];
    if (k != k2) throw ShapeError("qmatmul: inner dims mismatch");
    const float s = qw.scale;
    TensorF32 out = TensorF32::zeros({m, n});
    for (int64_t i = 0; i < m; ++i) {
        const float* xrow = x.row(i);
        float* orow = out.row(i);
        for (int64_t l = 0; l < k; ++l) {
            const float xv = xrow[l];
            const int8_t* qrow = qw.data.data() + l * n;
            for (int64_t j = 0; j < n; ++j)
                orow[j] += xv * (static_cast<float>(qrow[j]) * s);
        }
    }
    return out;
}

CalibReport calibrate_report(const std::string& name, const TensorF32& w, CalibMethod method,
                             double percentile) {
    CalibReport rep;
    rep.name = name;
    for (float v : w.data) rep.max_abs = std::max(rep.max_abs, std::fabs(v));
    rep.scale = calibrate(w, method, percentile);
    const QTensorI8 q = quantize(w, rep.scale);
    const TensorF32 back = dequantize(q);
    for (size_t i = 0; i < w.data.size(); ++i)
        rep.max_err = std::max(rep.max_err, std::fabs(back.data[i] - w.data[i]));
    return rep;
}

}  // namespace ctts::quant
