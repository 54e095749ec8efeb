#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctts/tensor.hpp"

namespace ctts::quant {

// Symmetric weight-only INT8 tensor. Zero point is fixed at 0 and -128 is
// never produced, so dequantization is a single multiply.
struct QTensorI8 {
    std::vector<int64_t> shape;
    std::vector<int8_t> data;
    float scale = 1.0f;

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
};

struct CalibReport {
    std::string name;
    float max_abs = 0.0f;
    float scale = 0.0f;
    float max_err = 0.0f;  // round-trip max |dequant(quant(w)) - w|
};

enum class CalibMethod { maxabs, percentile };

constexpr float kScaleFloor = 1e-12f;

// Choose a per-tensor scale. maxabs: max|w| / 127. percentile: the p-th
// percentile of |w| (nearest-rank) / 127. All-zero tensors floor at 1e-12.
float calibrate(const TensorF32& w, CalibMethod method, double percentile = 99.9);

// q = clamp(round_half_to_even(w / scale), -127, 127)
QTensorI8 quantize(const TensorF32& w, float scale);

TensorF32 dequantize(const QTensorI8& q);

// x [m x k] * qw [k x n] with the weight dequantized element-wise inside the
// accumulation loop; bit-identical to matmul(x, dequantize(qw)).
TensorF32 qmatmul(const TensorF32& x, const QTensorI8& qw);

// Calibrate + quantize + measure the round-trip error in one pass.
CalibReport calibrate_report(const std::string& name, const TensorF32& w, CalibMethod method,
                             double percentile = 99.9);

}  // namespace ctts::quant
