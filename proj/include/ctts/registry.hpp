#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ctts/common.hpp"
#include "ctts/quant.hpp"
#include "ctts/sparse.hpp"
#include "ctts/tensor.hpp"

namespace ctts {

// One physically stored tensor. `values` is the FP32 compute view; when the
// storage dtype is i8 or the tensor is block-sparse, the storage form is kept
// alongside and `values` is derived from it, so save/load round-trips are
// lossless. f16-stored tensors keep their values snapped to the f16 grid for
// the same reason.
struct PhysicalTensor {
    Dtype store_dtype = Dtype::f32;
    TensorF32 values;
    std::optional<quant::QTensorI8> quant;
    std::optional<sparse::BlockSparseMatrix> sparse;

    std::vector<int64_t> shape() const {
        if (sparse) return {sparse->rows, sparse->cols};
        return values.shape;
    }
    int64_t param_count() const {
        if (sparse) return sparse->rows * sparse->cols;
        return values.numel();
    }
};

// Logical slot -> physical tensor map. Sharing is real: aliased slots hold
// the same shared_ptr, so a (diagnostic) mutation through one slot is visible
// through all of them.
class ParamRegistry {
public:
    // Creates a new physical tensor and binds `slot` to it.
    uint32_t add(const std::string& slot, PhysicalTensor tensor);
    // Binds `slot` to the physical tensor already owned by `target_slot`.
    void alias(const std::string& slot, const std::string& target_slot);

    bool has(const std::string& slot) const { return slots_.count(slot) > 0; }
    const TensorF32& dense(const std::string& slot) const { return physical(slot).values; }
    const PhysicalTensor& physical(const std::string& slot) const;
    PhysicalTensor& physical_mut(const std::string& slot);
    uint32_t physical_id(const std::string& slot) const;

    size_t unique_count() const { return tensors_.size(); }
    size_t slot_count() const { return slots_.size(); }
    const std::map<std::string, uint32_t>& slots() const { return slots_; }
    const std::string& canonical_name(uint32_t id) const { return canonical_[id]; }
    const std::shared_ptr<PhysicalTensor>& tensor(uint32_t id) const { return tensors_[id]; }

    // Distinct physical parameter scalars.
    int64_t unique_params() const;
    // Storage bytes of the distinct physical tensors at a uniform dtype
    // (sparse tensors use their compressed layout).
    size_t unique_bytes_at(Dtype dtype) const;
    // Bytes as if every logical slot were stored separately.
    size_t logical_bytes_at(Dtype dtype) const;

    // Deep-copies every slot into its own physical tensor (no aliasing).
    // Forward passes through the expanded registry are bit-identical.
    ParamRegistry expand_aliases() const;

private:
    std::vector<std::shared_ptr<PhysicalTensor>> tensors_;
    std::vector<std::string> canonical_;
    std::map<std::string, uint32_t> slots_;
};

// Deterministic uniform init stream. Values are mapped from raw mt19937_64
// output (the engine is fully specified by the standard) so results do not
// depend on libstdc++ distribution details.
class InitRng {
public:
    explicit InitRng(uint64_t seed) : engine_(seed) {}

    // uniform in [0, 1)
    float next_unit();
    // uniform in [-bound, bound]
    float next_sym(float bound) { return (next_unit() * 2.0f - 1.0f) * bound; }

    TensorF32 uniform_tensor(std::vector<int64_t> shape, float bound);

private:
    std::mt19937_64 engine_;
};

// Convenience: add a freshly initialized tensor with uniform +-1/sqrt(fan_in)
// values, snapped to the storage dtype grid.
uint32_t add_uniform(ParamRegistry& reg, const std::string& slot, std::vector<int64_t> shape,
                     int64_t fan_in, InitRng& rng, Dtype store = Dtype::f16);
uint32_t add_const(ParamRegistry& reg, const std::string& slot, std::vector<int64_t> shape,
                   float value, Dtype store = Dtype::f16);

}  // namespace ctts
