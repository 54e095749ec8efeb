#include "ctts/registry.hpp"

#include <cmath>

namespace ctts {

uint32_t ParamRegistry::add(const std::string& slot, PhysicalTensor tensor) {
    if (slots_.count(slot)) throw ArgumentError("slot already bound: " + slot);
    uint32_t id = static_cast<uint32_t>(tensors_.size());
    tensors_.push_back(std::make_shared<PhysicalTensor>(std::move(tensor)));
    canonical_.push_back(slot);
    slots_.emplace(slot, id);
    return id;
}

void ParamRegistry::alias(const std::string& slot, const std::string& target_slot) {
    if (slots_.count(slot)) throw ArgumentError("slot already bound: " + slot);
    slots_.emplace(slot, physical_id(target_slot));
}

const PhysicalTensor& ParamRegistry::physical(const std::string& slot) const {
    return *tensors_[physical_id(slot)];
}

PhysicalTensor& ParamRegistry::physical_mut(const std::string& slot) {
    return *tensors_[physical_id(slot)];
}

uint32_t ParamRegistry::physical_id(const std::string& slot) const {
    auto it = slots_.find(slot);
    if (it == slots_.end()) throw ArgumentError("unknown parameter slot: " + slot);
    return it->second;
}

int64_t ParamRegistry::unique_params() const {
    int64_t n = 0;
    for (const auto& t : tensors_) n += t->param_count();
    return n;
}

namespace {

size_t tensor_bytes_at(const PhysicalTensor& t, Dtype dtype) {
    if (t.sparse) return sparse::sparse_footprint_bytes(*t.sparse, dtype);
    return static_cast<size_t>(t.values.numel()) * dtype_bytes(dtype);
}

}  // namespace

size_t ParamRegistry::unique_bytes_at(Dtype dtype) const {
    size_t n = 0;
    for (const auto& t : tensors_) n += tensor_bytes_at(*t, dtype);
    return n;
}

size_t ParamRegistry::logical_bytes_at(Dtype dtype) const {
    size_t n = 0;
    for (const auto& [slot, id] : slots_) n += tensor_bytes_at(*tensors_[id], dtype);
    return n;
}

ParamRegistry ParamRegistry::expand_aliases() const {
    ParamRegistry out;
    for (const auto& [slot, id] : slots_) out.add(slot, *tensors_[id]);
    return out;
}

float InitRng::next_unit() {
    // Top 24 bits give every float in [0, 1) at 2^-24 spacing exactly.
    return static_cast<float>(engine_() >> 40) * 0x1.0p-24f;
}

TensorF32 InitRng::uniform_tensor(std::vector<int64_t> shape, float bound) {
    TensorF32 t = TensorF32::zeros(std::move(shape));
    for (float& v : t.data) v = next_sym(bound);
    return t;
}

uint32_t add_uniform(ParamRegistry& reg, const std::string& slot, std::vector<int64_t> shape,
                     int64_t fan_in, InitRng& rng, Dtype store) {
    if (fan_in <= 0) throw ArgumentError("fan_in must be positive");
    float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
    PhysicalTensor t;
    t.store_dtype = store;
    t.values = rng.uniform_tensor(std::move(shape), bound);
    if (store == Dtype::f16) f16_snap(t.values.data.data(), t.values.data.size());
    return reg.add(slot, std::move(t));
}

uint32_t add_const(ParamRegistry& reg, const std::string& slot, std::vector<int64_t> shape,
                   float value, Dtype store) {
    PhysicalTensor t;
    t.store_dtype = store;
    t.values = TensorF32::zeros(std::move(shape));
    for (float& v : t.values.data) v = value;
    if (store == Dtype::f16) f16_snap(t.values.data.data(), t.values.data.size());
    return reg.add(slot, std::move(t));
}

}  // namespace ctts
