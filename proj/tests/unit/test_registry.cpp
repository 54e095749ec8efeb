#include <cmath>
#include <vector>

#include "ctts/registry.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ctts;

namespace {

PhysicalTensor plain(TensorF32 t) {
    PhysicalTensor p;
    p.store_dtype = Dtype::f32;
    p.values = std::move(t);
    return p;
}

}  // namespace

TEST_CASE("add and alias share one physical tensor") {
    ParamRegistry reg;
    const uint32_t id = reg.add("enc.0.w", plain(oracle::random_tensor({4, 4}, 1)));
    reg.alias("enc.2.w", "enc.0.w");
    reg.alias("dec.0.w", "enc.0.w");

    CHECK(reg.slot_count() == 3);
    CHECK(reg.unique_count() == 1);
    CHECK(reg.physical_id("enc.2.w") == id);
    CHECK(reg.physical_id("dec.0.w") == id);
    CHECK(reg.canonical_name(id) == "enc.0.w");

    // Mutation through one slot is visible through every alias.
    reg.physical_mut("enc.2.w").values.data[0] = 42.0f;
    CHECK(reg.dense("dec.0.w").data[0] == 42.0f);
    CHECK(reg.dense("enc.0.w").data[0] == 42.0f);
}

TEST_CASE("registry rejects rebinding and unknown slots") {
    ParamRegistry reg;
    reg.add("a", plain(TensorF32::zeros({2, 2})));
    CHECK_THROWS_AS(reg.add("a", plain(TensorF32::zeros({2, 2}))), ArgumentError);
    CHECK_THROWS_AS(reg.alias("a", "a"), ArgumentError);
    CHECK_THROWS_AS(reg.alias("b", "missing"), ArgumentError);
    CHECK_THROWS_AS(reg.physical("missing"), ArgumentError);
    CHECK(!reg.has("missing"));
    CHECK(reg.has("a"));
}

TEST_CASE("byte accounting separates unique from logical storage") {
    ParamRegistry reg;
    reg.add("w1", plain(TensorF32::zeros({8, 8})));   // 64 params
    reg.add("w2", plain(TensorF32::zeros({4, 4})));   // 16 params
    reg.alias("w1_alias", "w1");

    CHECK(reg.unique_params() == 80);
    CHECK(reg.unique_bytes_at(Dtype::f16) == 80 * 2);
    CHECK(reg.unique_bytes_at(Dtype::f32) == 80 * 4);
    // Logical view counts w1 twice.
    CHECK(reg.logical_bytes_at(Dtype::f16) == (80 + 64) * 2);
}

TEST_CASE("expand_aliases deep-copies every slot") {
    ParamRegistry reg;
    reg.add("w", plain(oracle::random_tensor({3, 3}, 2)));
    reg.alias("w2", "w");
    ParamRegistry flat = reg.expand_aliases();

    CHECK(flat.slot_count() == 2);
    CHECK(flat.unique_count() == 2);
    CHECK(flat.dense("w2").data == reg.dense("w").data);

    // Expanded copies are independent.
    flat.physical_mut("w").values.data[0] = -1.0f;
    CHECK(flat.dense("w2").data[0] != -1.0f);
    CHECK(reg.dense("w").data[0] != -1.0f);
}

TEST_CASE("InitRng is deterministic and stays in range") {
    InitRng a(1234), b(1234), c(99);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        const float va = a.next_unit();
        const float vb = b.next_unit();
        const float vc = c.next_unit();
        all_equal = all_equal && (va == vb);
        any_diff = any_diff || (va != vc);
        CHECK(va >= 0.0f);
        CHECK(va < 1.0f);
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("add_uniform snaps f16-stored values and respects the fan-in bound") {
    ParamRegistry reg;
    InitRng rng(7);
    add_uniform(reg, "w", {32, 16}, 16, rng);
    const PhysicalTensor& t = reg.physical("w");
    CHECK(t.store_dtype == Dtype::f16);
    const float bound = 1.0f / std::sqrt(16.0f);
    for (float v : t.values.data) {
        CHECK(std::fabs(v) <= bound);
        CHECK(v == f16_snap(v));
    }

    InitRng rng2(7);
    ParamRegistry reg2;
    add_uniform(reg2, "w", {32, 16}, 16, rng2);
    CHECK(reg2.dense("w").data == t.values.data);

    CHECK_THROWS_AS(add_uniform(reg, "w2", {4, 4}, 0, rng), ArgumentError);
}

TEST_CASE("add_const fills and snaps") {
    ParamRegistry reg;
    add_const(reg, "ln.g", {8}, 1.0f);
    add_const(reg, "ln.b", {8}, 0.0f, Dtype::f32);
    for (float v : reg.dense("ln.g").data) CHECK(v == 1.0f);
    CHECK(reg.physical("ln.b").store_dtype == Dtype::f32);
}
