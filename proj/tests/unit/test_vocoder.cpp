#include <cmath>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "ctts/sparse.hpp"
#include "ctts/vocoder.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ctts;
using namespace ctts::vo;

namespace {

ac::MelSpectrogram random_mel(int64_t frames, int64_t n_mels, uint32_t seed) {
    ac::MelSpectrogram mel;
    mel.frames = oracle::random_tensor({frames, n_mels}, seed);
    return mel;
}

// Independent re-assembly of one vocoder iteration from the public kernels.
std::pair<int32_t, int32_t> reference_step(const ParamRegistry& reg, const VocoderConfig& cfg,
                                           std::vector<float>& hidden, int32_t& prev_a,
                                           int32_t& prev_b, SampleRng& rng,
                                           const float* cond) {
    const TensorF32& emb = reg.dense("vo.emb.sample");
    std::vector<float> x(cond, cond + cfg.cond_dim);
    x.insert(x.end(), emb.row(prev_a), emb.row(prev_a) + cfg.emb_dim);
    x.insert(x.end(), emb.row(prev_b), emb.row(prev_b) + cfg.emb_dim);

    const TensorF32& w_hh = reg.dense("vo.gru.w_hh");
    hidden = gru_cell(x, hidden, reg.dense("vo.gru.w_ih"),
                      [&](const std::vector<float>& h) { return matvec(w_hh, h); },
                      reg.dense("vo.gru.b"));

    auto branch = [&](const std::string& p, const std::vector<float>& input) {
        std::vector<float> f = matvec(reg.dense(p + ".fc1.w"), input);
        const TensorF32& b1 = reg.dense(p + ".fc1.b");
        for (size_t i = 0; i < f.size(); ++i) {
            f[i] += b1.data[i];
            if (f[i] < 0.0f) f[i] = 0.0f;
        }
        std::vector<float> logits = matvec(reg.dense(p + ".fc2.w"), f);
        const TensorF32& b2 = reg.dense(p + ".fc2.b");
        for (size_t i = 0; i < logits.size(); ++i) logits[i] += b2.data[i];
        softmax_inplace(logits.data(), static_cast<int64_t>(logits.size()));
        return rng.sample_categorical(logits);
    };

    const int32_t a = branch("vo.post.a", hidden);
    std::vector<float> hb = matvec(reg.dense("vo.post.b.proj.w"),
                                   std::vector<float>(emb.row(a), emb.row(a) + cfg.emb_dim));
    for (size_t i = 0; i < hb.size(); ++i) hb[i] += hidden[i];
    const int32_t b = branch("vo.post.b", hb);
    prev_a = a;
    prev_b = b;
    return {a, b};
}

}  // namespace

TEST_CASE("mu-law code 128 is exact zero and zero encodes to 128") {
    CHECK(mu_law_decode(128) == 0.0f);
    CHECK(mu_law_encode(0.0f) == 128);
}

TEST_CASE("mu-law encode inverts decode on all 256 classes") {
    for (int32_t c = 0; c <= 255; ++c) CHECK(mu_law_encode(mu_law_decode(c)) == c);
}

TEST_CASE("mu-law decode is strictly increasing") {
    for (int32_t c = 1; c <= 255; ++c) CHECK(mu_law_decode(c) > mu_law_decode(c - 1));
}

TEST_CASE("only class 0 decodes outside [-1, 1]") {
    const float lo = mu_law_decode(0);
    CHECK(lo < -1.0f);
    CHECK(lo > -1.03f);
    for (int32_t c = 1; c <= 255; ++c) {
        CHECK(mu_law_decode(c) >= -1.0f);
        CHECK(mu_law_decode(c) <= 1.0f);
    }
}

TEST_CASE("mu-law encode clamps its input and decode validates the class") {
    CHECK(mu_law_encode(-5.0f) == mu_law_encode(-1.0f));
    CHECK(mu_law_encode(5.0f) == mu_law_encode(1.0f));
    CHECK(mu_law_encode(1.0f) == 255);
    CHECK(mu_law_encode(-1.0f) == 0);
    CHECK_THROWS_AS(mu_law_decode(-1), ArgumentError);
    CHECK_THROWS_AS(mu_law_decode(256), ArgumentError);
}

TEST_CASE("SampleRng is deterministic and counts categorical draws") {
    SampleRng a(42), b(42), c(43);
    bool same = true, diff = false;
    for (int i = 0; i < 200; ++i) {
        const float va = a.next_unit();
        same = same && (va == b.next_unit());
        diff = diff || (va != c.next_unit());
        CHECK(va >= 0.0f);
        CHECK(va < 1.0f);
    }
    CHECK(same);
    CHECK(diff);

    SampleRng r(7);
    const std::vector<float> probs = {0.25f, 0.5f, 0.25f};
    for (int i = 0; i < 5; ++i) r.sample_categorical(probs);
    CHECK(r.draws() == 5);
}

TEST_CASE("sample_categorical tracks the distribution") {
    SampleRng r(11);
    const std::vector<float> probs = {0.5f, 0.25f, 0.25f};
    const int n = 20000;
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) counts[r.sample_categorical(probs)]++;
    for (int k = 0; k < 3; ++k) {
        const double freq = static_cast<double>(counts[k]) / n;
        const double sigma = std::sqrt(probs[static_cast<size_t>(k)] *
                                       (1.0 - probs[static_cast<size_t>(k)]) / n);
        CHECK(std::fabs(freq - probs[static_cast<size_t>(k)]) < 5.0 * sigma);
    }
}

TEST_CASE("sample_categorical falls back to the last class on mass shortfall") {
    SampleRng r(3);
    const std::vector<float> probs = {0.0f, 0.0f, 1.0f};
    for (int i = 0; i < 50; ++i) CHECK(r.sample_categorical(probs) == 2);
    // Under-normalized mass still returns a valid index.
    const std::vector<float> low = {0.1f, 0.1f};
    for (int i = 0; i < 50; ++i) {
        const int32_t s = r.sample_categorical(low);
        CHECK(s >= 0);
        CHECK(s <= 1);
    }
    CHECK_THROWS_AS(r.sample_categorical({}), ArgumentError);
}

TEST_CASE("upsample_conditioning repeats each projected frame hop/2 times") {
    const VocoderConfig cfg = tiny_config();
    const ParamRegistry reg = build_registry(cfg, 1);
    const ac::MelSpectrogram mel = random_mel(3, cfg.n_mels, 9);
    const TensorF32 up = upsample_conditioning(reg, cfg, mel);

    const int64_t reps = cfg.frame_hop / 2;
    REQUIRE(up.shape == std::vector<int64_t>{3 * reps, cfg.cond_dim});
    const TensorF32 proj = linear(mel.frames, reg.dense("vo.cond.w"), reg.dense("vo.cond.b"));
    for (int64_t f = 0; f < 3; ++f)
        for (int64_t k = 0; k < reps; ++k)
            CHECK(std::memcmp(up.row(f * reps + k), proj.row(f),
                              sizeof(float) * static_cast<size_t>(cfg.cond_dim)) == 0);

    CHECK_THROWS_AS(upsample_conditioning(reg, cfg, random_mel(2, cfg.n_mels + 1, 9)),
                    ShapeError);
    ac::MelSpectrogram empty;
    empty.frames = TensorF32::zeros({0, cfg.n_mels});
    CHECK_THROWS_AS(upsample_conditioning(reg, cfg, empty), InputError);
}

TEST_CASE("vocoder_step matches an independent re-assembly bit for bit") {
    const VocoderConfig cfg = tiny_config();
    const ParamRegistry reg = build_registry(cfg, 21);
    const TensorF32 cond = upsample_conditioning(reg, cfg, random_mel(2, cfg.n_mels, 22));

    VocoderState state(cfg.h, 77);
    std::vector<float> ref_hidden(static_cast<size_t>(cfg.h), 0.0f);
    int32_t ref_a = 128, ref_b = 128;
    SampleRng ref_rng(77);

    for (int64_t i = 0; i < cond.rows(); ++i) {
        const auto got = vocoder_step(reg, cfg, state, cond.row(i));
        const auto want =
            reference_step(reg, cfg, ref_hidden, ref_a, ref_b, ref_rng, cond.row(i));
        CHECK(got == want);
        CHECK(state.hidden == ref_hidden);
        CHECK(state.prev_a == got.first);
        CHECK(state.prev_b == got.second);
    }
    CHECK(state.rng.draws() == 2 * cond.rows());
}

TEST_CASE("generate emits frame_hop samples per mel frame") {
    const VocoderConfig cfg = tiny_config();
    const ParamRegistry reg = build_registry(cfg, 31);
    const ac::MelSpectrogram mel = random_mel(3, cfg.n_mels, 32);
    const Waveform wav = generate(reg, cfg, mel, 5);
    CHECK(wav.sample_rate == cfg.sample_rate);
    CHECK(wav.samples.size() == static_cast<size_t>(3 * cfg.frame_hop));
}

TEST_CASE("generate is seed-deterministic") {
    const VocoderConfig cfg = tiny_config();
    const ParamRegistry reg = build_registry(cfg, 41);
    const ac::MelSpectrogram mel = random_mel(2, cfg.n_mels, 42);
    const Waveform a = generate(reg, cfg, mel, 9);
    const Waveform b = generate(reg, cfg, mel, 9);
    const Waveform c = generate(reg, cfg, mel, 10);
    CHECK(a.samples == b.samples);
    CHECK(a.samples != c.samples);
}

TEST_CASE("streamed chunks concatenate to the returned waveform") {
    const VocoderConfig cfg = tiny_config();
    const ParamRegistry reg = build_registry(cfg, 51);
    const ac::MelSpectrogram mel = random_mel(2, cfg.n_mels, 52);

    for (size_t chunk : {1u, 7u, 64u, 100000u}) {
        std::vector<int16_t> streamed;
        std::vector<size_t> sizes;
        const Waveform wav = generate(reg, cfg, mel, 3,
                                      [&](const int16_t* p, size_t n) {
                                          streamed.insert(streamed.end(), p, p + n);
                                          sizes.push_back(n);
                                      },
                                      chunk);
        CHECK(streamed == wav.samples);
        // Every chunk but the last is exactly chunk_size.
        for (size_t i = 0; i + 1 < sizes.size(); ++i) CHECK(sizes[i] == chunk);
    }
    CHECK_THROWS_AS(generate(reg, cfg, mel, 3, nullptr, 0), ArgumentError);
}

TEST_CASE("a poisoned weight surfaces as a located NumericError") {
    const VocoderConfig cfg = tiny_config();
    ParamRegistry reg = build_registry(cfg, 61);
    reg.physical_mut("vo.gru.w_ih").values.data[0] = std::nanf("");
    const ac::MelSpectrogram mel = random_mel(1, cfg.n_mels, 62);
    CHECK_THROWS_WITH_AS(generate(reg, cfg, mel, 1),
                         doctest::Contains("iteration 0"), NumericError);
}

TEST_CASE("pruned hidden matrix leaves generation deterministic and sized") {
    VocoderConfig cfg = tiny_config();
    ParamRegistry reg = build_registry(cfg, 71);
    PhysicalTensor& t = reg.physical_mut("vo.gru.w_hh");
    const auto [mask, masked] = sparse::prune(t.values, 0.5, cfg.block_rows, cfg.block_cols);
    t.values = masked;
    t.sparse = sparse::to_block_sparse(masked, mask);

    const ac::MelSpectrogram mel = random_mel(2, cfg.n_mels, 72);
    const Waveform a = generate(reg, cfg, mel, 4);
    const Waveform b = generate(reg, cfg, mel, 4);
    CHECK(a.samples == b.samples);
    CHECK(a.samples.size() == static_cast<size_t>(2 * cfg.frame_hop));
}

TEST_CASE("vocoder_footprint reports one row per physical tensor") {
    VocoderConfig cfg = tiny_config();
    ParamRegistry reg = build_registry(cfg, 81);
    PhysicalTensor& t = reg.physical_mut("vo.gru.w_hh");
    const auto [mask, masked] = sparse::prune(t.values, 0.75, cfg.block_rows, cfg.block_cols);
    t.values = masked;
    t.sparse = sparse::to_block_sparse(masked, mask);

    const VocoderFootprint fp = vocoder_footprint(reg, cfg);
    CHECK(fp.rows.size() == reg.unique_count());
    size_t sum = 0;
    bool saw_sparse = false;
    for (const FootprintRow& row : fp.rows) {
        sum += row.bytes;
        if (row.name == "vo.gru.w_hh") {
            saw_sparse = true;
            CHECK(row.sparsity == doctest::Approx(0.75).epsilon(0.01));
            CHECK(row.bytes == sparse::sparse_footprint_bytes(*t.sparse, t.store_dtype));
        } else {
            CHECK(row.sparsity == 0.0);
        }
    }
    CHECK(saw_sparse);
    CHECK(fp.total_bytes == sum);
}

TEST_CASE("validate rejects inconsistent vocoder configs") {
    VocoderConfig cfg = tiny_config();
    cfg.n_classes = 128;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = tiny_config();
    cfg.subscale_factor = 4;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = tiny_config();
    cfg.frame_hop = 63;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = tiny_config();
    cfg.h = 100;  // 3h not divisible by 16
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = tiny_config();
    cfg.sparsity["vo.gru.w_hh"] = 1.0f;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
}
