#include "ctts/vocoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ctts/sparse.hpp"

namespace ctts::vo {

namespace {

const std::vector<std::string>& sparse_slot_list() {
    static const std::vector<std::string> slots = {
        "vo.gru.w_hh",      "vo.post.a.fc1.w", "vo.post.a.fc2.w",
        "vo.post.b.fc1.w",  "vo.post.b.fc2.w",
    };
    return slots;
}

}  // namespace

const std::vector<std::string>& sparse_slots() { return sparse_slot_list(); }

VocoderConfig release_config() {
    VocoderConfig cfg;
    for (const auto& s : sparse_slot_list()) cfg.sparsity[s] = 0.78f;
    return cfg;
}

VocoderConfig tiny_config() {
    VocoderConfig cfg = release_config();
    cfg.h = 128;
    cfg.d = 64;
    cfg.cond_dim = 32;
    cfg.emb_dim = 16;
    cfg.n_mels = 20;
    cfg.frame_hop = 64;
    return cfg;
}

void validate(const VocoderConfig& cfg) {
    if (cfg.n_classes != 256) throw ConfigError("n_classes is fixed at 256 (8-bit mu-law)");
    if (cfg.subscale_factor != 2) throw ConfigError("subscale_factor is fixed at 2");
    if (cfg.frame_hop < 2 || cfg.frame_hop % cfg.subscale_factor != 0)
        throw ConfigError("frame_hop must be a positive multiple of the subscale factor");
    if (cfg.h < 1 || cfg.d < 1 || cfg.cond_dim < 1 || cfg.emb_dim < 1 || cfg.n_mels < 1)
        throw ConfigError("vocoder dims must be positive");
    if (cfg.sample_rate < 1) throw ConfigError("sample_rate must be positive");
    if (cfg.block_rows < 1 || cfg.block_cols < 1)
        throw ConfigError("block shape must be positive");
    if ((3 * cfg.h) % cfg.block_rows != 0 || cfg.h % cfg.block_cols != 0 ||
        cfg.d % cfg.block_rows != 0 || cfg.n_classes % cfg.block_rows != 0)
        throw ConfigError("sparse matrix dims must divide the block shape");
    for (const auto& [slot, s] : cfg.sparsity) {
        if (s < 0.0f || s >= 1.0f)
            throw ConfigError("sparsity target for " + slot + " must be in [0, 1)");
    }
}

ParamRegistry build_registry(const VocoderConfig& cfg, uint64_t seed) {
    validate(cfg);
    ParamRegistry reg;
    InitRng rng(seed);
    const int64_t in_dim = cfg.cond_dim + 2 * cfg.emb_dim;

    add_uniform(reg, "vo.cond.w", {cfg.n_mels, cfg.cond_dim}, cfg.n_mels, rng);
    add_const(reg, "vo.cond.b", {cfg.cond_dim}, 0.0f);
    add_uniform(reg, "vo.emb.sample", {cfg.n_classes, cfg.emb_dim}, cfg.emb_dim, rng);

    add_uniform(reg, "vo.gru.w_ih", {3 * cfg.h, in_dim}, in_dim, rng);
    add_uniform(reg, "vo.gru.w_hh", {3 * cfg.h, cfg.h}, cfg.h, rng);
    add_const(reg, "vo.gru.b", {3 * cfg.h}, 0.0f);

    for (const char* br : {"vo.post.a", "vo.post.b"}) {
        const std::string p = br;
        add_uniform(reg, p + ".fc1.w", {cfg.d, cfg.h}, cfg.h, rng);
        add_const(reg, p + ".fc1.b", {cfg.d}, 0.0f);
        add_uniform(reg, p + ".fc2.w", {cfg.n_classes, cfg.d}, cfg.d, rng);
        add_const(reg, p + ".fc2.b", {cfg.n_classes}, 0.0f);
    }
    add_uniform(reg, "vo.post.b.proj.w", {cfg.h, cfg.emb_dim}, cfg.emb_dim, rng);
    return reg;
}

int32_t mu_law_encode(float x) {
    const double v = x < -1.0f ? -1.0 : (x > 1.0f ? 1.0 : static_cast<double>(x));
    const double y = (v < 0 ? -1.0 : 1.0) * std::log1p(255.0 * std::abs(v)) / std::log(256.0);
    // The epsilon absorbs round-off so encode(decode(c)) lands back on c even
    // though decode returns float32: the single-precision rounding of x moves
    // 127.5*y by up to ~3e-6 near the top classes, and class boundaries are
    // 1.0 apart, so 1e-4 is both sufficient and safely small.
    const int32_t c = static_cast<int32_t>(std::floor(128.0 + 127.5 * y + 1e-4));
    return c > 255 ? 255 : c;
}

float mu_law_decode(int32_t c) {
    if (c < 0 || c > 255)
        throw ArgumentError("mu-law class " + std::to_string(c) + " outside [0, 256)");
    const double y = (c - 128) / 127.5;
    const double x = (y < 0 ? -1.0 : 1.0) * (std::pow(256.0, std::abs(y)) - 1.0) / 255.0;
    return static_cast<float>(x);
}

float SampleRng::next_unit() {
    return static_cast<float>(engine_() >> 8) * 0x1.0p-24f;
}

int32_t SampleRng::sample_categorical(const std::vector<float>& probs) {
    if (probs.empty()) throw ArgumentError("empty distribution");
    ++draws_;
    const float u = next_unit();
    float cum = 0.0f;
    for (size_t i = 0; i < probs.size(); ++i) {
        cum += probs[i];
        if (u < cum) return static_cast<int32_t>(i);
    }
    return static_cast<int32_t>(probs.size() - 1);
}

TensorF32 upsample_conditioning(const ParamRegistry& reg, const VocoderConfig& cfg,
                                const ac::MelSpectrogram& mel) {
    if (mel.frames.rows() < 1) throw InputError("mel input is empty");
    if (mel.frames.cols() != cfg.n_mels)
        throw ShapeError("mel has " + std::to_string(mel.frames.cols()) + " bins, vocoder expects " +
                         std::to_string(cfg.n_mels));
    const TensorF32 proj = linear(mel.frames, reg.dense("vo.cond.w"), reg.dense("vo.cond.b"));
    const int64_t reps = cfg.frame_hop / cfg.subscale_factor;
    TensorF32 out = TensorF32::zeros({proj.rows() * reps, proj.cols()});
    for (int64_t f = 0; f < proj.rows(); ++f) {
        for (int64_t k = 0; k < reps; ++k) {
            std::memcpy(out.row(f * reps + k), proj.row(f),
                        sizeof(float) * static_cast<size_t>(proj.cols()));
        }
    }
    return out;
}

namespace {

std::vector<float> apply_matrix(const PhysicalTensor& t, const std::vector<float>& x) {
    if (t.sparse) return sparse::sparse_matvec(*t.sparse, x);
    return matvec(t.values, x);
}

int32_t run_branch(const ParamRegistry& reg, const std::string& p,
                   const std::vector<float>& input, SampleRng& rng) {
    std::vector<float> f = apply_matrix(reg.physical(p + ".fc1.w"), input);
    const TensorF32& b1 = reg.dense(p + ".fc1.b");
    for (size_t i = 0; i < f.size(); ++i) {
        f[i] += b1.data[i];
        if (f[i] < 0.0f) f[i] = 0.0f;
    }
    std::vector<float> logits = apply_matrix(reg.physical(p + ".fc2.w"), f);
    const TensorF32& b2 = reg.dense(p + ".fc2.b");
    for (size_t i = 0; i < logits.size(); ++i) logits[i] += b2.data[i];
    softmax_inplace(logits.data(), static_cast<int64_t>(logits.size()));
    return rng.sample_categorical(logits);
}

}  // namespace

std::pair<int32_t, int32_t> vocoder_step(const ParamRegistry& reg, const VocoderConfig& cfg,
                                         VocoderState& state, const float* cond) {
    const TensorF32& emb = reg.dense("vo.emb.sample");
    std::vector<float> x(static_cast<size_t>(cfg.cond_dim + 2 * cfg.emb_dim));
    std::memcpy(x.data(), cond, sizeof(float) * static_cast<size_t>(cfg.cond_dim));
    std::memcpy(x.data() + cfg.cond_dim, emb.row(state.prev_a),
                sizeof(float) * static_cast<size_t>(cfg.emb_dim));
    std::memcpy(x.data() + cfg.cond_dim + cfg.emb_dim, emb.row(state.prev_b),
                sizeof(float) * static_cast<size_t>(cfg.emb_dim));

    const PhysicalTensor& w_hh = reg.physical("vo.gru.w_hh");
    state.hidden = gru_cell(x, state.hidden, reg.dense("vo.gru.w_ih"),
                            [&](const std::vector<float>& h) { return apply_matrix(w_hh, h); },
                            reg.dense("vo.gru.b"));
    for (float v : state.hidden) {
        if (!std::isfinite(v)) throw NumericError("non-finite vocoder hidden state");
    }

    const int32_t class_a = run_branch(reg, "vo.post.a", state.hidden, state.rng);

    std::vector<float> hb = matvec(reg.dense("vo.post.b.proj.w"),
                                   std::vector<float>(emb.row(class_a),
                                                      emb.row(class_a) + cfg.emb_dim));
    for (size_t i = 0; i < hb.size(); ++i) hb[i] += state.hidden[i];
    const int32_t class_b = run_branch(reg, "vo.post.b", hb, state.rng);

    state.prev_a = class_a;
    state.prev_b = class_b;
    return {class_a, class_b};
}

Waveform generate(const ParamRegistry& reg, const VocoderConfig& cfg,
                  const ac::MelSpectrogram& mel, uint64_t seed, const ChunkConsumer& consumer,
                  size_t chunk_size) {
    validate(cfg);
    if (chunk_size == 0) throw ArgumentError("chunk_size must be positive");
    const TensorF32 cond = upsample_conditioning(reg, cfg, mel);
    const int64_t iters = cond.rows();

    Waveform wav;
    wav.sample_rate = cfg.sample_rate;
    wav.samples.reserve(static_cast<size_t>(iters) * 2);
    VocoderState state(cfg.h, seed);
    size_t emitted = 0;

    for (int64_t i = 0; i < iters; ++i) {
        std::pair<int32_t, int32_t> classes;
        try {
            classes = vocoder_step(reg, cfg, state, cond.row(i));
        } catch (const NumericError& e) {
            throw NumericError("iteration " + std::to_string(i) + ": " + e.what());
        }
        for (int32_t c : {classes.first, classes.second}) {
            // class 0 decodes slightly past -1, so clamp before PCM scaling
            const float x = std::clamp(mu_law_decode(c), -1.0f, 1.0f);
            wav.samples.push_back(static_cast<int16_t>(std::lround(x * 32767.0f)));
        }
        if (consumer && wav.samples.size() - emitted >= chunk_size) {
            consumer(wav.samples.data() + emitted, chunk_size);
            emitted += chunk_size;
        }
    }
    if (consumer && emitted < wav.samples.size())
        consumer(wav.samples.data() + emitted, wav.samples.size() - emitted);
    return wav;
}

VocoderFootprint vocoder_footprint(const ParamRegistry& reg, const VocoderConfig& cfg) {
    (void)cfg;
    VocoderFootprint fp;
    for (uint32_t id = 0; id < reg.unique_count(); ++id) {
        const PhysicalTensor& t = *reg.tensor(id);
        FootprintRow row;
        row.name = reg.canonical_name(id);
        row.dtype = dtype_name(t.store_dtype);
        if (t.sparse) {
            row.bytes = sparse::sparse_footprint_bytes(*t.sparse, t.store_dtype);
            const double grid = static_cast<double>(t.sparse->grid_rows() * t.sparse->grid_cols());
            row.sparsity = 1.0 - static_cast<double>(t.sparse->kept_blocks.size()) / grid;
        } else {
            row.bytes = static_cast<size_t>(t.values.numel()) * dtype_bytes(t.store_dtype);
        }
        fp.total_bytes += row.bytes;
        fp.rows.push_back(std::move(row));
    }
    return fp;
}

}  // namespace ctts::vo
