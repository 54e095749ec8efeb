#include "ctts/acoustic.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace ctts::ac {

AcousticConfig release_config(bool reduced) {
    AcousticConfig cfg;
    if (reduced) {
        cfg.preset = "reduced";
        cfg.conv_channels = 256;
        cfg.conv_kernel = 3;
        cfg.n_enc_blocks = 2;
        cfg.n_dec_blocks = 2;
        cfg.var_channels = 128;
    }
    return cfg;
}

AcousticConfig tiny_config(bool reduced) {
    AcousticConfig cfg;
    cfg.d_model = 32;
    cfg.heads = 2;
    cfg.n_mels = 20;
    cfg.n_var_bins = 16;
    cfg.var_channels = 16;
    cfg.phoneme_vocab = 48;
    if (reduced) {
        cfg.preset = "reduced";
        cfg.n_enc_blocks = 1;
        cfg.n_dec_blocks = 1;
        cfg.conv_channels = 32;
        cfg.conv_kernel = 3;
    } else {
        cfg.n_enc_blocks = 2;
        cfg.n_dec_blocks = 2;
        cfg.conv_channels = 128;
        cfg.conv_kernel = 5;
    }
    return cfg;
}

void validate(const AcousticConfig& cfg) {
    if (cfg.d_model < 1 || cfg.heads < 1 || cfg.d_model % cfg.heads != 0)
        throw ConfigError("d_model must be a positive multiple of heads");
    if (cfg.n_enc_blocks < 1 || cfg.n_dec_blocks < 1)
        throw ConfigError("both stacks need at least one block");
    if (cfg.conv_channels < 1 || cfg.var_channels < 1)
        throw ConfigError("channel counts must be positive");
    if (cfg.conv_kernel % 2 == 0 || cfg.var_kernel % 2 == 0)
        throw ConfigError("conv kernels must be odd for same padding");
    if (cfg.n_mels < 1) throw ConfigError("n_mels must be >= 1");
    if (cfg.n_var_bins < 2) throw ConfigError("n_var_bins must be >= 2");
    if (!(cfg.pitch_min < cfg.pitch_max) || !(cfg.energy_min < cfg.energy_max))
        throw ConfigError("variance ranges must be non-empty");
    if (cfg.phoneme_vocab < 5) throw ConfigError("phoneme vocab too small");
}

namespace {

void add_block(ParamRegistry& reg, InitRng& rng, const AcousticConfig& cfg,
               const std::string& p) {
    add_const(reg, p + ".ln1.g", {cfg.d_model}, 1.0f);
    add_const(reg, p + ".ln1.b", {cfg.d_model}, 0.0f);
    for (const char* n : {".attn.wq", ".attn.wk", ".attn.wv", ".attn.wo"})
        add_uniform(reg, p + n, {cfg.d_model, cfg.d_model}, cfg.d_model, rng);
    for (const char* n : {".attn.bq", ".attn.bk", ".attn.bv", ".attn.bo"})
        add_const(reg, p + n, {cfg.d_model}, 0.0f);
    add_const(reg, p + ".ln2.g", {cfg.d_model}, 1.0f);
    add_const(reg, p + ".ln2.b", {cfg.d_model}, 0.0f);
    const int64_t k = cfg.conv_kernel, d = cfg.d_model, c = cfg.conv_channels;
    add_uniform(reg, p + ".conv1.w", {k, d, c}, k * d, rng);
    add_const(reg, p + ".conv1.b", {c}, 0.0f);
    add_uniform(reg, p + ".conv2.w", {k, c, d}, k * c, rng);
    add_const(reg, p + ".conv2.b", {d}, 0.0f);
}

void add_predictor(ParamRegistry& reg, InitRng& rng, const AcousticConfig& cfg,
                   const std::string& p) {
    const int64_t k = cfg.var_kernel, d = cfg.d_model, v = cfg.var_channels;
    add_uniform(reg, p + ".conv1.w", {k, d, v}, k * d, rng);
    add_const(reg, p + ".conv1.b", {v}, 0.0f);
    add_const(reg, p + ".ln1.g", {v}, 1.0f);
    add_const(reg, p + ".ln1.b", {v}, 0.0f);
    add_uniform(reg, p + ".conv2.w", {k, v, v}, k * v, rng);
    add_const(reg, p + ".conv2.b", {v}, 0.0f);
    add_const(reg, p + ".ln2.g", {v}, 1.0f);
    add_const(reg, p + ".ln2.b", {v}, 0.0f);
    add_uniform(reg, p + ".out.w", {v, 1}, v, rng);
    add_const(reg, p + ".out.b", {1}, 0.0f);
}

}  // namespace

ParamRegistry build_registry(const AcousticConfig& cfg, uint64_t seed) {
    validate(cfg);
    ParamRegistry reg;
    InitRng rng(seed);

    add_uniform(reg, "ac.emb.phoneme", {cfg.phoneme_vocab, cfg.d_model}, cfg.d_model, rng);
    for (int i = 0; i < cfg.n_enc_blocks; ++i)
        add_block(reg, rng, cfg, "ac.enc." + std::to_string(i));
    add_const(reg, "ac.enc.final_ln.g", {cfg.d_model}, 1.0f);
    add_const(reg, "ac.enc.final_ln.b", {cfg.d_model}, 0.0f);

    for (const char* v : {"ac.var.dur", "ac.var.pitch", "ac.var.energy"})
        add_predictor(reg, rng, cfg, v);
    add_uniform(reg, "ac.var.pitch_emb", {cfg.n_var_bins, cfg.d_model}, cfg.d_model, rng);
    add_uniform(reg, "ac.var.energy_emb", {cfg.n_var_bins, cfg.d_model}, cfg.d_model, rng);

    for (int i = 0; i < cfg.n_dec_blocks; ++i)
        add_block(reg, rng, cfg, "ac.dec." + std::to_string(i));
    add_const(reg, "ac.dec.final_ln.g", {cfg.d_model}, 1.0f);
    add_const(reg, "ac.dec.final_ln.b", {cfg.d_model}, 0.0f);

    add_uniform(reg, "ac.mel.w", {cfg.d_model, cfg.n_mels}, cfg.d_model, rng);
    add_const(reg, "ac.mel.b", {cfg.n_mels}, 0.0f);
    return reg;
}

namespace {

AttentionView attn_view(const ParamRegistry& reg, const std::string& prefix) {
    return AttentionView{&reg.dense(prefix + ".wq"), &reg.dense(prefix + ".wk"),
                         &reg.dense(prefix + ".wv"), &reg.dense(prefix + ".wo"),
                         &reg.dense(prefix + ".bq"), &reg.dense(prefix + ".bk"),
                         &reg.dense(prefix + ".bv"), &reg.dense(prefix + ".bo")};
}

TensorF32 norm_with(const ParamRegistry& reg, const std::string& prefix, const TensorF32& x) {
    return layer_norm(x, reg.dense(prefix + ".g"), reg.dense(prefix + ".b"));
}

void fft_block(const ParamRegistry& reg, const AcousticConfig& cfg, const std::string& p,
               TensorF32& x) {
    TensorF32 a = norm_with(reg, p + ".ln1", x);
    add_inplace(x, multi_head_attention(a, a, attn_view(reg, p + ".attn"), cfg.heads,
                                        Mask::none));
    TensorF32 c = norm_with(reg, p + ".ln2", x);
    TensorF32 h = conv1d(c, reg.dense(p + ".conv1.w"), reg.dense(p + ".conv1.b"));
    relu_inplace(h);
    add_inplace(x, conv1d(h, reg.dense(p + ".conv2.w"), reg.dense(p + ".conv2.b")));
}

// conv -> relu -> LN, twice, then a scalar head per position.
std::vector<float> run_predictor(const ParamRegistry& reg, const std::string& p,
                                 const TensorF32& hidden) {
    TensorF32 h = conv1d(hidden, reg.dense(p + ".conv1.w"), reg.dense(p + ".conv1.b"));
    relu_inplace(h);
    h = norm_with(reg, p + ".ln1", h);
    h = conv1d(h, reg.dense(p + ".conv2.w"), reg.dense(p + ".conv2.b"));
    relu_inplace(h);
    h = norm_with(reg, p + ".ln2", h);
    return linear(h, reg.dense(p + ".out.w"), reg.dense(p + ".out.b")).data;
}

}  // namespace

TensorF32 encode_phonemes(const ParamRegistry& reg, const AcousticConfig& cfg,
                          const std::vector<int32_t>& phonemes) {
    if (phonemes.empty()) throw InputError("acoustic encoder input is empty");
    TensorF32 x = embedding_lookup(reg.dense("ac.emb.phoneme"), phonemes);
    add_position_encoding(x);
    for (int i = 0; i < cfg.n_enc_blocks; ++i) fft_block(reg, cfg, "ac.enc." + std::to_string(i), x);
    return norm_with(reg, "ac.enc.final_ln", x);
}

Variances predict_variances(const ParamRegistry& reg, const AcousticConfig& cfg,
                            const TensorF32& hidden) {
    (void)cfg;
    Variances out;
    const std::vector<float> log_dur = run_predictor(reg, "ac.var.dur", hidden);
    out.duration.reserve(log_dur.size());
    for (float ld : log_dur) {
        const float frames = round_half_away(std::exp(ld) - 1.0f);
        out.duration.push_back(frames <= 0.0f ? 0 : static_cast<int64_t>(frames));
    }
    out.pitch = run_predictor(reg, "ac.var.pitch", hidden);
    out.energy = run_predictor(reg, "ac.var.energy", hidden);
    return out;
}

TensorF32 length_regulate(const TensorF32& hidden, const std::vector<int64_t>& durations) {
    if (hidden.rows() != static_cast<int64_t>(durations.size()))
        throw ShapeError("one duration per hidden row required");
    int64_t total = 0;
    for (int64_t d : durations) {
        if (d < 0) throw ArgumentError("negative duration");
        total += d;
    }
    TensorF32 out = TensorF32::zeros({total, hidden.cols()});
    int64_t r = 0;
    for (int64_t i = 0; i < hidden.rows(); ++i) {
        for (int64_t k = 0; k < durations[static_cast<size_t>(i)]; ++k, ++r) {
            std::memcpy(out.row(r), hidden.row(i), sizeof(float) * static_cast<size_t>(hidden.cols()));
        }
    }
    return out;
}

std::vector<float> expand_by_duration(const std::vector<float>& values,
                                      const std::vector<int64_t>& durations) {
    if (values.size() != durations.size())
        throw ShapeError("one duration per value required");
    std::vector<float> out;
    for (size_t i = 0; i < values.size(); ++i) {
        if (durations[i] < 0) throw ArgumentError("negative duration");
        out.insert(out.end(), static_cast<size_t>(durations[i]), values[i]);
    }
    return out;
}

int32_t bucket_index(float value, float lo, float hi, int32_t n_bins) {
    const float v = value < lo ? lo : (value > hi ? hi : value);
    const int32_t b = static_cast<int32_t>((v - lo) / (hi - lo) * static_cast<float>(n_bins));
    return b >= n_bins ? n_bins - 1 : b;
}

void add_variance_embeddings(const ParamRegistry& reg, const AcousticConfig& cfg,
                             TensorF32& expanded, const std::vector<float>& pitch,
                             const std::vector<float>& energy) {
    const int64_t t = expanded.rows();
    if (static_cast<int64_t>(pitch.size()) != t || static_cast<int64_t>(energy.size()) != t)
        throw ShapeError("pitch/energy must be frame-granular");
    const TensorF32& pe = reg.dense("ac.var.pitch_emb");
    const TensorF32& ee = reg.dense("ac.var.energy_emb");
    for (int64_t i = 0; i < t; ++i) {
        const size_t si = static_cast<size_t>(i);
        const int32_t pb = bucket_index(pitch[si], cfg.pitch_min, cfg.pitch_max, cfg.n_var_bins);
        const int32_t eb = bucket_index(energy[si], cfg.energy_min, cfg.energy_max, cfg.n_var_bins);
        float* row = expanded.row(i);
        const float* pr = pe.row(pb);
        const float* er = ee.row(eb);
        for (int64_t j = 0; j < expanded.cols(); ++j) row[j] += pr[j] + er[j];
    }
}

MelSpectrogram decode_mel(const ParamRegistry& reg, const AcousticConfig& cfg,
                          const TensorF32& conditioned) {
    if (conditioned.rows() < 1) throw InputError("mel decoder input is empty");
    TensorF32 x = conditioned;
    add_position_encoding(x);
    for (int i = 0; i < cfg.n_dec_blocks; ++i) fft_block(reg, cfg, "ac.dec." + std::to_string(i), x);
    x = norm_with(reg, "ac.dec.final_ln", x);
    MelSpectrogram mel;
    mel.frames = linear(x, reg.dense("ac.mel.w"), reg.dense("ac.mel.b"));
    for (float v : mel.frames.data) {
        if (!std::isfinite(v)) throw NumericError("non-finite mel output");
    }
    return mel;
}

std::pair<MelSpectrogram, Variances> acoustic_infer(const ParamRegistry& reg,
                                                    const AcousticConfig& cfg,
                                                    const std::vector<int32_t>& phonemes) {
    TensorF32 hidden = encode_phonemes(reg, cfg, phonemes);
    Variances var = predict_variances(reg, cfg, hidden);
    int64_t total = 0;
    for (int64_t d : var.duration) total += d;
    if (total == 0) var.duration[0] = 1;

    TensorF32 expanded = length_regulate(hidden, var.duration);
    add_variance_embeddings(reg, cfg, expanded, expand_by_duration(var.pitch, var.duration),
                            expand_by_duration(var.energy, var.duration));
    return {decode_mel(reg, cfg, expanded), std::move(var)};
}

bool quantizable_slot(const std::string& slot) {
    for (const char* suffix : {".wq", ".wk", ".wv", ".wo", ".conv1.w", ".conv2.w", ".out.w",
                               "ac.mel.w"}) {
        const size_t n = std::strlen(suffix);
        if (slot.size() >= n && slot.compare(slot.size() - n, n, suffix) == 0) return true;
    }
    return false;
}

namespace {

void write_u32(std::ofstream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw TruncationError("mel dump truncated: " + path);
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

}  // namespace

void write_mel(const std::string& path, const MelSpectrogram& mel) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write mel dump: " + path);
    out.write("MEL0", 4);
    write_u32(out, static_cast<uint32_t>(mel.frames.rows()));
    write_u32(out, static_cast<uint32_t>(mel.frames.cols()));
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(mel.frames.data.data()),
              static_cast<std::streamsize>(mel.frames.data.size() * 4));
    if (!out) throw IoError("short write to mel dump: " + path);
}

MelSpectrogram read_mel(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open mel dump: " + path);
    char magic[4];
    if (!in.read(magic, 4)) throw TruncationError("mel dump truncated: " + path);
    if (std::memcmp(magic, "MEL0", 4) != 0)
        throw FormatError("bad mel magic at offset 0: " + path);
    const uint32_t t = read_u32(in, path);
    const uint32_t n_mels = read_u32(in, path);
    MelSpectrogram mel;
    mel.frames = TensorF32::zeros({static_cast<int64_t>(t), static_cast<int64_t>(n_mels)});
    if (!in.read(reinterpret_cast<char*>(mel.frames.data.data()),
                 static_cast<std::streamsize>(mel.frames.data.size() * 4)))
        throw TruncationError("mel dump truncated: " + path);
    return mel;
}

}  // namespace ctts::ac
