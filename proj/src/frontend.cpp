#include "ctts/frontend.hpp"

namespace ctts::fe {

FrontendConfig release_config(bool optimized) {
    FrontendConfig cfg;
    cfg.n_enc = optimized ? 20 : 16;
    cfg.n_dec = optimized ? 1 : 5;
    return cfg;
}

FrontendConfig tiny_config(bool optimized) {
    FrontendConfig cfg = release_config(optimized);
    cfg.d_model = 32;
    cfg.heads = 2;
    cfg.d_ff = 128;
    cfg.grapheme_vocab = 96;
    cfg.phoneme_vocab = 48;
    cfg.max_len = 24;
    return cfg;
}

void validate(const FrontendConfig& cfg, const SharingPlan& plan) {
    if (cfg.n_dec < 1 || cfg.n_enc < cfg.n_dec)
        throw ConfigError("frontend requires n_enc >= n_dec >= 1");
    if (cfg.d_model < 1 || cfg.heads < 1 || cfg.d_model % cfg.heads != 0)
        throw ConfigError("d_model must be a positive multiple of heads");
    if (cfg.d_ff < 1) throw ConfigError("d_ff must be positive");
    if (cfg.grapheme_vocab < 5 || cfg.phoneme_vocab < 5)
        throw ConfigError("vocabularies must cover the 4 specials plus content");
    if (cfg.max_len < 2) throw ConfigError("max_len must be at least 2");
    if (plan.mode == PlanMode::shared && cfg.n_enc < 2)
        throw ConfigError("shared plan needs n_enc >= 2 to seat both attention groups");
}

namespace {

std::string enc_prefix(int i) { return "fe.enc." + std::to_string(i); }
std::string dec_prefix(int i) { return "fe.dec." + std::to_string(i); }

// Group A is seated in encoder layer 0, group B in encoder layer 1
// (1-based layers alternate odd->A, even->B).
std::string group_home(int enc_layer) { return enc_prefix(enc_layer % 2); }

const char* kAttnW[4] = {".wq", ".wk", ".wv", ".wo"};
const char* kAttnB[4] = {".bq", ".bk", ".bv", ".bo"};

void add_attention(ParamRegistry& reg, InitRng& rng, const FrontendConfig& cfg,
                   const std::string& slot_prefix, const std::string& alias_prefix) {
    for (const char* n : kAttnW) {
        if (alias_prefix.empty()) {
            add_uniform(reg, slot_prefix + n, {cfg.d_model, cfg.d_model}, cfg.d_model, rng);
        } else {
            reg.alias(slot_prefix + n, alias_prefix + n);
        }
    }
    for (const char* n : kAttnB) add_const(reg, slot_prefix + n, {cfg.d_model}, 0.0f);
}

void add_layer_norm(ParamRegistry& reg, const FrontendConfig& cfg, const std::string& prefix) {
    add_const(reg, prefix + ".g", {cfg.d_model}, 1.0f);
    add_const(reg, prefix + ".b", {cfg.d_model}, 0.0f);
}

void add_ffn(ParamRegistry& reg, InitRng& rng, const FrontendConfig& cfg,
             const std::string& slot_prefix, const std::string& alias_prefix) {
    if (alias_prefix.empty()) {
        add_uniform(reg, slot_prefix + ".w1", {cfg.d_model, cfg.d_ff}, cfg.d_model, rng);
    } else {
        reg.alias(slot_prefix + ".w1", alias_prefix + ".w1");
    }
    add_const(reg, slot_prefix + ".b1", {cfg.d_ff}, 0.0f);
    if (alias_prefix.empty()) {
        add_uniform(reg, slot_prefix + ".w2", {cfg.d_ff, cfg.d_model}, cfg.d_ff, rng);
    } else {
        reg.alias(slot_prefix + ".w2", alias_prefix + ".w2");
    }
    add_const(reg, slot_prefix + ".b2", {cfg.d_model}, 0.0f);
}

}  // namespace

ParamRegistry build_registry(const FrontendConfig& cfg, const SharingPlan& plan, uint64_t seed) {
    validate(cfg, plan);
    const bool shared = plan.mode == PlanMode::shared;
    ParamRegistry reg;
    InitRng rng(seed);

    add_uniform(reg, "fe.emb.grapheme", {cfg.grapheme_vocab, cfg.d_model}, cfg.d_model, rng);
    add_uniform(reg, "fe.emb.phoneme", {cfg.phoneme_vocab, cfg.d_model}, cfg.d_model, rng);

    for (int i = 0; i < cfg.n_enc; ++i) {
        const std::string p = enc_prefix(i);
        const bool owns_attn = !shared || i < 2;
        add_attention(reg, rng, cfg, p + ".attn", owns_attn ? "" : group_home(i) + ".attn");
        add_layer_norm(reg, cfg, p + ".ln1");
        add_ffn(reg, rng, cfg, p + ".ffn", (!shared || i == 0) ? "" : enc_prefix(0) + ".ffn");
        add_layer_norm(reg, cfg, p + ".ln2");
    }
    add_layer_norm(reg, cfg, "fe.enc.final_ln");

    for (int i = 0; i < cfg.n_dec; ++i) {
        const std::string p = dec_prefix(i);
        add_attention(reg, rng, cfg, p + ".self", shared ? enc_prefix(0) + ".attn" : "");
        add_layer_norm(reg, cfg, p + ".ln1");
        add_attention(reg, rng, cfg, p + ".cross", shared ? enc_prefix(1) + ".attn" : "");
        add_layer_norm(reg, cfg, p + ".ln2");
        add_ffn(reg, rng, cfg, p + ".ffn", "");
        add_layer_norm(reg, cfg, p + ".ln3");
    }
    add_layer_norm(reg, cfg, "fe.dec.final_ln");

    add_uniform(reg, "fe.out.w", {cfg.d_model, cfg.phoneme_vocab}, cfg.d_model, rng);
    add_const(reg, "fe.out.b", {cfg.phoneme_vocab}, 0.0f);
    return reg;
}

ParamCount unique_param_count(const FrontendConfig& cfg, const SharingPlan& plan) {
    ParamRegistry reg = build_registry(cfg, plan, 0);
    return ParamCount{reg.unique_params()};
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

TensorF32 ffn_forward(const ParamRegistry& reg, const std::string& prefix, const TensorF32& x) {
    TensorF32 h = linear(x, reg.dense(prefix + ".w1"), reg.dense(prefix + ".b1"));
    relu_inplace(h);
    return linear(h, reg.dense(prefix + ".w2"), reg.dense(prefix + ".b2"));
}

}  // namespace

TensorF32 encode(const ParamRegistry& reg, const FrontendConfig& cfg,
                 const std::vector<int32_t>& graphemes) {
    if (graphemes.empty()) throw InputError("encoder input is empty");
    if (static_cast<int32_t>(graphemes.size()) > cfg.max_len) {
        throw InputError("encoder input length " + std::to_string(graphemes.size()) +
                         " exceeds max_len " + std::to_string(cfg.max_len));
    }
    TensorF32 x = embedding_lookup(reg.dense("fe.emb.grapheme"), graphemes);
    add_position_encoding(x);
    for (int i = 0; i < cfg.n_enc; ++i) {
        const std::string p = enc_prefix(i);
        TensorF32 a = norm_with(reg, p + ".ln1", x);
        add_inplace(x, multi_head_attention(a, a, attn_view(reg, p + ".attn"), cfg.heads,
                                            Mask::none));
        add_inplace(x, ffn_forward(reg, p + ".ffn", norm_with(reg, p + ".ln2", x)));
    }
    return norm_with(reg, "fe.enc.final_ln", x);
}

DecoderCache init_decoder_cache(const ParamRegistry& reg, const FrontendConfig& cfg,
                                const TensorF32& memory) {
    if (memory.rows() < 1 || memory.cols() != cfg.d_model)
        throw ShapeError("encoder memory must be [len x d_model]");
    DecoderCache cache;
    cache.self_kv.resize(cfg.n_dec);
    cache.cross_kv.resize(cfg.n_dec);
    for (int i = 0; i < cfg.n_dec; ++i) {
        append_kv(cache.cross_kv[i], memory, attn_view(reg, dec_prefix(i) + ".cross"), cfg.heads);
    }
    cache.initialized = true;
    return cache;
}

std::vector<float> decode_step(const ParamRegistry& reg, const FrontendConfig& cfg,
                               DecoderCache& cache, int32_t prev_token) {
    if (!cache.initialized) throw StateError("decoder cache not initialized from encode");
    const TensorF32 empty;
    TensorF32 x = embedding_lookup(reg.dense("fe.emb.phoneme"), {prev_token});
    add_position_encoding(x, cache.steps);
    for (int i = 0; i < cfg.n_dec; ++i) {
        const std::string p = dec_prefix(i);
        TensorF32 a = norm_with(reg, p + ".ln1", x);
        add_inplace(x, multi_head_attention(a, a, attn_view(reg, p + ".self"), cfg.heads,
                                            Mask::none, &cache.self_kv[i]));
        add_inplace(x, multi_head_attention(norm_with(reg, p + ".ln2", x), empty,
                                            attn_view(reg, p + ".cross"), cfg.heads, Mask::none,
                                            &cache.cross_kv[i]));
        add_inplace(x, ffn_forward(reg, p + ".ffn", norm_with(reg, p + ".ln3", x)));
    }
    x = norm_with(reg, "fe.dec.final_ln", x);
    TensorF32 logits = linear(x, reg.dense("fe.out.w"), reg.dense("fe.out.b"));
    cache.steps += 1;
    return logits.data;
}

TensorF32 decode_full(const ParamRegistry& reg, const FrontendConfig& cfg,
                      const TensorF32& memory, const std::vector<int32_t>& targets) {
    if (targets.empty()) throw InputError("teacher-forced decode needs at least one target");
    TensorF32 x = embedding_lookup(reg.dense("fe.emb.phoneme"), targets);
    add_position_encoding(x);
    for (int i = 0; i < cfg.n_dec; ++i) {
        const std::string p = dec_prefix(i);
        TensorF32 a = norm_with(reg, p + ".ln1", x);
        add_inplace(x, multi_head_attention(a, a, attn_view(reg, p + ".self"), cfg.heads,
                                            Mask::causal));
        add_inplace(x, multi_head_attention(norm_with(reg, p + ".ln2", x), memory,
                                            attn_view(reg, p + ".cross"), cfg.heads, Mask::none));
        add_inplace(x, ffn_forward(reg, p + ".ffn", norm_with(reg, p + ".ln3", x)));
    }
    x = norm_with(reg, "fe.dec.final_ln", x);
    return linear(x, reg.dense("fe.out.w"), reg.dense("fe.out.b"));
}

namespace {

int32_t argmax_skip_pad(const std::vector<float>& logits) {
    int32_t best = -1;
    for (int32_t i = 0; i < static_cast<int32_t>(logits.size()); ++i) {
        if (i == kPadId) continue;
        if (best < 0 || logits[i] > logits[best]) best = i;
    }
    return best;
}

}  // namespace

std::vector<int32_t> g2p(const ParamRegistry& reg, const FrontendConfig& cfg,
                         const TokenInventory& graphemes, const std::string& text) {
    std::vector<int32_t> ids = tokenize(text, graphemes);
    if (ids.size() <= 2) throw InputError("no tokens to convert after tokenization");
    // BOS is the decoder's start symbol; the encoder sees content plus EOS.
    ids.erase(ids.begin());
    TensorF32 memory = encode(reg, cfg, ids);
    DecoderCache cache = init_decoder_cache(reg, cfg, memory);

    std::vector<int32_t> out;
    int32_t prev = kBosId;
    for (int32_t step = 0; step < cfg.max_len; ++step) {
        const int32_t next = argmax_skip_pad(decode_step(reg, cfg, cache, prev));
        out.push_back(next);
        if (next == kEosId) break;
        prev = next;
    }
    return out;
}

}  // namespace ctts::fe
