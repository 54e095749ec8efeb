#include "ctts/modelfile.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "ctts/quant.hpp"
#include "ctts/sparse.hpp"

static_assert(std::endian::native == std::endian::little,
              "container serialization assumes a little-endian host");

namespace ctts {

using ordered_json = nlohmann::ordered_json;

namespace {

size_t align_up(size_t v) { return (v + kBlobAlign - 1) / kBlobAlign * kBlobAlign; }

size_t tensor_stored_bytes(const PhysicalTensor& t) {
    if (t.sparse) return sparse::sparse_footprint_bytes(*t.sparse, t.store_dtype);
    if (t.store_dtype == Dtype::i8) {
        if (!t.quant) throw ArgumentError("i8 tensor without quantized data");
        return t.quant->data.size();
    }
    return static_cast<size_t>(t.values.numel()) * dtype_bytes(t.store_dtype);
}

ordered_json fe_config_json(const fe::FrontendConfig& c, const fe::SharingPlan& p) {
    ordered_json j;
    j["n_enc"] = c.n_enc;
    j["n_dec"] = c.n_dec;
    j["d_model"] = c.d_model;
    j["heads"] = c.heads;
    j["d_ff"] = c.d_ff;
    j["grapheme_vocab"] = c.grapheme_vocab;
    j["phoneme_vocab"] = c.phoneme_vocab;
    j["max_len"] = c.max_len;
    j["plan"] = p.mode == fe::PlanMode::shared ? "shared" : "baseline";
    return j;
}

ordered_json ac_config_json(const ac::AcousticConfig& c) {
    ordered_json j;
    j["d_model"] = c.d_model;
    j["heads"] = c.heads;
    j["n_enc_blocks"] = c.n_enc_blocks;
    j["n_dec_blocks"] = c.n_dec_blocks;
    j["conv_channels"] = c.conv_channels;
    j["conv_kernel"] = c.conv_kernel;
    j["n_mels"] = c.n_mels;
    j["n_var_bins"] = c.n_var_bins;
    j["var_channels"] = c.var_channels;
    j["var_kernel"] = c.var_kernel;
    j["pitch_min"] = static_cast<double>(c.pitch_min);
    j["pitch_max"] = static_cast<double>(c.pitch_max);
    j["energy_min"] = static_cast<double>(c.energy_min);
    j["energy_max"] = static_cast<double>(c.energy_max);
    j["phoneme_vocab"] = c.phoneme_vocab;
    j["preset"] = c.preset;
    return j;
}

ordered_json vo_config_json(const vo::VocoderConfig& c) {
    ordered_json j;
    j["h"] = c.h;
    j["d"] = c.d;
    j["n_classes"] = c.n_classes;
    j["sample_rate"] = c.sample_rate;
    j["frame_hop"] = c.frame_hop;
    j["subscale_factor"] = c.subscale_factor;
    j["cond_dim"] = c.cond_dim;
    j["emb_dim"] = c.emb_dim;
    j["n_mels"] = c.n_mels;
    j["block_rows"] = c.block_rows;
    j["block_cols"] = c.block_cols;
    ordered_json sp = ordered_json::object();
    for (const auto& [slot, target] : c.sparsity) sp[slot] = static_cast<double>(target);
    j["sparsity"] = sp;
    return j;
}

fe::FrontendConfig fe_config_parse(const ordered_json& j, fe::SharingPlan& plan) {
    fe::FrontendConfig c;
    c.n_enc = j.at("n_enc").get<int32_t>();
    c.n_dec = j.at("n_dec").get<int32_t>();
    c.d_model = j.at("d_model").get<int32_t>();
    c.heads = j.at("heads").get<int32_t>();
    c.d_ff = j.at("d_ff").get<int32_t>();
    c.grapheme_vocab = j.at("grapheme_vocab").get<int32_t>();
    c.phoneme_vocab = j.at("phoneme_vocab").get<int32_t>();
    c.max_len = j.at("max_len").get<int32_t>();
    const std::string plan_name = j.at("plan").get<std::string>();
    if (plan_name == "shared")
        plan.mode = fe::PlanMode::shared;
    else if (plan_name == "baseline")
        plan.mode = fe::PlanMode::baseline;
    else
        throw FormatError("unknown sharing plan: " + plan_name);
    return c;
}

ac::AcousticConfig ac_config_parse(const ordered_json& j) {
    ac::AcousticConfig c;
    c.d_model = j.at("d_model").get<int32_t>();
    c.heads = j.at("heads").get<int32_t>();
    c.n_enc_blocks = j.at("n_enc_blocks").get<int32_t>();
    c.n_dec_blocks = j.at("n_dec_blocks").get<int32_t>();
    c.conv_channels = j.at("conv_channels").get<int32_t>();
    c.conv_kernel = j.at("conv_kernel").get<int32_t>();
    c.n_mels = j.at("n_mels").get<int32_t>();
    c.n_var_bins = j.at("n_var_bins").get<int32_t>();
    c.var_channels = j.at("var_channels").get<int32_t>();
    c.var_kernel = j.at("var_kernel").get<int32_t>();
    c.pitch_min = static_cast<float>(j.at("pitch_min").get<double>());
    c.pitch_max = static_cast<float>(j.at("pitch_max").get<double>());
    c.energy_min = static_cast<float>(j.at("energy_min").get<double>());
    c.energy_max = static_cast<float>(j.at("energy_max").get<double>());
    c.phoneme_vocab = j.at("phoneme_vocab").get<int32_t>();
    c.preset = j.at("preset").get<std::string>();
    return c;
}

vo::VocoderConfig vo_config_parse(const ordered_json& j) {
    vo::VocoderConfig c;
    c.h = j.at("h").get<int32_t>();
    c.d = j.at("d").get<int32_t>();
    c.n_classes = j.at("n_classes").get<int32_t>();
    c.sample_rate = j.at("sample_rate").get<int32_t>();
    c.frame_hop = j.at("frame_hop").get<int32_t>();
    c.subscale_factor = j.at("subscale_factor").get<int32_t>();
    c.cond_dim = j.at("cond_dim").get<int32_t>();
    c.emb_dim = j.at("emb_dim").get<int32_t>();
    c.n_mels = j.at("n_mels").get<int32_t>();
    c.block_rows = j.at("block_rows").get<int64_t>();
    c.block_cols = j.at("block_cols").get<int64_t>();
    c.sparsity.clear();
    for (const auto& [slot, target] : j.at("sparsity").items())
        c.sparsity[slot] = static_cast<float>(target.get<double>());
    return c;
}

struct ComponentRef {
    const char* name;
    const ParamRegistry* reg;
};

std::vector<ComponentRef> components_of(const TtsModel& m) {
    return {{"frontend", &m.fe_reg}, {"acoustic", &m.ac_reg}, {"vocoder", &m.vo_reg}};
}

ordered_json tensor_descriptors(const TtsModel& model) {
    ordered_json arr = ordered_json::array();
    int64_t id = 0;
    for (const ComponentRef& comp : components_of(model)) {
        const ParamRegistry& reg = *comp.reg;
        for (uint32_t t = 0; t < reg.unique_count(); ++t) {
            const PhysicalTensor& pt = *reg.tensor(t);
            ordered_json d;
            d["id"] = id++;
            d["component"] = comp.name;
            d["name"] = reg.canonical_name(t);
            d["dtype"] = dtype_name(pt.store_dtype);
            d["shape"] = pt.shape();
            if (pt.store_dtype == Dtype::i8) {
                if (!pt.quant) throw ArgumentError("i8 tensor without quantized data");
                d["scale"] = static_cast<double>(pt.quant->scale);
            }
            if (pt.sparse) {
                d["block_shape"] = {pt.sparse->block_rows, pt.sparse->block_cols};
                d["kept_blocks"] = static_cast<int64_t>(pt.sparse->kept_blocks.size());
            }
            arr.push_back(std::move(d));
        }
        for (const auto& [slot, phys] : reg.slots()) {
            if (reg.canonical_name(phys) == slot) continue;
            ordered_json d;
            d["id"] = id++;
            d["component"] = comp.name;
            d["name"] = slot;
            d["alias_of"] = reg.canonical_name(phys);
            arr.push_back(std::move(d));
        }
    }
    return arr;
}

}  // namespace

std::string manifest_json(const TtsModel& model) {
    ordered_json j;
    j["format_version"] = kFormatVersion;
    ordered_json conv;
    conv["gru_gate_order"] = "update,reset,candidate";
    conv["gru_update"] = "h' = (1-z)*h + z*n";
    conv["attention_sharing"] = "encoder layers alternate groups A/B; decoder self->A, cross->B";
    conv["variance_bucketing"] = "clamp to range, linear buckets";
    conv["variance_granularity"] = "per-phoneme, expanded by duration";
    conv["quantization"] = "symmetric per-tensor int8, weights only, round half to even";
    conv["prune_schedule"] = "cubic ramp, exponent 3, block score = mean abs";
    conv["position_encoding"] = "fixed sinusoidal";
    conv["subscale_branches"] = "branch B adds a learned projection of branch A's sample embedding";
    j["conventions"] = conv;
    j["components"] = ordered_json::array(
        {ordered_json{{"name", "frontend"}, {"config", fe_config_json(model.fe_cfg, model.fe_plan)}},
         ordered_json{{"name", "acoustic"}, {"config", ac_config_json(model.ac_cfg)}},
         ordered_json{{"name", "vocoder"}, {"config", vo_config_json(model.vo_cfg)}}});
    j["tensors"] = tensor_descriptors(model);
    return j.dump();
}

namespace {

void append_u32(std::vector<uint8_t>& out, uint32_t v) {
    const size_t n = out.size();
    out.resize(n + 4);
    std::memcpy(out.data() + n, &v, 4);
}

void append_blob(std::vector<uint8_t>& out, const PhysicalTensor& t) {
    if (t.sparse) {
        const sparse::BlockSparseMatrix& m = *t.sparse;
        append_u32(out, static_cast<uint32_t>(m.rows));
        append_u32(out, static_cast<uint32_t>(m.cols));
        append_u32(out, static_cast<uint32_t>(m.block_rows));
        append_u32(out, static_cast<uint32_t>(m.block_cols));
        append_u32(out, static_cast<uint32_t>(m.kept_blocks.size()));
        for (int i = 0; i < 3; ++i) append_u32(out, 0);
        for (const auto& [br, bc] : m.kept_blocks)
            append_u32(out, static_cast<uint32_t>(br) * static_cast<uint32_t>(m.grid_cols()) +
                                static_cast<uint32_t>(bc));
        if (t.store_dtype == Dtype::f16) {
            for (float v : m.block_data) {
                const uint16_t h = f32_to_f16(v);
                out.push_back(static_cast<uint8_t>(h));
                out.push_back(static_cast<uint8_t>(h >> 8));
            }
        } else if (t.store_dtype == Dtype::f32) {
            const size_t n = out.size();
            out.resize(n + m.block_data.size() * 4);
            std::memcpy(out.data() + n, m.block_data.data(), m.block_data.size() * 4);
        } else {
            throw ArgumentError("sparse tensors store f16 or f32 values");
        }
        return;
    }
    switch (t.store_dtype) {
        case Dtype::f32: {
            const size_t n = out.size();
            out.resize(n + t.values.data.size() * 4);
            std::memcpy(out.data() + n, t.values.data.data(), t.values.data.size() * 4);
            return;
        }
        case Dtype::f16: {
            for (float v : t.values.data) {
                const uint16_t h = f32_to_f16(v);
                out.push_back(static_cast<uint8_t>(h));
                out.push_back(static_cast<uint8_t>(h >> 8));
            }
            return;
        }
        case Dtype::i8: {
            const size_t n = out.size();
            out.resize(n + t.quant->data.size());
            std::memcpy(out.data() + n, t.quant->data.data(), t.quant->data.size());
            return;
        }
    }
    throw ArgumentError("unknown storage dtype");
}

}  // namespace

size_t save(const TtsModel& model, const std::string& path) {
    const std::string manifest = manifest_json(model);

    std::vector<uint8_t> out;
    out.reserve(kHeaderBytes + manifest.size());
    out.insert(out.end(), {'C', 'T', 'T', 'S'});
    append_u32(out, kFormatVersion);
    const uint64_t mlen = manifest.size();
    const size_t at = out.size();
    out.resize(at + 8);
    std::memcpy(out.data() + at, &mlen, 8);
    out.insert(out.end(), manifest.begin(), manifest.end());

    for (const ComponentRef& comp : components_of(model)) {
        for (uint32_t t = 0; t < comp.reg->unique_count(); ++t) {
            out.resize(align_up(out.size()), 0);
            const PhysicalTensor& pt = *comp.reg->tensor(t);
            const size_t before = out.size();
            append_blob(out, pt);
            if (out.size() - before != tensor_stored_bytes(pt))
                throw StateError("blob size accounting mismatch for " +
                                 comp.reg->canonical_name(t));
        }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write model file: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write to model file: " + path);
    return out.size();
}

namespace {

class BlobReader {
public:
    BlobReader(const std::vector<uint8_t>& buf, size_t cursor) : buf_(buf), cursor_(cursor) {}

    void align() { cursor_ = align_up(cursor_); }
    size_t cursor() const { return cursor_; }

    const uint8_t* take(size_t n, const std::string& what) {
        if (cursor_ + n > buf_.size())
            throw TruncationError("container truncated while reading " + what);
        const uint8_t* p = buf_.data() + cursor_;
        cursor_ += n;
        return p;
    }

    uint32_t take_u32(const std::string& what) {
        uint32_t v;
        std::memcpy(&v, take(4, what), 4);
        return v;
    }

private:
    const std::vector<uint8_t>& buf_;
    size_t cursor_;
};

int64_t shape_numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

PhysicalTensor read_tensor(BlobReader& r, const ordered_json& d, const std::string& name) {
    PhysicalTensor t;
    t.store_dtype = dtype_from_name(d.at("dtype").get<std::string>());
    const std::vector<int64_t> shape = d.at("shape").get<std::vector<int64_t>>();
    const int64_t numel = shape_numel(shape);
    r.align();

    if (d.contains("block_shape")) {
        sparse::BlockSparseMatrix m;
        if (shape.size() != 2) throw ShapeError("sparse tensor " + name + " must be 2-D");
        m.rows = shape[0];
        m.cols = shape[1];
        const uint32_t rows = r.take_u32(name), cols = r.take_u32(name);
        const uint32_t br = r.take_u32(name), bc = r.take_u32(name);
        const uint32_t n_kept = r.take_u32(name);
        for (int i = 0; i < 3; ++i) r.take_u32(name);
        const std::vector<int64_t> bs = d.at("block_shape").get<std::vector<int64_t>>();
        if (rows != m.rows || cols != m.cols || bs.size() != 2 || br != bs[0] || bc != bs[1] ||
            n_kept != d.at("kept_blocks").get<uint32_t>())
            throw ShapeError("sparse blob header disagrees with manifest for " + name);
        if (br == 0 || bc == 0 || m.rows % br != 0 || m.cols % bc != 0)
            throw ShapeError("block shape does not divide " + name);
        m.block_rows = br;
        m.block_cols = bc;
        const int64_t grid = m.grid_rows() * m.grid_cols();
        m.kept_blocks.reserve(n_kept);
        int64_t prev = -1;
        for (uint32_t i = 0; i < n_kept; ++i) {
            const int64_t lin = r.take_u32(name);
            if (lin >= grid || lin <= prev)
                throw FormatError("sparse block index stream corrupt in " + name);
            prev = lin;
            m.kept_blocks.emplace_back(static_cast<int32_t>(lin / m.grid_cols()),
                                       static_cast<int32_t>(lin % m.grid_cols()));
        }
        const size_t nv = static_cast<size_t>(n_kept) * static_cast<size_t>(m.block_numel());
        m.block_data.resize(nv);
        if (t.store_dtype == Dtype::f16) {
            const uint8_t* p = r.take(nv * 2, name);
            for (size_t i = 0; i < nv; ++i)
                m.block_data[i] = f16_to_f32(static_cast<uint16_t>(p[2 * i] | p[2 * i + 1] << 8));
        } else if (t.store_dtype == Dtype::f32) {
            std::memcpy(m.block_data.data(), r.take(nv * 4, name), nv * 4);
        } else {
            throw FormatError("sparse tensor " + name + " has unsupported dtype");
        }
        t.values = sparse::densify(m);
        t.sparse = std::move(m);
        return t;
    }

    switch (t.store_dtype) {
        case Dtype::f32: {
            t.values = TensorF32::zeros(shape);
            std::memcpy(t.values.data.data(), r.take(static_cast<size_t>(numel) * 4, name),
                        static_cast<size_t>(numel) * 4);
            return t;
        }
        case Dtype::f16: {
            t.values = TensorF32::zeros(shape);
            const uint8_t* p = r.take(static_cast<size_t>(numel) * 2, name);
            for (int64_t i = 0; i < numel; ++i)
                t.values.data[static_cast<size_t>(i)] =
                    f16_to_f32(static_cast<uint16_t>(p[2 * i] | p[2 * i + 1] << 8));
            return t;
        }
        case Dtype::i8: {
            quant::QTensorI8 q;
            q.shape = shape;
            q.scale = static_cast<float>(d.at("scale").get<double>());
            q.data.resize(static_cast<size_t>(numel));
            std::memcpy(q.data.data(), r.take(static_cast<size_t>(numel), name),
                        static_cast<size_t>(numel));
            t.values = quant::dequantize(q);
            t.quant = std::move(q);
            return t;
        }
    }
    throw FormatError("unknown dtype for tensor " + name);
}

}  // namespace

TtsModel load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open model file: " + path);
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (buf.size() < kHeaderBytes) throw TruncationError("container shorter than its header");
    if (std::memcmp(buf.data(), "CTTS", 4) != 0)
        throw FormatError("bad magic at offset 0: not a CTTS container");
    uint32_t version;
    std::memcpy(&version, buf.data() + 4, 4);
    if (version != kFormatVersion)
        throw VersionError("unsupported container version " + std::to_string(version) +
                           ", expected " + std::to_string(kFormatVersion));
    uint64_t mlen;
    std::memcpy(&mlen, buf.data() + 8, 8);
    if (kHeaderBytes + mlen > buf.size())
        throw TruncationError("container truncated inside the manifest");

    ordered_json j;
    try {
        j = ordered_json::parse(buf.begin() + kHeaderBytes, buf.begin() + kHeaderBytes + mlen);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
    }

    TtsModel model;
    try {
        if (j.at("format_version").get<uint32_t>() != version)
            throw FormatError("manifest format_version disagrees with the binary header");
        bool seen[3] = {false, false, false};
        for (const auto& comp : j.at("components")) {
            const std::string name = comp.at("name").get<std::string>();
            if (name == "frontend") {
                model.fe_cfg = fe_config_parse(comp.at("config"), model.fe_plan);
                seen[0] = true;
            } else if (name == "acoustic") {
                model.ac_cfg = ac_config_parse(comp.at("config"));
                seen[1] = true;
            } else if (name == "vocoder") {
                model.vo_cfg = vo_config_parse(comp.at("config"));
                seen[2] = true;
            } else {
                throw FormatError("unknown component: " + name);
            }
        }
        if (!seen[0] || !seen[1] || !seen[2])
            throw FormatError("container must hold frontend, acoustic and vocoder components");

        BlobReader r(buf, kHeaderBytes + mlen);
        for (const auto& d : j.at("tensors")) {
            const std::string comp = d.at("component").get<std::string>();
            const std::string name = d.at("name").get<std::string>();
            if (comp != "frontend" && comp != "acoustic" && comp != "vocoder")
                throw FormatError("tensor " + name + " belongs to unknown component " + comp);
            ParamRegistry& reg = comp == "frontend"
                                     ? model.fe_reg
                                     : comp == "acoustic" ? model.ac_reg : model.vo_reg;
            if (d.contains("alias_of")) {
                const std::string target = d.at("alias_of").get<std::string>();
                if (!reg.has(target) || reg.canonical_name(reg.physical_id(target)) != target)
                    throw FormatError("alias " + name + " points at missing or non-canonical " +
                                      target);
                reg.alias(name, target);
            } else {
                reg.add(name, read_tensor(r, d, name));
            }
        }
        if (r.cursor() != buf.size())
            throw FormatError("container has " + std::to_string(buf.size() - r.cursor()) +
                              " unexpected trailing bytes");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest field error: ") + e.what());
    }

    if (model.fe_cfg.phoneme_vocab != model.ac_cfg.phoneme_vocab)
        throw FormatError("frontend and acoustic phoneme vocabularies disagree");
    if (model.ac_cfg.n_mels != model.vo_cfg.n_mels)
        throw FormatError("acoustic and vocoder mel dimensions disagree");
    fe::validate(model.fe_cfg, model.fe_plan);
    ac::validate(model.ac_cfg);
    vo::validate(model.vo_cfg);
    return model;
}

FootprintReport footprint_report(const TtsModel& model) {
    FootprintReport rep;
    const std::string manifest = manifest_json(model);
    rep.manifest_bytes = manifest.size();
    size_t cursor = kHeaderBytes + manifest.size();

    for (const ComponentRef& comp : components_of(model)) {
        const ParamRegistry& reg = *comp.reg;
        ComponentFootprint c;
        c.name = comp.name;
        c.physical_params = reg.unique_params();
        c.blobs = reg.unique_count();
        c.slots = reg.slot_count();
        for (uint32_t t = 0; t < reg.unique_count(); ++t) {
            const size_t stored = tensor_stored_bytes(*reg.tensor(t));
            const size_t aligned = align_up(cursor);
            c.bytes += (aligned - cursor) + stored;
            c.stored_bytes += stored;
            cursor = aligned + stored;
        }
        for (const auto& [slot, phys] : reg.slots())
            c.logical_bytes += tensor_stored_bytes(*reg.tensor(phys));
        rep.components.push_back(std::move(c));
    }
    rep.total_bytes = cursor;
    rep.per_voice_bytes = rep.components[1].bytes + rep.components[2].bytes;
    return rep;
}

}  // namespace ctts
