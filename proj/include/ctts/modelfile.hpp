#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctts/acoustic.hpp"
#include "ctts/frontend.hpp"
#include "ctts/registry.hpp"
#include "ctts/vocoder.hpp"

namespace ctts {

// The three components plus their config snapshots; what a `.ctts` file
// holds. Registries keep aliasing (shared physical tensors) intact.
struct TtsModel {
    fe::FrontendConfig fe_cfg;
    fe::SharingPlan fe_plan;
    ac::AcousticConfig ac_cfg;
    vo::VocoderConfig vo_cfg;
    ParamRegistry fe_reg, ac_reg, vo_reg;
};

constexpr uint32_t kFormatVersion = 1;
constexpr size_t kHeaderBytes = 16;  // magic + version + manifest length
constexpr size_t kBlobAlign = 64;

// Container layout: "CTTS" magic, u32 format version, u64 manifest length,
// UTF-8 JSON manifest, then one 64-byte-aligned little-endian blob per
// physical tensor, in descriptor order. Aliased slots are descriptors
// without blobs. Returns bytes written (== file size).
size_t save(const TtsModel& model, const std::string& path);

TtsModel load(const std::string& path);

// The exact manifest text save() embeds.
std::string manifest_json(const TtsModel& model);

struct ComponentFootprint {
    std::string name;
    size_t bytes = 0;          // blob bytes incl. per-blob alignment padding
    size_t stored_bytes = 0;   // raw tensor storage, no padding
    size_t logical_bytes = 0;  // as if every logical slot were stored separately
    int64_t physical_params = 0;
    size_t blobs = 0;
    size_t slots = 0;
};

struct FootprintReport {
    size_t header_bytes = kHeaderBytes;
    size_t manifest_bytes = 0;
    std::vector<ComponentFootprint> components;
    size_t total_bytes = 0;      // header + manifest + components == file size
    size_t per_voice_bytes = 0;  // acoustic + vocoder (frontend is shared across voices)
};

// Derived from the same layout routine save() uses, so the report is always
// additive and matches the actual file size.
FootprintReport footprint_report(const TtsModel& model);

}  // namespace ctts
