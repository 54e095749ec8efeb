#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "ctts/common.hpp"

namespace ctts {

struct Waveform {
    std::vector<int16_t> samples;  // PCM16 mono
    int32_t sample_rate = 24000;
};

// RIFF/WAVE, PCM16 little-endian, mono.
void write_wav(const std::string& path, const Waveform& wav);
Waveform read_wav(const std::string& path);

// Progressive writer for streamed synthesis: header first, PCM appended chunk
// by chunk, RIFF sizes patched on finish(). The finished file is byte-equal
// to write_wav() of the concatenated samples.
class StreamingWavWriter {
public:
    StreamingWavWriter(const std::string& path, int32_t sample_rate);
    ~StreamingWavWriter();
    StreamingWavWriter(const StreamingWavWriter&) = delete;
    StreamingWavWriter& operator=(const StreamingWavWriter&) = delete;

    void append(const int16_t* samples, size_t count);
    // Returns total samples written. Safe to call once; the destructor calls
    // it if needed but swallows errors, so call it explicitly.
    size_t finish();

private:
    std::string path_;
    std::ofstream out_;
    size_t samples_ = 0;
    bool finished_ = false;
};

// The PCM payload bytes exactly as write_wav stores them (for byte-level
// comparisons between streamed and one-shot synthesis).
std::vector<uint8_t> pcm_bytes(const Waveform& wav);

}  // namespace ctts
