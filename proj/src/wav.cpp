#include "ctts/wav.hpp"

#include <cstring>
#include <fstream>

namespace ctts {

namespace {

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
    b.push_back(static_cast<uint8_t>(v));
    b.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
    put_u16(b, static_cast<uint16_t>(v));
    put_u16(b, static_cast<uint16_t>(v >> 16));
}

void put_tag(std::vector<uint8_t>& b, const char* tag) {
    b.insert(b.end(), tag, tag + 4);
}

uint32_t get_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
           static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

uint16_t get_u16(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | p[1] << 8);
}

}  // namespace

std::vector<uint8_t> pcm_bytes(const Waveform& wav) {
    std::vector<uint8_t> out;
    out.reserve(wav.samples.size() * 2);
    for (int16_t s : wav.samples) put_u16(out, static_cast<uint16_t>(s));
    return out;
}

namespace {

std::vector<uint8_t> wav_header(int32_t sample_rate, uint32_t data_bytes) {
    std::vector<uint8_t> b;
    b.reserve(44);
    put_tag(b, "RIFF");
    put_u32(b, 36 + data_bytes);
    put_tag(b, "WAVE");
    put_tag(b, "fmt ");
    put_u32(b, 16);
    put_u16(b, 1);  // PCM
    put_u16(b, 1);  // mono
    put_u32(b, static_cast<uint32_t>(sample_rate));
    put_u32(b, static_cast<uint32_t>(sample_rate) * 2);
    put_u16(b, 2);   // block align
    put_u16(b, 16);  // bits per sample
    put_tag(b, "data");
    put_u32(b, data_bytes);
    return b;
}

}  // namespace

void write_wav(const std::string& path, const Waveform& wav) {
    std::vector<uint8_t> b = wav_header(wav.sample_rate,
                                        static_cast<uint32_t>(wav.samples.size() * 2));
    const std::vector<uint8_t> payload = pcm_bytes(wav);
    b.insert(b.end(), payload.begin(), payload.end());

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write wav: " + path);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    if (!out) throw IoError("short write to wav: " + path);
}

StreamingWavWriter::StreamingWavWriter(const std::string& path, int32_t sample_rate)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot write wav: " + path);
    const std::vector<uint8_t> hdr = wav_header(sample_rate, 0);
    out_.write(reinterpret_cast<const char*>(hdr.data()), static_cast<std::streamsize>(hdr.size()));
    if (!out_) throw IoError("short write to wav: " + path);
}

StreamingWavWriter::~StreamingWavWriter() {
    if (!finished_) {
        try {
            finish();
        } catch (...) {
        }
    }
}

void StreamingWavWriter::append(const int16_t* samples, size_t count) {
    if (finished_) throw StateError("wav writer already finished: " + path_);
    std::vector<uint8_t> b;
    b.reserve(count * 2);
    for (size_t i = 0; i < count; ++i) put_u16(b, static_cast<uint16_t>(samples[i]));
    out_.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    if (!out_) throw IoError("short write to wav: " + path_);
    samples_ += count;
}

size_t StreamingWavWriter::finish() {
    if (finished_) return samples_;
    finished_ = true;
    const uint32_t data_bytes = static_cast<uint32_t>(samples_ * 2);
    std::vector<uint8_t> patch;
    put_u32(patch, 36 + data_bytes);
    out_.seekp(4);
    out_.write(reinterpret_cast<const char*>(patch.data()), 4);
    patch.clear();
    put_u32(patch, data_bytes);
    out_.seekp(40);
    out_.write(reinterpret_cast<const char*>(patch.data()), 4);
    out_.flush();
    if (!out_) throw IoError("cannot finalize wav: " + path_);
    return samples_;
}

Waveform read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open wav: " + path);
    std::vector<uint8_t> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 ||
        std::memcmp(b.data() + 8, "WAVE", 4) != 0)
        throw FormatError("not a RIFF/WAVE file: " + path);

    Waveform wav;
    bool got_fmt = false, got_data = false;
    size_t pos = 12;
    while (pos + 8 <= b.size()) {
        const uint32_t size = get_u32(b.data() + pos + 4);
        const size_t body = pos + 8;
        if (body + size > b.size()) throw TruncationError("wav chunk truncated: " + path);
        if (std::memcmp(b.data() + pos, "fmt ", 4) == 0) {
            if (size < 16) throw FormatError("short fmt chunk: " + path);
            if (get_u16(b.data() + body) != 1 || get_u16(b.data() + body + 2) != 1 ||
                get_u16(b.data() + body + 14) != 16)
                throw FormatError("only PCM16 mono is supported: " + path);
            wav.sample_rate = static_cast<int32_t>(get_u32(b.data() + body + 4));
            got_fmt = true;
        } else if (std::memcmp(b.data() + pos, "data", 4) == 0) {
            wav.samples.resize(size / 2);
            for (size_t i = 0; i < wav.samples.size(); ++i)
                wav.samples[i] = static_cast<int16_t>(get_u16(b.data() + body + i * 2));
            got_data = true;
        }
        pos = body + size + (size % 2);  // RIFF chunks are 2-byte aligned
    }
    if (!got_fmt || !got_data) throw FormatError("missing fmt or data chunk: " + path);
    return wav;
}

}  // namespace ctts
