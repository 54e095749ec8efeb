#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ctts {

// Error taxonomy. Exit-code mapping lives in the CLI: usage errors are 2,
// everything else raised at runtime is 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct ArgumentError : Error {
    using Error::Error;
};
struct IndexError : Error {
    using Error::Error;
};
struct StateError : Error {
    using Error::Error;
};
struct InputError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

// Container load failures, each with its own type so callers can tell
// a corrupt header from a short read.
struct LoadError : Error {
    using Error::Error;
};
struct FormatError : LoadError {
    using LoadError::LoadError;
};
struct VersionError : LoadError {
    using LoadError::LoadError;
};
struct TruncationError : LoadError {
    using LoadError::LoadError;
};

enum class Dtype : uint8_t { f32 = 0, f16 = 1, i8 = 2 };

inline size_t dtype_bytes(Dtype d) {
    switch (d) {
        case Dtype::f32: return 4;
        case Dtype::f16: return 2;
        case Dtype::i8: return 1;
    }
    return 4;
}

inline const char* dtype_name(Dtype d) {
    switch (d) {
        case Dtype::f32: return "f32";
        case Dtype::f16: return "f16";
        case Dtype::i8: return "i8";
    }
    return "f32";
}

Dtype dtype_from_name(const std::string& s);

// IEEE 754 binary16 conversions, round-to-nearest-even on narrowing.
// FP16 is a storage format only; all compute stays FP32.
uint16_t f32_to_f16(float v);
float f16_to_f32(uint16_t h);

// Snap values onto the f16 grid (convert down and back up).
inline float f16_snap(float v) { return f16_to_f32(f32_to_f16(v)); }
inline void f16_snap(float* v, size_t n) {
    for (size_t i = 0; i < n; ++i) v[i] = f16_snap(v[i]);
}

// Round half to even, used by the quantizer. Explicit so results do not
// depend on the process FP environment.
float round_half_even(float v);

// Round half away from zero, used by the duration decoder.
float round_half_away(float v);

}  // namespace ctts
