#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace csteer {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A precondition of an operation was violated by the caller.
struct ContractViolation : Error {
    using Error::Error;
};

// Malformed domain data (bad vocabulary, empty concept list, ...).
struct InvalidInput : Error {
    using Error::Error;
};

// An enumeration would exceed its configured budget.
struct BudgetExceeded : Error {
    using Error::Error;
};

// External request failed before a response was obtained; safe to retry.
struct TransportError : Error {
    using Error::Error;
};

// A response was obtained but could not be parsed; retrying will not help.
struct ParseError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct TrainingDiverged : Error {
    using Error::Error;
};

// Reports cannot be compared because they were produced on different benchmarks.
struct BenchmarkMismatch : Error {
    using Error::Error;
};

inline uint64_t fnv1a64(std::string_view bytes, uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a64_u64(uint64_t v, uint64_t h) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffu;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string to_hex16(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

}  // namespace csteer
