#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace votestack {

// Exception hierarchy shared by all modules. The CLI maps these onto its
// exit-code contract: input/format/argument problems exit with 1,
// training/contract failures with 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed file content (bad header, wrong field count, bad value).
struct FormatError : Error {
    using Error::Error;
};

// A precondition on an argument was violated.
struct ArgumentError : Error {
    using Error::Error;
};

// Dataset with no usable rows.
struct EmptyDatasetError : Error {
    using Error::Error;
};

// A single record is invalid (empty text/label).
struct RecordError : Error {
    using Error::Error;
};

// A class is too small for the requested stratified partitioning.
struct StratificationError : Error {
    using Error::Error;
};

// Matrix/tensor dimension disagreement.
struct ShapeError : Error {
    using Error::Error;
};

// A cross-module contract was violated (e.g. pipeline fingerprint mismatch).
struct ContractError : Error {
    using Error::Error;
};

// External predictions do not cover the expected example ids.
struct CoverageError : Error {
    using Error::Error;
};

// Training produced a non-finite loss.
struct DivergenceError : Error {
    using Error::Error;
};

// Filesystem problem (missing file, unreadable, unwritable).
struct IoError : Error {
    using Error::Error;
};

// Aggregated run-config validation failure; `issues` holds one entry per
// offending field, each prefixed with its field path.
struct ValidationError : Error {
    std::vector<std::string> issues;
    explicit ValidationError(std::vector<std::string> problems)
        : Error(join(problems)), issues(std::move(problems)) {}

  private:
    static std::string join(const std::vector<std::string>& problems) {
        std::string msg = "config validation failed:";
        for (const auto& p : problems) {
            msg += "\n  - " + p;
        }
        return msg;
    }
};

// --- Hashing -----------------------------------------------------------

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = kFnvOffset) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t h = kFnvOffset) {
    return fnv1a64(s.data(), s.size(), h);
}

std::string hex64(std::uint64_t value);

// Content hash of a file, streamed; throws IoError if unreadable.
std::string hash_file(const std::string& path);

// Reads a whole file into memory; throws IoError if unreadable.
std::string read_file(const std::string& path);

// Writes a whole file; throws IoError on failure.
void write_file(const std::string& path, const std::string& content);

// --- Deterministic RNG -------------------------------------------------
//
// All seeded behaviour in the toolkit flows through SplitMix64 so results
// are reproducible across standard libraries and platforms.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t next_below(std::uint64_t n) { return next() % n; }

    // Uniform in [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }
};

template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace votestack
