#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hgat {

// Error taxonomy mirrors the CLI exit codes: input 1, config 2, numeric 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or missing input data: unreadable files, malformed rows, dangling ids.
class InputError : public Error {
public:
    using Error::Error;
};

// Contradictory or out-of-range settings.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Non-finite losses, shape mismatches and other numeric breakdowns.
class NumericError : public Error {
public:
    using Error::Error;
};

std::vector<std::string> split_tabs(const std::string& line);

// Text fields in TSV files carry tabs/newlines as \t, \n and backslash as \\.
std::string escape_text(std::string_view raw);
std::string unescape_text(std::string_view escaped, const std::string& context);

std::string lowercase_ascii(std::string_view s);

// Deterministic RNG helpers. std::uniform_*_distribution output is
// implementation-defined, so draws are derived from raw engine output to keep
// artifacts byte-identical across toolchains.
using Rng = std::mt19937_64;

double rng_unit(Rng& rng);                     // [0, 1)
double rng_range(Rng& rng, double lo, double hi);
std::size_t rng_below(Rng& rng, std::size_t n);  // unbiased [0, n)

template <typename T>
void shuffle_deterministic(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng_below(rng, i)]);
    }
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 14695981039346656037ULL);
std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 14695981039346656037ULL);

std::string read_file(const std::filesystem::path& path);

// Writes to "<path>.tmp" then renames, so partial artifacts never appear
// under the final name.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

// Little-endian binary helpers for checkpoint / feature-cache payloads.
void put_u8(std::string& out, std::uint8_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f32(std::string& out, float v);

class ByteReader {
public:
    ByteReader(std::string_view data, std::string context)
        : data_(data), context_(std::move(context)) {}

    std::uint8_t u8(const char* what);
    std::uint32_t u32(const char* what);
    std::uint64_t u64(const char* what);
    float f32(const char* what);
    std::string_view bytes(std::size_t n, const char* what);
    bool exhausted() const { return pos_ == data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    void need(std::size_t n, const char* what) const;
    std::string_view data_;
    std::string context_;
    std::size_t pos_ = 0;
};

// Fixed-width float formatting used by every text artifact; snprintf with
// %.17g round-trips doubles exactly and is stable across runs.
std::string format_double(double v);

}  // namespace hgat
