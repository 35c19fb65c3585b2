#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace factrank {

/// Base class of every error raised by the library. `code()` is a short
/// machine-readable tag used by the CLI and the HTTP service.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// 64-bit FNV-1a.
uint64_t fnv1a64(std::string_view bytes, uint64_t seed = 0xcbf29ce484222325ULL);

/// SplitMix64-seeded xoshiro256** generator. Used instead of the standard
/// distributions so that seeded outputs are identical across standard
/// library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next();
    // Uniform integer in [0, n). n must be > 0.
    uint64_t below(uint64_t n);
    // Uniform double in [0, 1).
    double uniform();
    double normal();
    double exponential(double mean);
    uint64_t poisson(double lambda);
    // Geometric number of failures before first success, p in (0, 1].
    uint64_t geometric(double p);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t s_[4];
};

namespace utf8 {

std::u32string decode(std::string_view s);
std::string encode(std::u32string_view s);
void append(std::string& out, char32_t cp);

bool is_letter(char32_t c);
bool is_upper(char32_t c);
bool is_lower(char32_t c);
bool is_digit(char32_t c);
bool is_space(char32_t c);
bool is_emoji(char32_t c);
char32_t to_lower(char32_t c);
// Strips Latin diacritics from a code point ('ã' -> 'a').
char32_t fold(char32_t c);

std::string lower(std::string_view s);
// Lower-cased and accent-folded; used for keyword matching.
std::string folded(std::string_view s);

}  // namespace utf8

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
bool starts_with_ci(std::string_view s, std::string_view prefix);

// UTC calendar date "YYYY-MM-DD" of a unix timestamp.
std::string utc_date(int64_t unix_seconds);

std::string to_hex64(uint64_t v);
// Parses exactly 16 hex digits (either case). Throws Error("bad_hash").
uint64_t parse_hex64(std::string_view s);

}  // namespace factrank
