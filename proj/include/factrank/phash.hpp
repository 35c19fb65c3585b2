#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace factrank {

struct Image;

/// 64-bit DCT perceptual hash. Bit i (LSB = 0) corresponds to coefficient
/// (i / 8, i % 8) of the low-frequency 8x8 block.
struct PerceptualHash {
    uint64_t bits = 0;

    std::string hex() const;
    static PerceptualHash from_hex(std::string_view hex);

    friend bool operator==(PerceptualHash, PerceptualHash) = default;
    friend auto operator<=>(PerceptualHash a, PerceptualHash b) { return a.bits <=> b.bits; }
};

// Grayscale (integer luma) -> bilinear 32x32 -> orthonormal 2-D DCT-II ->
// top-left 8x8 block -> bit set iff coefficient > median of the 63 AC
// coefficients. The DC bit is always 0. Throws Error("empty_image").
PerceptualHash phash(const Image& image);

int hamming(PerceptualHash a, PerceptualHash b);

enum class GroupingMode { exact, near };

// Groups hash indices into stories. Exact mode partitions by equality; near
// mode single-links hashes within `distance` bits (transitive closure). The
// key of each group is its smallest member hash.
std::map<uint64_t, std::vector<size_t>> group_by_hash(std::span<const uint64_t> hashes,
                                                      GroupingMode mode, int distance = 4);

namespace detail {

// Exposed for tests.
std::vector<double> grayscale_resized(const Image& image, int size);
std::vector<double> dct2d(const std::vector<double>& block, int size);

}  // namespace detail

}  // namespace factrank
