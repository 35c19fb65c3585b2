#include "factrank/phash.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "factrank/image_io.hpp"
#include "factrank/util.hpp"

namespace factrank {

namespace {

constexpr int kResize = 32;
constexpr int kBlock = 8;

}  // namespace

std::string PerceptualHash::hex() const { return to_hex64(bits); }

PerceptualHash PerceptualHash::from_hex(std::string_view hex) { return {parse_hex64(hex)}; }

namespace detail {

std::vector<double> grayscale_resized(const Image& image, int size) {
    const int w = image.width, h = image.height;
    std::vector<int> gray(static_cast<size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int v;
            if (image.channels >= 3) {
                v = (299 * image.at(x, y, 0) + 587 * image.at(x, y, 1) + 114 * image.at(x, y, 2) + 500) / 1000;
            } else {
                v = image.at(x, y, 0);
            }
            gray[static_cast<size_t>(y) * w + x] = v;
        }
    }

    // Pixel-centre aligned bilinear sampling, edges clamped.
    auto source_coord = [size](int o, int extent, int& i0, int& i1, double& frac) {
        double s = (o + 0.5) * extent / size - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(extent - 1));
        i0 = static_cast<int>(std::floor(s));
        i1 = std::min(i0 + 1, extent - 1);
        frac = s - i0;
    };

    std::vector<double> out(static_cast<size_t>(size) * size);
    for (int oy = 0; oy < size; ++oy) {
        int y0, y1;
        double fy;
        source_coord(oy, h, y0, y1, fy);
        for (int ox = 0; ox < size; ++ox) {
            int x0, x1;
            double fx;
            source_coord(ox, w, x0, x1, fx);
            const double top = gray[y0 * w + x0] * (1.0 - fx) + gray[y0 * w + x1] * fx;
            const double bottom = gray[y1 * w + x0] * (1.0 - fx) + gray[y1 * w + x1] * fx;
            out[static_cast<size_t>(oy) * size + ox] = top * (1.0 - fy) + bottom * fy;
        }
    }
    return out;
}

std::vector<double> dct2d(const std::vector<double>& block, int size) {
    std::vector<double> basis(static_cast<size_t>(size) * size);
    for (int u = 0; u < size; ++u) {
        const double alpha = u == 0 ? std::sqrt(1.0 / size) : std::sqrt(2.0 / size);
        for (int x = 0; x < size; ++x)
            basis[u * size + x] = alpha * std::cos(M_PI * (2 * x + 1) * u / (2.0 * size));
    }
    // rows: tmp = B * X ; result = tmp * B^T
    std::vector<double> tmp(block.size(), 0.0), out(block.size(), 0.0);
    for (int u = 0; u < size; ++u)
        for (int x = 0; x < size; ++x) {
            double acc = 0.0;
            for (int k = 0; k < size; ++k) acc += basis[u * size + k] * block[k * size + x];
            tmp[u * size + x] = acc;
        }
    for (int u = 0; u < size; ++u)
        for (int v = 0; v < size; ++v) {
            double acc = 0.0;
            for (int k = 0; k < size; ++k) acc += tmp[u * size + k] * basis[v * size + k];
            out[u * size + v] = acc;
        }
    return out;
}

}  // namespace detail

PerceptualHash phash(const Image& image) {
    if (image.width < 1 || image.height < 1 || image.pixels.empty())
        throw Error("empty_image", "empty image");

    const auto coeffs = detail::dct2d(detail::grayscale_resized(image, kResize), kResize);

    std::vector<double> low(kBlock * kBlock);
    for (int u = 0; u < kBlock; ++u)
        for (int v = 0; v < kBlock; ++v) low[u * kBlock + v] = coeffs[u * kResize + v];

    std::vector<double> ac(low.begin() + 1, low.end());
    std::nth_element(ac.begin(), ac.begin() + ac.size() / 2, ac.end());
    const double median = ac[ac.size() / 2];

    uint64_t bits = 0;
    for (int i = 1; i < kBlock * kBlock; ++i)
        if (low[i] > median) bits |= uint64_t{1} << i;
    return {bits};
}

int hamming(PerceptualHash a, PerceptualHash b) { return std::popcount(a.bits ^ b.bits); }

std::map<uint64_t, std::vector<size_t>> group_by_hash(std::span<const uint64_t> hashes,
                                                      GroupingMode mode, int distance) {
    std::map<uint64_t, std::vector<size_t>> exact;
    for (size_t i = 0; i < hashes.size(); ++i) exact[hashes[i]].push_back(i);
    if (mode == GroupingMode::exact || distance <= 0) return exact;

    // Union-find over the distinct hashes.
    std::vector<uint64_t> distinct;
    distinct.reserve(exact.size());
    for (const auto& [h, _] : exact) distinct.push_back(h);
    std::vector<size_t> parent(distinct.size());
    std::iota(parent.begin(), parent.end(), size_t{0});
    auto find = [&](size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (size_t i = 0; i < distinct.size(); ++i)
        for (size_t j = i + 1; j < distinct.size(); ++j)
            if (std::popcount(distinct[i] ^ distinct[j]) <= distance) {
                const size_t a = find(i), b = find(j);
                // distinct is ascending, so the smaller root stays canonical.
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }

    std::map<uint64_t, std::vector<size_t>> groups;
    for (size_t i = 0; i < distinct.size(); ++i) {
        auto& members = groups[distinct[find(i)]];
        const auto& src = exact[distinct[i]];
        members.insert(members.end(), src.begin(), src.end());
    }
    for (auto& [_, members] : groups) std::sort(members.begin(), members.end());
    return groups;
}

}  // namespace factrank
