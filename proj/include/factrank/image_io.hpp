#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace factrank {

/// 8-bit interleaved raster, 1 (gray) or 3 (RGB) channels.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<uint8_t> pixels;

    uint8_t at(int x, int y, int c = 0) const {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
    }
};

// Decodes PNG or JPEG (sniffed from the magic bytes). Alpha is dropped and
// palettes/16-bit samples are expanded to 8-bit gray or RGB.
Image decode_image(std::span<const uint8_t> bytes);
Image load_image(const std::filesystem::path& path);

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace factrank
