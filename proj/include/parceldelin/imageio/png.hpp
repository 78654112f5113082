#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "parceldelin/raster/mask.hpp"

namespace parceldelin::imageio {

// Interleaved 8-bit RGB, row-major (H x W x 3).
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w * h * 3), 0) {}

    std::uint8_t& at(int col, int row, int ch) { return data[static_cast<std::size_t>((row * width + col) * 3 + ch)]; }
    std::uint8_t at(int col, int row, int ch) const {
        return data[static_cast<std::size_t>((row * width + col) * 3 + ch)];
    }
    // Channel value scaled to [0, 1].
    float value(int col, int row, int ch) const { return static_cast<float>(at(col, row, ch)) / 255.0f; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// Reads an 8-bit RGB PNG. Grayscale, alpha, palette or 16-bit files raise
// FormatError; unreadable files raise IoError.
RgbImage load_rgb_png(const std::filesystem::path& path);
void save_rgb_png(const std::filesystem::path& path, const RgbImage& image);

// Masks are 8-bit grayscale PNGs holding 0 or 255.
raster::Mask load_mask_png(const std::filesystem::path& path);
void save_mask_png(const std::filesystem::path& path, const raster::Mask& mask);

void save_gray_png(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& pixels);

}  // namespace parceldelin::imageio
