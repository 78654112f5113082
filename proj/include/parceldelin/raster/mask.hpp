#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace parceldelin::raster {

// Row-major binary grid; every cell holds 0 or 1.
class Mask {
public:
    Mask() = default;
    Mask(int width, int height) : width_(width), height_(height), bits_(static_cast<std::size_t>(width * height), 0) {}

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return bits_.size(); }

    bool in_bounds(long long col, long long row) const noexcept {
        return col >= 0 && row >= 0 && col < width_ && row < height_;
    }
    std::uint8_t get(int col, int row) const { return bits_[static_cast<std::size_t>(row * width_ + col)]; }
    void set(int col, int row, std::uint8_t v = 1) { bits_[static_cast<std::size_t>(row * width_ + col)] = v; }
    // Sets the pixel if it lies inside the grid.
    void set_clipped(long long col, long long row) {
        if (in_bounds(col, row)) bits_[static_cast<std::size_t>(row * width_ + col)] = 1;
    }

    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
    std::vector<std::uint8_t>& bits() noexcept { return bits_; }

    std::size_t count() const;
    // Logical OR with a mask of the same dimensions.
    void merge(const Mask& other);

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

}  // namespace parceldelin::raster
