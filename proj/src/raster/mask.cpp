#include "parceldelin/raster/mask.hpp"

#include <algorithm>

#include "parceldelin/common/error.hpp"

namespace parceldelin::raster {

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void Mask::merge(const Mask& other) {
    if (other.width_ != width_ || other.height_ != height_) {
        throw ShapeError("Mask::merge: dimension mismatch");
    }
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
}

}  // namespace parceldelin::raster
