#include "parceldelin/imageio/png.hpp"

#include <png.h>

#include <cstring>
#include <string>

#include "parceldelin/common/error.hpp"

namespace parceldelin::imageio {
namespace {

// RAII wrapper around libpng's simplified API.
struct PngImage {
    png_image image;
    PngImage() {
        std::memset(&image, 0, sizeof(image));
        image.version = PNG_IMAGE_VERSION;
    }
    ~PngImage() { png_image_free(&image); }
    PngImage(const PngImage&) = delete;
    PngImage& operator=(const PngImage&) = delete;
};

void open_for_read(PngImage& png, const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw IoError("cannot open '" + path.string() + "': no such file");
    }
    if (!png_image_begin_read_from_file(&png.image, path.string().c_str())) {
        throw FormatError("'" + path.string() + "' is not a readable PNG: " + png.image.message);
    }
}

void finish_read(PngImage& png, const std::filesystem::path& path, std::vector<std::uint8_t>& buffer) {
    buffer.resize(PNG_IMAGE_SIZE(png.image));
    if (!png_image_finish_read(&png.image, nullptr, buffer.data(), 0, nullptr)) {
        throw FormatError("failed to decode '" + path.string() + "': " + png.image.message);
    }
}

void write(const std::filesystem::path& path, int width, int height, png_uint_32 format, const std::uint8_t* data) {
    PngImage png;
    png.image.width = static_cast<png_uint_32>(width);
    png.image.height = static_cast<png_uint_32>(height);
    png.image.format = format;
    if (!png_image_write_to_file(&png.image, path.string().c_str(), 0, data, 0, nullptr)) {
        throw IoError("failed to write '" + path.string() + "': " + png.image.message);
    }
}

}  // namespace

RgbImage load_rgb_png(const std::filesystem::path& path) {
    PngImage png;
    open_for_read(png, path);
    if (png.image.format != PNG_FORMAT_RGB) {
        throw FormatError("'" + path.string() + "': expected 8-bit RGB PNG (no alpha, palette or 16-bit)");
    }
    RgbImage img;
    img.width = static_cast<int>(png.image.width);
    img.height = static_cast<int>(png.image.height);
    finish_read(png, path, img.data);
    return img;
}

void save_rgb_png(const std::filesystem::path& path, const RgbImage& image) {
    write(path, image.width, image.height, PNG_FORMAT_RGB, image.data.data());
}

raster::Mask load_mask_png(const std::filesystem::path& path) {
    PngImage png;
    open_for_read(png, path);
    if (png.image.format != PNG_FORMAT_GRAY) {
        throw FormatError("'" + path.string() + "': expected 8-bit grayscale mask PNG");
    }
    std::vector<std::uint8_t> buf;
    finish_read(png, path, buf);
    raster::Mask mask(static_cast<int>(png.image.width), static_cast<int>(png.image.height));
    for (std::size_t i = 0; i < buf.size(); ++i) {
        if (buf[i] != 0 && buf[i] != 255) {
            throw FormatError("'" + path.string() + "': mask pixel " + std::to_string(i) + " has value " +
                              std::to_string(buf[i]) + " (expected 0 or 255)");
        }
        mask.bits()[i] = buf[i] ? 1 : 0;
    }
    return mask;
}

void save_mask_png(const std::filesystem::path& path, const raster::Mask& mask) {
    std::vector<std::uint8_t> buf(mask.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = mask.bits()[i] ? 255 : 0;
    write(path, mask.width(), mask.height(), PNG_FORMAT_GRAY, buf.data());
}

void save_gray_png(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& pixels) {
    if (pixels.size() != static_cast<std::size_t>(width * height)) {
        throw ShapeError("save_gray_png: pixel buffer does not match dimensions");
    }
    write(path, width, height, PNG_FORMAT_GRAY, pixels.data());
}

}  // namespace parceldelin::imageio
