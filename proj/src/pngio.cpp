#include "ctlearn/pngio.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include <png.h>

namespace ctlearn {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_gray_png(const std::string& path, const NdArray<double>& image, double lo, double hi) {
    if (image.shape().size() != 2) throw std::invalid_argument("write_gray_png: image must be 2-d");
    if (!(hi > lo)) throw std::invalid_argument("write_gray_png: window requires hi > lo");
    const int h = image.dim(0);
    const int w = image.dim(1);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(h) * w);
    const double scale = 255.0 / (hi - lo);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        double v = (image[i] - lo) * scale;
        bytes[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0) + 0.5);
    }

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("write_gray_png: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("write_gray_png: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("write_gray_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_gray_png: libpng error while writing " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < h; ++r)
        png_write_row(png, const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(r) * w));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

NdArray<std::uint8_t> read_gray_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("read_gray_png: cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("read_gray_png: png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("read_gray_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_gray_png: libpng error while reading " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY || png_get_bit_depth(png, info) != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_gray_png: expected 8-bit grayscale " + path);
    }
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int w = static_cast<int>(png_get_image_width(png, info));
    NdArray<std::uint8_t> out(Shape{h, w});
    for (int r = 0; r < h; ++r) png_read_row(png, out.data() + static_cast<std::size_t>(r) * w, nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

}  // namespace ctlearn
