#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctlearn/core.hpp"

namespace ctlearn {

// 8-bit grayscale preview of a 2-d array, windowed to [lo, hi]: values at or
// below lo map to 0, at or above hi to 255.
void write_gray_png(const std::string& path, const NdArray<double>& image, double lo, double hi);

// Decodes an 8-bit grayscale PNG written by write_gray_png.
NdArray<std::uint8_t> read_gray_png(const std::string& path);

template <typename T>
void write_windowed_png(const std::string& path, const NdArray<T>& image, double lo, double hi) {
    write_gray_png(path, image.template cast<double>(), lo, hi);
}

}  // namespace ctlearn
