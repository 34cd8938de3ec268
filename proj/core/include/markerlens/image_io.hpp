#pragma once

#include <string>

#include "markerlens/image.hpp"

namespace markerlens {

// Supported containers: PNG (8-bit RGB or gray), binary PPM "P6" and binary
// PGM "P5" with maxval 255. All are lossless, so save followed by load is
// bit-exact. Grayscale files come back as ImageRGB with r=g=b.
//
// Errors: file_not_found, unsupported_format, corrupt_data, io_failure.
ImageRGB load_image(const std::string& path);

// Format chosen by extension: .png/.ppm for RGB, .png/.pgm for gray.
void save_image(const ImageRGB& img, const std::string& path);
void save_image(const ImageGray& img, const std::string& path);

bool is_supported_image_path(const std::string& path);

}  // namespace markerlens
