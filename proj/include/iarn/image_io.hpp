#pragma once

#include <string>
#include <vector>

#include "iarn/image.hpp"

namespace iarn {

// 8-bit PNG (gray or RGB; palette expanded, alpha stripped) and binary
// PPM/PGM. Format chosen by extension on save, by magic bytes on load.
Image load_image(const std::string& path);
void save_image(const std::string& path, const Image& img);

// Sorted list of loadable images (.png/.ppm/.pgm) directly under `dir`.
std::vector<std::string> list_image_files(const std::string& dir);

}  // namespace iarn
