#pragma once

#include <string>

#include "core.hpp"

namespace p3m {

// 8-bit PNG I/O. Color images are read as RGB (alpha/palette expanded or
// stripped); single-channel files back mattes, masks and trimaps. Byte b maps
// to b/255.0 on read and round(v*255) on write, so a read-write cycle of our
// own files is byte-exact.

Image read_image(const std::string& path);
void write_image(const Image& img, const std::string& path);

AlphaMatte read_matte(const std::string& path);
void write_matte(const AlphaMatte& m, const std::string& path);

// Mask files: 0 = outside, anything >= 128 = inside; written as {0, 255}.
RegionMask read_mask(const std::string& path);
void write_mask(const RegionMask& m, const std::string& path);

// Trimap files use {0, 128, 255} for {BG, TRANSITION, FG}; on read, arbitrary
// bytes snap to the nearest of the three codes.
Trimap read_trimap(const std::string& path);
void write_trimap(const Trimap& t, const std::string& path);

// Reads only the PNG header; cheap existence / dimension probe.
void read_png_size(const std::string& path, int* h, int* w);

}  // namespace p3m
