#pragma once

#include "adgs/types.hpp"

#include <string>

namespace adgs {

// Portable float maps: 'PF' (color) / 'Pf' (grayscale), little-endian,
// bottom-up scanline order. Round-trips are bit-exact for float32 data.
void write_pfm(const std::string& path, const Image& img);
void write_pfm_depth(const std::string& path, const DepthMap& depth);
Image read_pfm(const std::string& path);
DepthMap read_pfm_depth(const std::string& path);

// 8-bit RGB PNG; values clamped to [0,1] and quantized on write.
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

/// Dispatches on extension (.pfm / .png).
Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& img);

}  // namespace adgs
