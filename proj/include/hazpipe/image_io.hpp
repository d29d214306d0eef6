#pragma once

#include <string>
#include <vector>

#include "hazpipe/image.hpp"

namespace hazpipe {

/// Decode a PNG or PGM file (by extension) to RGB. Gray sources replicate
/// the channel. Throws IoError on missing files or decode failures.
RgbImage read_image(const std::string& path);

void write_png(const std::string& path, const RgbImage& img);
void write_png(const std::string& path, const GrayImage& img);

/// Binary (P5) PGM, 8-bit.
void write_pgm(const std::string& path, const GrayImage& img);

/// In-memory PNG encoding; used for service payloads.
std::vector<uint8_t> encode_png(const RgbImage& img);

std::string base64_encode(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> base64_decode(const std::string& text);

}  // namespace hazpipe
