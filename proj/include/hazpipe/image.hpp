#pragma once

#include <cstdint>
#include <vector>

#include "hazpipe/types.hpp"

namespace hazpipe {

/// Single-channel image, row-major, values in [0,1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), values(static_cast<size_t>(w) * h, fill) {}

    float at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    float& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
    size_t pixel_count() const { return values.size(); }
};

/// Interleaved 8-bit RGB image, row-major.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> rgb;  // 3 * width * height

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, 0) {}

    const uint8_t* pixel(int x, int y) const { return &rgb[(static_cast<size_t>(y) * width + x) * 3]; }
    uint8_t* pixel(int x, int y) { return &rgb[(static_cast<size_t>(y) * width + x) * 3]; }
};

/// Integer crop window, always square (side x side) and inside the frame.
struct CropWindow {
    int x0 = 0;
    int y0 = 0;
    int side = 0;
};

/**
 * Square window for a bbox: side = ceil of the larger bbox dimension,
 * centered on the bbox center, shifted (never padded) to stay inside the
 * frame; if the side exceeds a frame dimension it is shrunk to fit.
 * Throws ValidationError when the bbox does not intersect the frame.
 */
CropWindow square_crop_window(const BoundingBox& bbox, int frame_width, int frame_height);

GrayImage crop_square(const GrayImage& frame, const BoundingBox& bbox);
RgbImage crop_square(const RgbImage& frame, const BoundingBox& bbox);

/// ITU-R 601 luma: 0.299 R + 0.587 G + 0.114 B, scaled to [0,1].
GrayImage to_gray(const RgbImage& img);

}  // namespace hazpipe
