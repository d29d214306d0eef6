#include "hazpipe/image.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hazpipe/errors.hpp"

namespace hazpipe {

CropWindow square_crop_window(const BoundingBox& bbox, int frame_width, int frame_height) {
    if (!bbox.valid()) {
        std::ostringstream msg;
        msg << "invalid bbox (" << bbox.x1 << "," << bbox.y1 << "," << bbox.x2 << "," << bbox.y2 << ")";
        throw ValidationError(msg.str());
    }
    const bool intersects = bbox.x1 < frame_width && bbox.x2 > 0 && bbox.y1 < frame_height && bbox.y2 > 0;
    if (!intersects) {
        std::ostringstream msg;
        msg << "bbox (" << bbox.x1 << "," << bbox.y1 << "," << bbox.x2 << "," << bbox.y2
            << ") lies outside a " << frame_width << "x" << frame_height << " frame";
        throw ValidationError(msg.str());
    }

    int side = static_cast<int>(std::ceil(std::max(bbox.width(), bbox.height())));
    side = std::max(side, 1);
    side = std::min({side, frame_width, frame_height});

    const auto [cx, cy] = bbox.center();
    int x0 = static_cast<int>(std::lround(cx - side / 2.0));
    int y0 = static_cast<int>(std::lround(cy - side / 2.0));
    x0 = std::clamp(x0, 0, frame_width - side);
    y0 = std::clamp(y0, 0, frame_height - side);
    return {x0, y0, side};
}

GrayImage crop_square(const GrayImage& frame, const BoundingBox& bbox) {
    const CropWindow w = square_crop_window(bbox, frame.width, frame.height);
    GrayImage out(w.side, w.side);
    for (int y = 0; y < w.side; ++y)
        for (int x = 0; x < w.side; ++x)
            out.at(x, y) = frame.at(w.x0 + x, w.y0 + y);
    return out;
}

RgbImage crop_square(const RgbImage& frame, const BoundingBox& bbox) {
    const CropWindow w = square_crop_window(bbox, frame.width, frame.height);
    RgbImage out(w.side, w.side);
    for (int y = 0; y < w.side; ++y) {
        const uint8_t* src = frame.pixel(w.x0, w.y0 + y);
        std::copy(src, src + static_cast<size_t>(w.side) * 3, out.pixel(0, y));
    }
    return out;
}

GrayImage to_gray(const RgbImage& img) {
    GrayImage out(img.width, img.height);
    const uint8_t* p = img.rgb.data();
    for (size_t i = 0; i < out.pixel_count(); ++i, p += 3) {
        out.values[i] = static_cast<float>((0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0);
    }
    return out;
}

}  // namespace hazpipe
