#pragma once

#include <vector>

#include "hazpipe/frame_store.hpp"
#include "hazpipe/image.hpp"
#include "hazpipe/signals.hpp"

namespace hazpipe {

struct FlowParams {
    double pyramid_scale = 0.5;  // per-level downscale factor, in (0,1)
    int levels = 3;
    int window_size = 15;  // odd box-aggregation window
    int iterations = 3;
    int poly_n = 5;  // 5 or 7
    double poly_sigma = 1.1;
    double pre_scale = 1.0;  // optional input downscale before flow

    void validate() const;
};

/// Per-pixel displacement planes; positive dx means the scene moved right.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> dx;
    std::vector<float> dy;

    FlowField() = default;
    FlowField(int w, int h)
        : width(w), height(h), dx(static_cast<size_t>(w) * h, 0.0f),
          dy(static_cast<size_t>(w) * h, 0.0f) {}
    size_t pixel_count() const { return dx.size(); }
};

/**
 * Per-pixel quadratic fit f(x0+d) ~ c + b.d + d^T A d under a Gaussian
 * weight: planes c, bx, by and the quadratic coefficients axx, ayy, axy
 * (A = [[axx, axy/2],[axy/2, ayy]]). Border pixels within poly_n/2 of the
 * edge replicate the nearest interior coefficients.
 */
struct PolyExpansion {
    int width = 0;
    int height = 0;
    std::vector<float> c, bx, by, axx, ayy, axy;
};

PolyExpansion polynomial_expansion(const GrayImage& img, int poly_n, double poly_sigma);

/// Coarse-to-fine dense displacement from prev to next.
FlowField farneback_flow(const GrayImage& prev, const GrayImage& next, const FlowParams& params);

struct PolarField {
    int width = 0;
    int height = 0;
    std::vector<double> magnitude;
    std::vector<double> angle;  // atan2(dy, dx), in (-pi, pi]
};

PolarField to_polar(const FlowField& flow);

double mean_flow_magnitude(const FlowField& flow);

/**
 * Motion score per frame: values[0] = 0, values[i] = mean flow magnitude of
 * the (i-1, i) pair. Frames are loaded gray from the store; when
 * params.pre_scale != 1 both frames are downscaled first and magnitudes are
 * in scaled pixels.
 */
MotionSeries motion_score_series(const FrameStore& store, const FlowParams& params);

/// Per-pair summary for the plotting dump; the angle is the circular mean
/// (atan2 of the mean sin/cos) so opposite directions do not cancel wrongly.
struct FlowFrameStats {
    double magnitude_mean = 0.0;
    double angle_mean = 0.0;
};

std::vector<FlowFrameStats> flow_stats_series(const FrameStore& store, const FlowParams& params);

/// CSV with header "frame_index,magnitude_mean,angle_mean".
void write_flow_stats_csv(const std::vector<FlowFrameStats>& stats, const std::string& path);

/// Bilinear resize, shared by the pyramid and pre-scaling.
GrayImage resize_bilinear(const GrayImage& src, int dst_width, int dst_height);

}  // namespace hazpipe
