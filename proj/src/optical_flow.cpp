#include "hazpipe/optical_flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hazpipe/errors.hpp"
#include "hazpipe/util.hpp"

namespace hazpipe {

void FlowParams::validate() const {
    if (!(pyramid_scale > 0.0 && pyramid_scale < 1.0))
        throw ValidationError("flow: pyramid_scale must be in (0,1)");
    if (levels < 1) throw ValidationError("flow: levels must be >= 1");
    if (window_size < 1 || window_size % 2 == 0)
        throw ValidationError("flow: window_size must be odd and >= 1");
    if (iterations < 1) throw ValidationError("flow: iterations must be >= 1");
    if (poly_n != 5 && poly_n != 7) throw ValidationError("flow: poly_n must be 5 or 7");
    if (poly_sigma <= 0.0) throw ValidationError("flow: poly_sigma must be positive");
    if (!(pre_scale > 0.0 && pre_scale <= 1.0))
        throw ValidationError("flow: pre_scale must be in (0,1]");
}

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Separable correlation with replicate borders.
std::vector<float> correlate_rows(const std::vector<float>& src, int w, int h,
                                  const std::vector<float>& kernel) {
    const int r = static_cast<int>(kernel.size()) / 2;
    std::vector<float> out(src.size());
    for (int y = 0; y < h; ++y) {
        const float* row = &src[static_cast<size_t>(y) * w];
        float* orow = &out[static_cast<size_t>(y) * w];
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -r; t <= r; ++t) acc += kernel[t + r] * row[clampi(x + t, 0, w - 1)];
            orow[x] = static_cast<float>(acc);
        }
    }
    return out;
}

std::vector<float> correlate_cols(const std::vector<float>& src, int w, int h,
                                  const std::vector<float>& kernel) {
    const int r = static_cast<int>(kernel.size()) / 2;
    std::vector<float> out(src.size());
    for (int y = 0; y < h; ++y) {
        float* orow = &out[static_cast<size_t>(y) * w];
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -r; t <= r; ++t)
                acc += kernel[t + r] * src[static_cast<size_t>(clampi(y + t, 0, h - 1)) * w + x];
            orow[x] = static_cast<float>(acc);
        }
    }
    return out;
}

// Normalized box filter via prefix sums over a replicate-padded line.
void box_blur_plane(std::vector<float>& plane, int w, int h, int radius) {
    if (radius < 1) return;
    const int win = 2 * radius + 1;
    const float inv = 1.0f / static_cast<float>(win);
    std::vector<double> prefix;

    std::vector<float> row(static_cast<size_t>(w));
    prefix.resize(static_cast<size_t>(w) + 2 * radius + 1);
    for (int y = 0; y < h; ++y) {
        float* p = &plane[static_cast<size_t>(y) * w];
        prefix[0] = 0.0;
        for (int i = 0; i < w + 2 * radius; ++i)
            prefix[i + 1] = prefix[i] + p[clampi(i - radius, 0, w - 1)];
        for (int x = 0; x < w; ++x)
            row[x] = static_cast<float>(prefix[x + win] - prefix[x]) * inv;
        std::copy(row.begin(), row.end(), p);
    }

    std::vector<float> col(static_cast<size_t>(h));
    prefix.resize(static_cast<size_t>(h) + 2 * radius + 1);
    for (int x = 0; x < w; ++x) {
        prefix[0] = 0.0;
        for (int i = 0; i < h + 2 * radius; ++i)
            prefix[i + 1] = prefix[i] + plane[static_cast<size_t>(clampi(i - radius, 0, h - 1)) * w + x];
        for (int y = 0; y < h; ++y)
            col[y] = static_cast<float>(prefix[y + win] - prefix[y]) * inv;
        for (int y = 0; y < h; ++y) plane[static_cast<size_t>(y) * w + x] = col[y];
    }
}

std::vector<float> gaussian_kernel(double sigma, int radius) {
    std::vector<float> k(static_cast<size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        const double g = std::exp(-(t * t) / (2.0 * sigma * sigma));
        k[t + radius] = static_cast<float>(g);
        sum += g;
    }
    for (auto& v : k) v = static_cast<float>(v / sum);
    return k;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (sigma <= 0.0) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    const auto kernel = gaussian_kernel(sigma, radius);
    GrayImage out(img.width, img.height);
    out.values = correlate_cols(correlate_rows(img.values, img.width, img.height, kernel),
                                img.width, img.height, kernel);
    return out;
}

inline float sample_bilinear(const std::vector<float>& plane, int w, int h, float fx, float fy) {
    fx = std::min(std::max(fx, 0.0f), static_cast<float>(w - 1));
    fy = std::min(std::max(fy, 0.0f), static_cast<float>(h - 1));
    const int x0 = static_cast<int>(fx);
    const int y0 = static_cast<int>(fy);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const float ax = fx - static_cast<float>(x0);
    const float ay = fy - static_cast<float>(y0);
    const float top = plane[static_cast<size_t>(y0) * w + x0] * (1.0f - ax) +
                      plane[static_cast<size_t>(y0) * w + x1] * ax;
    const float bot = plane[static_cast<size_t>(y1) * w + x0] * (1.0f - ax) +
                      plane[static_cast<size_t>(y1) * w + x1] * ax;
    return top * (1.0f - ay) + bot * ay;
}

// 6x6 Gauss-Jordan inverse with partial pivoting.
std::array<std::array<double, 6>, 6> invert6(std::array<std::array<double, 6>, 6> m) {
    std::array<std::array<double, 6>, 6> inv{};
    for (int i = 0; i < 6; ++i) inv[i][i] = 1.0;
    for (int col = 0; col < 6; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 6; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        if (std::abs(m[pivot][col]) < 1e-300)
            throw ValidationError("polynomial expansion normal matrix is singular");
        std::swap(m[col], m[pivot]);
        std::swap(inv[col], inv[pivot]);
        const double d = m[col][col];
        for (int j = 0; j < 6; ++j) {
            m[col][j] /= d;
            inv[col][j] /= d;
        }
        for (int r = 0; r < 6; ++r) {
            if (r == col) continue;
            const double f = m[r][col];
            if (f == 0.0) continue;
            for (int j = 0; j < 6; ++j) {
                m[r][j] -= f * m[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    return inv;
}

}  // namespace

PolyExpansion polynomial_expansion(const GrayImage& img, int poly_n, double poly_sigma) {
    if (poly_n != 5 && poly_n != 7) throw ValidationError("poly_n must be 5 or 7");
    if (poly_sigma <= 0.0) throw ValidationError("poly_sigma must be positive");
    const int n = poly_n / 2;
    if (img.width <= poly_n || img.height <= poly_n) {
        std::ostringstream msg;
        msg << "image " << img.width << "x" << img.height
            << " is not larger than the expansion neighborhood (poly_n=" << poly_n << ")";
        throw ValidationError(msg.str());
    }

    // 1-D weighted-moment kernels over offsets [-n, n].
    std::vector<float> w(2 * n + 1), wt(2 * n + 1), wtt(2 * n + 1);
    {
        double sum = 0.0;
        for (int t = -n; t <= n; ++t) sum += std::exp(-(t * t) / (2.0 * poly_sigma * poly_sigma));
        for (int t = -n; t <= n; ++t) {
            const double g = std::exp(-(t * t) / (2.0 * poly_sigma * poly_sigma)) / sum;
            w[t + n] = static_cast<float>(g);
            wt[t + n] = static_cast<float>(g * t);
            wtt[t + n] = static_cast<float>(g * t * t);
        }
    }

    const int width = img.width, height = img.height;
    const auto r0 = correlate_rows(img.values, width, height, w);
    const auto r1 = correlate_rows(img.values, width, height, wt);
    const auto r2 = correlate_rows(img.values, width, height, wtt);

    const auto m00 = correlate_cols(r0, width, height, w);
    const auto m10 = correlate_cols(r1, width, height, w);
    const auto m01 = correlate_cols(r0, width, height, wt);
    const auto m20 = correlate_cols(r2, width, height, w);
    const auto m02 = correlate_cols(r0, width, height, wtt);
    const auto m11 = correlate_cols(r1, width, height, wt);

    // Normal matrix of the basis [1, x, y, x^2, y^2, xy] under the separable
    // weight; odd moments vanish so only the even entries survive.
    double s2 = 0.0, s4 = 0.0;
    for (int t = -n; t <= n; ++t) {
        s2 += w[t + n] * t * t;
        s4 += w[t + n] * t * t * t * t;
    }
    std::array<std::array<double, 6>, 6> g{};
    g[0][0] = 1.0;
    g[0][3] = g[3][0] = s2;
    g[0][4] = g[4][0] = s2;
    g[1][1] = s2;
    g[2][2] = s2;
    g[3][3] = s4;
    g[4][4] = s4;
    g[3][4] = g[4][3] = s2 * s2;
    g[5][5] = s2 * s2;
    const auto ig = invert6(g);

    PolyExpansion out;
    out.width = width;
    out.height = height;
    const size_t count = img.pixel_count();
    out.c.resize(count);
    out.bx.resize(count);
    out.by.resize(count);
    out.axx.resize(count);
    out.ayy.resize(count);
    out.axy.resize(count);

    for (size_t i = 0; i < count; ++i) {
        const double v[6] = {m00[i], m10[i], m01[i], m20[i], m02[i], m11[i]};
        double theta[6];
        for (int row = 0; row < 6; ++row) {
            double acc = 0.0;
            for (int colidx = 0; colidx < 6; ++colidx) acc += ig[row][colidx] * v[colidx];
            theta[row] = acc;
        }
        out.c[i] = static_cast<float>(theta[0]);
        out.bx[i] = static_cast<float>(theta[1]);
        out.by[i] = static_cast<float>(theta[2]);
        out.axx[i] = static_cast<float>(theta[3]);
        out.ayy[i] = static_cast<float>(theta[4]);
        out.axy[i] = static_cast<float>(theta[5]);
    }

    // Border ring: replicate the nearest interior coefficients.
    auto replicate = [&](std::vector<float>& plane) {
        for (int y = 0; y < height; ++y) {
            const int sy = clampi(y, n, height - 1 - n);
            for (int x = 0; x < width; ++x) {
                if (y >= n && y < height - n && x >= n && x < width - n) continue;
                const int sx = clampi(x, n, width - 1 - n);
                plane[static_cast<size_t>(y) * width + x] =
                    plane[static_cast<size_t>(sy) * width + sx];
            }
        }
    };
    replicate(out.c);
    replicate(out.bx);
    replicate(out.by);
    replicate(out.axx);
    replicate(out.ayy);
    replicate(out.axy);
    return out;
}

namespace {

// One displacement refinement: build the 2x2 normal equations per pixel from
// the two expansions and the current flow, box-aggregate them over the
// window, then solve.
void update_flow(const PolyExpansion& e1, const PolyExpansion& e2, FlowField& flow,
                 int window_size) {
    const int w = e1.width, h = e1.height;
    const size_t count = static_cast<size_t>(w) * h;
    std::vector<float> m11(count), m12(count), m22(count), h1(count), h2(count);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            const float d0x = flow.dx[i];
            const float d0y = flow.dy[i];
            const float fx = static_cast<float>(x) + d0x;
            const float fy = static_cast<float>(y) + d0y;

            const float b2x = sample_bilinear(e2.bx, w, h, fx, fy);
            const float b2y = sample_bilinear(e2.by, w, h, fx, fy);
            const float a2xx = sample_bilinear(e2.axx, w, h, fx, fy);
            const float a2yy = sample_bilinear(e2.ayy, w, h, fx, fy);
            const float a2xy = sample_bilinear(e2.axy, w, h, fx, fy);

            const float a11 = 0.5f * (e1.axx[i] + a2xx);
            const float a22 = 0.5f * (e1.ayy[i] + a2yy);
            const float a12 = 0.25f * (e1.axy[i] + a2xy);  // A12 is half the xy coefficient

            const float dbx = -0.5f * (b2x - e1.bx[i]) + a11 * d0x + a12 * d0y;
            const float dby = -0.5f * (b2y - e1.by[i]) + a12 * d0x + a22 * d0y;

            m11[i] = a11 * a11 + a12 * a12;
            m12[i] = a12 * (a11 + a22);
            m22[i] = a22 * a22 + a12 * a12;
            h1[i] = a11 * dbx + a12 * dby;
            h2[i] = a12 * dbx + a22 * dby;
        }
    }

    const int radius = window_size / 2;
    box_blur_plane(m11, w, h, radius);
    box_blur_plane(m12, w, h, radius);
    box_blur_plane(m22, w, h, radius);
    box_blur_plane(h1, w, h, radius);
    box_blur_plane(h2, w, h, radius);

    for (size_t i = 0; i < count; ++i) {
        const double det = static_cast<double>(m11[i]) * m22[i] - static_cast<double>(m12[i]) * m12[i];
        if (det > 1e-12) {
            flow.dx[i] = static_cast<float>((m22[i] * h1[i] - m12[i] * h2[i]) / det);
            flow.dy[i] = static_cast<float>((m11[i] * h2[i] - m12[i] * h1[i]) / det);
        }
        // else: texture-free neighborhood, keep the propagated estimate
    }
}

FlowField upsample_flow(const FlowField& src, int dst_w, int dst_h) {
    FlowField out(dst_w, dst_h);
    const float sx = static_cast<float>(dst_w) / static_cast<float>(src.width);
    const float sy = static_cast<float>(dst_h) / static_cast<float>(src.height);
    for (int y = 0; y < dst_h; ++y) {
        const float fy = (static_cast<float>(y) + 0.5f) / sy - 0.5f;
        for (int x = 0; x < dst_w; ++x) {
            const float fx = (static_cast<float>(x) + 0.5f) / sx - 0.5f;
            const size_t i = static_cast<size_t>(y) * dst_w + x;
            out.dx[i] = sample_bilinear(src.dx, src.width, src.height, fx, fy) * sx;
            out.dy[i] = sample_bilinear(src.dy, src.width, src.height, fx, fy) * sy;
        }
    }
    return out;
}

}  // namespace

GrayImage resize_bilinear(const GrayImage& src, int dst_width, int dst_height) {
    if (dst_width == src.width && dst_height == src.height) return src;
    GrayImage out(dst_width, dst_height);
    const float sx = static_cast<float>(src.width) / static_cast<float>(dst_width);
    const float sy = static_cast<float>(src.height) / static_cast<float>(dst_height);
    for (int y = 0; y < dst_height; ++y) {
        const float fy = (static_cast<float>(y) + 0.5f) * sy - 0.5f;
        for (int x = 0; x < dst_width; ++x) {
            const float fx = (static_cast<float>(x) + 0.5f) * sx - 0.5f;
            out.at(x, y) = sample_bilinear(src.values, src.width, src.height, fx, fy);
        }
    }
    return out;
}

FlowField farneback_flow(const GrayImage& prev, const GrayImage& next, const FlowParams& params) {
    params.validate();
    if (prev.width != next.width || prev.height != next.height) {
        std::ostringstream msg;
        msg << "flow inputs differ in size: " << prev.width << "x" << prev.height << " vs "
            << next.width << "x" << next.height;
        throw ValidationError(msg.str());
    }

    // Keep only pyramid levels large enough for the expansion neighborhood.
    std::vector<double> scales;
    for (int level = 0; level < params.levels; ++level) {
        const double s = std::pow(params.pyramid_scale, level);
        const int lw = static_cast<int>(std::lround(prev.width * s));
        const int lh = static_cast<int>(std::lround(prev.height * s));
        if (lw <= params.poly_n + 2 || lh <= params.poly_n + 2) break;
        scales.push_back(s);
    }
    if (scales.empty()) scales.push_back(1.0);

    FlowField flow;
    for (int li = static_cast<int>(scales.size()) - 1; li >= 0; --li) {
        const double s = scales[li];
        const int lw = static_cast<int>(std::lround(prev.width * s));
        const int lh = static_cast<int>(std::lround(prev.height * s));
        const double sigma = s == 1.0 ? 0.0 : (1.0 / s - 1.0) * 0.5;

        const GrayImage a = resize_bilinear(gaussian_blur(prev, sigma), lw, lh);
        const GrayImage b = resize_bilinear(gaussian_blur(next, sigma), lw, lh);

        flow = flow.width == 0 ? FlowField(lw, lh) : upsample_flow(flow, lw, lh);

        const PolyExpansion e1 = polynomial_expansion(a, params.poly_n, params.poly_sigma);
        const PolyExpansion e2 = polynomial_expansion(b, params.poly_n, params.poly_sigma);
        for (int it = 0; it < params.iterations; ++it) update_flow(e1, e2, flow, params.window_size);
    }
    return flow;
}

PolarField to_polar(const FlowField& flow) {
    PolarField out;
    out.width = flow.width;
    out.height = flow.height;
    out.magnitude.resize(flow.pixel_count());
    out.angle.resize(flow.pixel_count());
    for (size_t i = 0; i < flow.pixel_count(); ++i) {
        const double dx = flow.dx[i];
        const double dy = flow.dy[i];
        out.magnitude[i] = std::sqrt(dx * dx + dy * dy);
        out.angle[i] = (dx == 0.0 && dy == 0.0) ? 0.0 : std::atan2(dy, dx);
    }
    return out;
}

double mean_flow_magnitude(const FlowField& flow) {
    if (flow.pixel_count() == 0) return 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < flow.pixel_count(); ++i) {
        const double dx = flow.dx[i];
        const double dy = flow.dy[i];
        acc += std::sqrt(dx * dx + dy * dy);
    }
    return acc / static_cast<double>(flow.pixel_count());
}

namespace {

GrayImage load_scaled(const FrameStore& store, const FlowParams& params, int idx) {
    GrayImage img = store.load_gray_frame(idx);
    if (params.pre_scale != 1.0) {
        const int w = std::max(params.poly_n + 3,
                               static_cast<int>(std::lround(img.width * params.pre_scale)));
        const int h = std::max(params.poly_n + 3,
                               static_cast<int>(std::lround(img.height * params.pre_scale)));
        img = resize_bilinear(img, w, h);
    }
    return img;
}

}  // namespace

MotionSeries motion_score_series(const FrameStore& store, const FlowParams& params) {
    params.validate();
    const auto indices = store.frame_indices();
    if (indices.empty()) throw ValidationError("video " + store.video_id() + ": no frames on disk");
    const int n = indices.back() + 1;

    MotionSeries out{store.video_id(), SignalKind::OpticalFlow, {}};
    out.values.assign(static_cast<size_t>(n), 0.0);
    GrayImage prev = load_scaled(store, params, 0);
    for (int i = 1; i < n; ++i) {
        GrayImage next = load_scaled(store, params, i);  // throws with the frame index when missing
        out.values[i] = mean_flow_magnitude(farneback_flow(prev, next, params));
        prev = std::move(next);
    }
    return out;
}

std::vector<FlowFrameStats> flow_stats_series(const FrameStore& store, const FlowParams& params) {
    params.validate();
    const auto indices = store.frame_indices();
    if (indices.empty()) throw ValidationError("video " + store.video_id() + ": no frames on disk");
    const int n = indices.back() + 1;

    std::vector<FlowFrameStats> out(static_cast<size_t>(n));
    GrayImage prev = load_scaled(store, params, 0);
    for (int i = 1; i < n; ++i) {
        GrayImage next = load_scaled(store, params, i);
        const PolarField polar = to_polar(farneback_flow(prev, next, params));
        double mag = 0.0, sin_sum = 0.0, cos_sum = 0.0;
        for (size_t p = 0; p < polar.magnitude.size(); ++p) {
            mag += polar.magnitude[p];
            sin_sum += std::sin(polar.angle[p]);
            cos_sum += std::cos(polar.angle[p]);
        }
        const double count = static_cast<double>(polar.magnitude.size());
        out[i].magnitude_mean = mag / count;
        out[i].angle_mean =
            (sin_sum == 0.0 && cos_sum == 0.0) ? 0.0 : std::atan2(sin_sum, cos_sum);
        prev = std::move(next);
    }
    return out;
}

void write_flow_stats_csv(const std::vector<FlowFrameStats>& stats, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write flow stats CSV: " + path);
    out << "frame_index,magnitude_mean,angle_mean\n";
    for (size_t i = 0; i < stats.size(); ++i) {
        out << i << "," << format_double(stats[i].magnitude_mean) << ","
            << format_double(stats[i].angle_mean) << "\n";
    }
    if (!out) throw IoError("short write: " + path);
}

}  // namespace hazpipe
