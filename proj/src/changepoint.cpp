#include "hazpipe/changepoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hazpipe/errors.hpp"
#include "hazpipe/util.hpp"

namespace hazpipe {

double median_heuristic_gamma(const std::vector<double>& signal) {
    const size_t n = signal.size();
    if (n < 2) throw ValidationError("median heuristic needs at least 2 samples");
    std::vector<double> sq;
    sq.reserve(n * (n - 1) / 2);
    for (size_t i = 0; i + 1 < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            const double d = signal[i] - signal[j];
            const double d2 = d * d;
            if (d2 > 0.0) sq.push_back(d2);
        }
    }
    if (sq.empty()) return 1.0;
    return 1.0 / median(std::move(sq));
}

double resolve_gamma(const std::vector<double>& signal, const KernelSpec& kernel) {
    if (kernel.gamma) {
        if (*kernel.gamma <= 0.0) throw ValidationError("kernel gamma must be positive");
        return *kernel.gamma;
    }
    return median_heuristic_gamma(signal);
}

GramMatrix GramMatrix::rbf(const std::vector<double>& signal, double gamma) {
    if (gamma <= 0.0) throw ValidationError("kernel gamma must be positive");
    GramMatrix g;
    g.n_ = static_cast<int>(signal.size());
    g.data_.resize(static_cast<size_t>(g.n_) * g.n_);
    for (int i = 0; i < g.n_; ++i) {
        g.data_[static_cast<size_t>(i) * g.n_ + i] = 1.0;
        for (int j = i + 1; j < g.n_; ++j) {
            const double d = signal[i] - signal[j];
            const double v = std::exp(-gamma * d * d);
            g.data_[static_cast<size_t>(i) * g.n_ + j] = v;
            g.data_[static_cast<size_t>(j) * g.n_ + i] = v;
        }
    }
    return g;
}

SegmentCost::SegmentCost(const GramMatrix& gram) : n_(gram.size()) {
    diag_prefix_.assign(static_cast<size_t>(n_) + 1, 0.0);
    for (int i = 0; i < n_; ++i) diag_prefix_[i + 1] = diag_prefix_[i] + gram.at(i, i);

    const size_t stride = static_cast<size_t>(n_) + 1;
    block_prefix_.assign(stride * stride, 0.0);
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
            block_prefix_[(i + 1) * stride + (j + 1)] =
                gram.at(i, j) + block_prefix_[i * stride + (j + 1)] +
                block_prefix_[(i + 1) * stride + j] - block_prefix_[i * stride + j];
        }
    }
}

double SegmentCost::operator()(int a, int b) const {
    if (a < 0 || b > n_ || a >= b) {
        std::ostringstream msg;
        msg << "segment_cost: invalid segment [" << a << "," << b << ") for n=" << n_;
        throw ValidationError(msg.str());
    }
    const size_t stride = static_cast<size_t>(n_) + 1;
    const double block = block_prefix_[static_cast<size_t>(b) * stride + b] -
                         block_prefix_[static_cast<size_t>(a) * stride + b] -
                         block_prefix_[static_cast<size_t>(b) * stride + a] +
                         block_prefix_[static_cast<size_t>(a) * stride + a];
    const double diag = diag_prefix_[b] - diag_prefix_[a];
    const double c = diag - block / static_cast<double>(b - a);
    return c > 0.0 ? c : 0.0;  // clamp prefix-sum cancellation noise
}

std::vector<int> min_cost_partition_fixed(const SegmentCost& cost, int k, int min_segment_size) {
    const int n = cost.size();
    const int msz = min_segment_size;
    if (k < 1) throw ValidationError("fixed-k detection needs k >= 1");
    if (msz < 1) throw ValidationError("min_segment_size must be >= 1");
    if (n < (k + 1) * msz) {
        std::ostringstream msg;
        msg << "fixed-k infeasible: n=" << n << " < (k+1)*min_segment_size=" << (k + 1) * msz;
        throw ValidationError(msg.str());
    }

    // Suffix DP over (segments remaining, start). Iterating split candidates
    // in ascending order with strict improvement keeps, at every state, the
    // smallest split among minimizers, which yields the lexicographically
    // smallest global breakpoint vector on ties.
    const int segments = k + 1;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best(segments + 1, std::vector<double>(n + 1, inf));
    std::vector<std::vector<int>> split(segments + 1, std::vector<int>(n + 1, -1));

    for (int s = 0; s + msz <= n; ++s) best[1][s] = cost(s, n);
    for (int m = 2; m <= segments; ++m) {
        for (int s = 0; s + m * msz <= n; ++s) {
            double b = inf;
            int arg = -1;
            const int t_lo = s + msz;
            const int t_hi = n - (m - 1) * msz;
            for (int t = t_lo; t <= t_hi; ++t) {
                if (best[m - 1][t] == inf) continue;
                const double total = cost(s, t) + best[m - 1][t];
                if (total < b) {
                    b = total;
                    arg = t;
                }
            }
            best[m][s] = b;
            split[m][s] = arg;
        }
    }

    std::vector<int> breakpoints;
    breakpoints.reserve(static_cast<size_t>(k));
    int s = 0;
    for (int m = segments; m >= 2; --m) {
        const int t = split[m][s];
        breakpoints.push_back(t);
        s = t;
    }
    return breakpoints;
}

std::vector<int> min_cost_partition_penalized(const SegmentCost& cost, double beta,
                                              int min_segment_size) {
    const int n = cost.size();
    const int msz = min_segment_size;
    if (beta <= 0.0) throw ValidationError("penalty beta must be positive");
    if (msz < 1) throw ValidationError("min_segment_size must be >= 1");
    if (n < 2 * msz) return {};

    const double inf = std::numeric_limits<double>::infinity();
    constexpr int never = std::numeric_limits<int>::max();
    std::vector<double> f(n + 1, inf);
    std::vector<int> prev(n + 1, -1);
    f[0] = -beta;

    // PELT with delayed pruning. A start s dominated at position t is safe to
    // drop only from t + msz onward: before that the dominator t itself is not
    // yet a legal segment start, and s could still be the only usable one.
    struct Candidate {
        int start;
        int dead_from;
    };
    std::vector<Candidate> candidates{{0, never}};
    for (int t = msz; t <= n; ++t) {
        std::erase_if(candidates, [t](const Candidate& c) { return c.dead_from <= t; });

        double best = inf;
        int arg = -1;
        for (const Candidate& c : candidates) {
            if (t - c.start < msz) continue;
            const double total = f[c.start] + cost(c.start, t) + beta;
            if (total < best) {
                best = total;
                arg = c.start;
            }
        }
        f[t] = best;
        prev[t] = arg;

        // Splitting never increases the segment cost, so losing here by a
        // strict margin means losing at every later position as well.
        for (Candidate& c : candidates) {
            if (c.dead_from == never && f[c.start] + cost(c.start, t) > f[t])
                c.dead_from = t + msz;
        }
        candidates.push_back({t, never});
    }

    std::vector<int> breakpoints;
    for (int t = n; t > 0;) {
        const int s = prev[t];
        if (s > 0) breakpoints.push_back(s);
        t = s;
    }
    std::reverse(breakpoints.begin(), breakpoints.end());
    return breakpoints;
}

std::vector<int> detect_fixed_k(const std::vector<double>& signal, const KernelSpec& kernel, int k,
                                int min_segment_size) {
    const double gamma = resolve_gamma(signal, kernel);
    const SegmentCost cost(GramMatrix::rbf(signal, gamma));
    return min_cost_partition_fixed(cost, k, min_segment_size);
}

std::vector<int> detect_penalized(const std::vector<double>& signal, const KernelSpec& kernel,
                                  double beta, int min_segment_size) {
    if (static_cast<int>(signal.size()) < 2 * min_segment_size) return {};
    const double gamma = resolve_gamma(signal, kernel);
    const SegmentCost cost(GramMatrix::rbf(signal, gamma));
    return min_cost_partition_penalized(cost, beta, min_segment_size);
}

std::optional<int> first_breakpoint(const std::vector<int>& breakpoints) {
    if (breakpoints.empty()) return std::nullopt;
    return *std::min_element(breakpoints.begin(), breakpoints.end());
}

double default_penalty_beta(const std::vector<double>& signal) {
    const size_t n = signal.size();
    constexpr double floor = 1e-8;
    if (n < 2) return floor;
    std::vector<double> sq_diffs;
    sq_diffs.reserve(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
        const double d = signal[i + 1] - signal[i];
        sq_diffs.push_back(d * d);
    }
    const double var_proxy = median(std::move(sq_diffs)) / 2.0;
    return 2.0 * std::log(static_cast<double>(n)) * std::max(var_proxy, floor);
}

std::vector<int> CpdConfig::detect(const std::vector<double>& signal) const {
    if (mode == Mode::FixedK) return detect_fixed_k(signal, kernel, k, min_segment_size);
    const double b = beta.value_or(default_penalty_beta(signal));
    return detect_penalized(signal, kernel, b, min_segment_size);
}

}  // namespace hazpipe
