#pragma once

#include <optional>
#include <vector>

namespace hazpipe {

/// RBF kernel k(x,y) = exp(-gamma * (x-y)^2). Absent gamma means "resolve
/// with the median heuristic against the signal".
struct KernelSpec {
    std::optional<double> gamma;  // nullopt = auto

    static KernelSpec auto_bandwidth() { return {}; }
    static KernelSpec with_gamma(double g) { return {g}; }
};

/**
 * Median-heuristic bandwidth: gamma = 1 / median of the nonzero pairwise
 * squared distances (x_i - x_j)^2 over i < j. Falls back to 1 when every
 * pairwise distance is zero. Requires at least two samples.
 */
double median_heuristic_gamma(const std::vector<double>& signal);

double resolve_gamma(const std::vector<double>& signal, const KernelSpec& kernel);

/// Dense symmetric RBF Gram matrix with exact unit diagonal.
class GramMatrix {
public:
    static GramMatrix rbf(const std::vector<double>& signal, double gamma);

    int size() const { return n_; }
    double at(int i, int j) const { return data_[static_cast<size_t>(i) * n_ + j]; }

private:
    int n_ = 0;
    std::vector<double> data_;
};

/**
 * Intra-segment scatter in the RKHS induced by the Gram matrix:
 *   c(a,b) = sum_{t in [a,b)} G[t,t] - (1/(b-a)) * sum_{s,t in [a,b)} G[s,t]
 * O(1) per query after an O(N^2) prefix-sum setup.
 */
class SegmentCost {
public:
    explicit SegmentCost(const GramMatrix& gram);

    int size() const { return n_; }
    double operator()(int a, int b) const;  // half-open [a,b); throws on empty

private:
    int n_ = 0;
    std::vector<double> diag_prefix_;   // n+1
    std::vector<double> block_prefix_;  // (n+1)^2
};

/**
 * Exact dynamic program: the breakpoint vector of size exactly k minimizing
 * the sum of segment costs, every segment at least min_segment_size long.
 * Ties resolve to the lexicographically smallest vector. Throws
 * ValidationError when N < (k+1) * min_segment_size.
 */
std::vector<int> min_cost_partition_fixed(const SegmentCost& cost, int k, int min_segment_size);

/**
 * PELT search minimizing sum of segment costs + beta * (#breakpoints); the
 * pruning is lossless for this cost, so the result equals exhaustive
 * minimization. Returns {} when N < 2 * min_segment_size.
 */
std::vector<int> min_cost_partition_penalized(const SegmentCost& cost, double beta,
                                              int min_segment_size);

/// Convenience wrappers that build the Gram matrix from a raw signal.
std::vector<int> detect_fixed_k(const std::vector<double>& signal, const KernelSpec& kernel, int k,
                                int min_segment_size);
std::vector<int> detect_penalized(const std::vector<double>& signal, const KernelSpec& kernel,
                                  double beta, int min_segment_size);

std::optional<int> first_breakpoint(const std::vector<int>& breakpoints);

/**
 * BIC-style default penalty: 2 * ln(N) * variance proxy, where the proxy is
 * the median squared successive difference halved (robust to the change
 * points themselves). Floored away from zero so the penalty stays positive.
 */
double default_penalty_beta(const std::vector<double>& signal);

/// Detector configuration as exposed in the CLI config.
struct CpdConfig {
    enum class Mode { FixedK, Penalized };
    Mode mode = Mode::FixedK;
    int k = 4;
    std::optional<double> beta;  // nullopt = default_penalty_beta
    int min_segment_size = 2;
    KernelSpec kernel;

    std::vector<int> detect(const std::vector<double>& signal) const;
};

}  // namespace hazpipe
