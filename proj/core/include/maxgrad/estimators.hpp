#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "maxgrad/network.hpp"

namespace maxgrad::est {

// Summary statistics of a Monte-Carlo sample. `higher[t]` holds the raw
// moment estimate E[X^t] for 2 <= t <= t_max.
struct MomentEstimate {
    double mean = 0.0;
    double variance = 0.0;     // unbiased sample variance
    double stderr_mean = 0.0;  // sqrt(variance / n)
    std::map<int, double> higher;
    std::int64_t n = 0;
    std::uint64_t master_seed = 0;
};

MomentEstimate summarize(const std::vector<double>& values, int t_max, std::uint64_t master_seed);

// Monte-Carlo moments of ||J u||^2 over random inits; sample i draws its
// parameters from substream i of master_seed, and the reduction is a fixed
// in-order fold, so results do not depend on the worker count.
MomentEstimate mc_jacobian_moments(const net::Architecture& arch, const net::InitScheme& scheme,
                                   const std::vector<double>& x, const std::vector<double>& u,
                                   int t_max, std::int64_t n_samples, std::uint64_t master_seed);

// Empirical-CDF test of the two-sided stochastic ordering of ||J u||^2
// against the min/max order-statistic product variables. The three empirical
// CDFs are compared on `grid_points` quantiles of the network sample, with a
// tolerance of one DKW band of width sqrt(ln(2/alpha)/(2n)) per sample.
struct StochasticOrderReport {
    bool pass = false;
    double epsilon = 0.0;                // single DKW band width
    double max_lower_violation = 0.0;    // F_net - F_lowerRV above grid, max
    double max_upper_violation = 0.0;    // F_upperRV - F_net above grid, max
    int grid_points = 0;
    std::int64_t n_per_side = 0;
    double alpha = 0.0;
};
StochasticOrderReport stochastic_order_test(const net::Architecture& arch,
                                            const net::InitScheme& scheme,
                                            const std::vector<double>& x,
                                            const std::vector<double>& u,
                                            std::int64_t n_per_side, double alpha,
                                            std::uint64_t master_seed, int grid_points = 100);

// Two-sample Kolmogorov-Smirnov distance and the asymptotic critical value
// at level alpha (exposed for reuse in tests).
double ks_statistic(std::vector<double> a, std::vector<double> b);
double ks_critical(std::int64_t n, std::int64_t m, double alpha);

// Two-sample KS check of ||J u||^2 against its sampled closed-form equal:
// each comparison draw propagates (x, u) through a fresh real network to get
// that draw's per-layer cosine sequence, then combines it with fresh
// chi-squared, gaussian, and max-gaussian draws.
struct KsReport {
    bool pass = false;
    double d_stat = 0.0;
    double d_critical = 0.0;
    double alpha = 0.0;
    std::int64_t n = 0;
};
KsReport eq_in_distribution_check(const net::Architecture& arch, const net::InitScheme& scheme,
                                  const std::vector<double>& x, const std::vector<double>& u,
                                  std::int64_t n_per_side, double alpha,
                                  std::uint64_t master_seed);

// Mean |cos| between the propagated activation and direction vectors at
// layers 0 .. hidden_count-1 (entry 0 is the deterministic input cosine);
// these are exactly the cosines the layerwise product decomposition consumes.
// Gaussian-bias networks compare the bias-augmented vectors (x,1) vs (u,0).
struct CosineTrajectory {
    std::vector<double> mean_abs_cos;
    std::vector<double> stderr_abs_cos;
    int n_inits = 0;
};
CosineTrajectory cosine_trajectory(const net::Architecture& arch, const net::InitScheme& scheme,
                                   const std::vector<double>& x, const std::vector<double>& u,
                                   int n_inits, std::uint64_t master_seed);

// Monte-Carlo moments of the squared activation length ||x^(layer)||^2/n_layer.
MomentEstimate mc_activation_length(const net::Architecture& arch, const net::InitScheme& scheme,
                                    const std::vector<double>& x, int layer, int t_max,
                                    std::int64_t n_samples, std::uint64_t master_seed);

// Image length of a polyline curve under one fixed network: the curve is
// rescaled to unit total length, tangents come from central differences on
// the arc-length grid, and the speed ||J(p_i) t_i|| is integrated by the
// trapezoid rule.
double curve_length(const net::ParamSet& params, const std::vector<std::vector<double>>& curve);

// Monte-Carlo mean of curve_length over random inits.
MomentEstimate mc_curve_length(const net::Architecture& arch, const net::InitScheme& scheme,
                               const std::vector<std::vector<double>>& curve,
                               std::int64_t n_inits, std::uint64_t master_seed);

// Linear regions of t -> N(a + t(b-a)) on [0, 1]: scan at `resolution`
// equispaced points, then bisect every adjacent argmax-pattern change down to
// refine_tol. region_count == breakpoints.size() + 1.
struct RegionCount1D {
    std::vector<double> breakpoints;
    std::int64_t region_count = 0;
};
RegionCount1D count_regions_1d(const net::ParamSet& params, const std::vector<double>& a,
                               const std::vector<double>& b, int resolution = 10000,
                               double refine_tol = 1e-10);

// On-diagonal NTK sum over weight parameters (biases excluded) for
// scalar-output networks, upstream fixed to 1.
MomentEstimate mc_ntk_diag(const net::Architecture& arch, const net::InitScheme& scheme,
                           const std::vector<double>& x, std::int64_t n_samples,
                           std::uint64_t master_seed);

}  // namespace maxgrad::est
