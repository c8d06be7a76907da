#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "maxgrad/network.hpp"
#include "maxgrad/order_stats.hpp"

namespace maxgrad::theory {

struct BoundReport {
    std::string quantity;
    int t = 1;  // moment order where applicable
    std::optional<double> lower;
    std::optional<double> upper;
    std::optional<double> exact;
};

// Moment bounds for ||J u||^2 over the weight distribution (u a unit vector):
// t = 1 gives the two-sided mean bounds (nL/n0)(cS)^(L-1) .. (nL/n0)(cL)^(L-1);
// t >= 2 gives the upper bound (nL/n0)^t (cK)^(t(L-1)) exp(t^2 (sum 1/(n_l K) + 1/nL)).
BoundReport jacobian_moment_bounds(const net::Architecture& arch, double c, int t);

// Variance upper bound for ||J u||^2.
BoundReport jacobian_variance_bound(const net::Architecture& arch, double c);

// Wide-and-deep mean approximation at c = 1/m: nL/n0.
double wide_deep_mean(const net::Architecture& arch);

struct ActivationLengthStats {
    int layer = 0;
    int t = 1;
    double exact_mean = 0.0;
    double variance_upper = 0.0;
    // populated for t >= 2
    std::optional<double> moment_lower;
    std::optional<double> moment_upper;
};

// Mean (exact) and moment bounds of the squared activation length
// ||x^(layer)||^2 / n_layer. Bias-mode-aware: with gaussian biases the input
// norm is augmented by 1 and each deeper layer contributes a bias summand;
// with zero biases both disappear.
ActivationLengthStats activation_length_stats(const net::Architecture& arch, double c,
                                              const std::vector<double>& x, int layer, int t);

// Sup-norm constant for input gradients:
// n0^{-1/2} max{1, (cK)^{(L-1)/2}} exp{(t/2)(sum_{l<L} 1/(n_l K) + 1)}.
double c_grad_bound(const net::Architecture& arch, double c, int t);

// Expected upper bound on the number of linear regions cut out by
// `unit_count` rank-k units over an n0-dimensional input, with r gradient
// constraints and scale factor t_scale. Evaluated in log space; `upper` may
// round to infinity for large arguments, log_upper never does.
struct RegionCountBound {
    double upper = 0.0;
    double log_upper = 0.0;
};
RegionCountBound region_count_bound(std::int64_t unit_count, int input_width, int rank,
                                    std::int64_t r, double t_scale);

// Expected curve-length distortion of a unit-length input curve:
// mean <= sqrt(nL/n0) (cL)^{(L-1)/2}; variance <= (nL/n0)(cL)^{L-1};
// t-th moment <= (nL/n0)^{t/2} (cK)^{t(L-1)/2} exp{(t^2/2)(sum 1/(n_l K) + 1/nL)}.
// Upper bounds only; no lower bound is available for the image length.
BoundReport curve_length_bounds(const net::Architecture& arch, double c, int t);
BoundReport curve_length_variance_bound(const net::Architecture& arch, double c);

// On-diagonal NTK bounds for scalar-output zero-bias networks with
// s <= c <= l. p = sum_{l=0}^{L-1} n_l, p_w = sum_{l=1}^{L} n_l n_{l-1}.
// Note: the closed forms use the bias-augmented input norm ||x||^2 + 1.
struct NtkBounds {
    double mean_lower = 0.0;
    double mean_upper = 0.0;
    double second_moment_upper = 0.0;
    double p = 0.0;
    double p_w = 0.0;
};
NtkBounds ntk_bounds(const net::Architecture& arch, double c, const std::vector<double>& x);

struct ArchitectureCheck {
    double width_sum = 0.0;      // sum_{l=1}^{L-1} 1/(n_l K)
    bool width_ok = false;       // width_sum <= 1
    double ck = 0.0;             // c * K
    double recommended = 0.0;    // 1/m for this K
    bool c_is_recommended = false;  // |c - 1/m| <= 1e-6
};
ArchitectureCheck architecture_check(const net::Architecture& arch, double c);

}  // namespace maxgrad::theory
