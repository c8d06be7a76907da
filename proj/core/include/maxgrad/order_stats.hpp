#pragma once

#include <utility>

#include "maxgrad/rng.hpp"

namespace maxgrad::order_stats {

// Extreme-value constants of k competing affine pieces:
//   s = mean of the smallest of k chi-squared(1) draws
//   l = mean of the largest of k chi-squared(1) draws
//   m = second moment of the largest of k standard gaussians
// Always 0 < s < 1 < l, and s+l = 2, m = 1 for k = 2.
struct OrderStatConstants {
    int k = 0;
    double s = 0.0;
    double l = 0.0;
    double m = 0.0;
};

inline constexpr int kMinRank = 2;
inline constexpr int kMaxRank = 100;

// Deterministic quadrature evaluation of the three constants.
// Throws std::invalid_argument for k outside [kMinRank, kMaxRank] and
// std::runtime_error if the quadrature fails to converge.
OrderStatConstants compute_constants(int k);

// Same values, memoized per k (the constants are immutable); thread-safe.
const OrderStatConstants& cached_constants(int k);

// Weight-scale recommendation 1/m and the range (1/l, 1/s) inside which the
// mean-bound product factors stay between shrinking and exploding.
double recommended_c(int k);
std::pair<double, double> bound_stabilizing_range(int k);

enum class OrderStatKind { max_chisq1, min_chisq1, max_gauss };

// One draw of the requested order statistic over k iid variables.
double sample_order_stat(OrderStatKind kind, int k, rng::Stream& stream);

// Quadrature self-check: integral of the order-statistic density, which
// should come out as 1 up to the quadrature tolerance.
double pdf_mass(OrderStatKind kind, int k);

}  // namespace maxgrad::order_stats
