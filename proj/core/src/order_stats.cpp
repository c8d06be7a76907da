#include "maxgrad/order_stats.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "maxgrad/quadrature.hpp"

namespace maxgrad::order_stats {

namespace {

constexpr double kAbsTol = 1e-9;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::acos(-1.0));
const double kSqrt1_2 = std::sqrt(0.5);

void check_rank(int k) {
    if (k < kMinRank || k > kMaxRank) {
        std::ostringstream msg;
        msg << "order statistic rank k=" << k << " outside [" << kMinRank << ", " << kMaxRank
            << "]";
        throw std::invalid_argument(msg.str());
    }
}

double run_quadrature(const std::function<double(double)>& f, bool real_line,
                      const char* what) {
    const quadrature::Result r = real_line ? quadrature::integrate_real_line(f, kAbsTol)
                                           : quadrature::integrate_half_line(f, kAbsTol);
    if (!r.converged) {
        std::ostringstream msg;
        msg << what << ": quadrature did not converge, achieved error " << r.error_estimate
            << " (requested " << kAbsTol << ")";
        throw std::runtime_error(msg.str());
    }
    return r.value;
}

// All chi-squared order-stat integrals are evaluated in the substituted
// variable y = sqrt(x), which removes the x^{-1/2} endpoint singularity of
// the density; the half-line is then compactified via t/(1-t).

double smallest_chisq_mean(int k) {
    auto f = [k](double y) {
        const double e = std::exp(-0.5 * y * y);
        if (e == 0.0) return 0.0;
        return 2.0 * k * y * y * std::pow(std::erfc(y * kSqrt1_2), k - 1) * e * kInvSqrt2Pi;
    };
    return run_quadrature(f, false, "smallest chi-squared mean");
}

double largest_chisq_mean(int k) {
    auto f = [k](double y) {
        const double e = std::exp(-0.5 * y * y);
        if (e == 0.0) return 0.0;
        return 2.0 * k * y * y * std::pow(std::erf(y * kSqrt1_2), k - 1) * e * kInvSqrt2Pi;
    };
    return run_quadrature(f, false, "largest chi-squared mean");
}

double largest_gauss_second_moment(int k) {
    auto f = [k](double x) {
        const double e = std::exp(-0.5 * x * x);
        if (e == 0.0) return 0.0;
        const double cdf_part = 0.5 * (1.0 + std::erf(x * kSqrt1_2));
        return k * x * x * std::pow(cdf_part, k - 1) * e * kInvSqrt2Pi;
    };
    return run_quadrature(f, true, "largest gaussian second moment");
}

}  // namespace

OrderStatConstants compute_constants(int k) {
    check_rank(k);
    OrderStatConstants c;
    c.k = k;
    c.s = smallest_chisq_mean(k);
    c.l = largest_chisq_mean(k);
    c.m = largest_gauss_second_moment(k);
    return c;
}

const OrderStatConstants& cached_constants(int k) {
    static std::mutex mutex;
    static std::map<int, OrderStatConstants> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(k);
    if (it == cache.end()) it = cache.emplace(k, compute_constants(k)).first;
    return it->second;
}

double recommended_c(int k) {
    return 1.0 / cached_constants(k).m;
}

std::pair<double, double> bound_stabilizing_range(int k) {
    const OrderStatConstants& c = cached_constants(k);
    return {1.0 / c.l, 1.0 / c.s};
}

double sample_order_stat(OrderStatKind kind, int k, rng::Stream& stream) {
    check_rank(k);
    switch (kind) {
        case OrderStatKind::max_chisq1: {
            double best = -1.0;
            for (int i = 0; i < k; ++i) {
                const double g = stream.gaussian();
                const double v = g * g;
                if (v > best) best = v;
            }
            return best;
        }
        case OrderStatKind::min_chisq1: {
            double best = -1.0;
            for (int i = 0; i < k; ++i) {
                const double g = stream.gaussian();
                const double v = g * g;
                if (best < 0.0 || v < best) best = v;
            }
            return best;
        }
        case OrderStatKind::max_gauss: {
            double best = 0.0;
            for (int i = 0; i < k; ++i) {
                const double g = stream.gaussian();
                if (i == 0 || g > best) best = g;
            }
            return best;
        }
    }
    throw std::logic_error("unreachable order statistic kind");
}

double pdf_mass(OrderStatKind kind, int k) {
    check_rank(k);
    switch (kind) {
        case OrderStatKind::max_chisq1: {
            auto f = [k](double y) {
                const double e = std::exp(-0.5 * y * y);
                if (e == 0.0) return 0.0;
                return 2.0 * k * std::pow(std::erf(y * kSqrt1_2), k - 1) * e * kInvSqrt2Pi;
            };
            return run_quadrature(f, false, "largest chi-squared pdf mass");
        }
        case OrderStatKind::min_chisq1: {
            auto f = [k](double y) {
                const double e = std::exp(-0.5 * y * y);
                if (e == 0.0) return 0.0;
                return 2.0 * k * std::pow(std::erfc(y * kSqrt1_2), k - 1) * e * kInvSqrt2Pi;
            };
            return run_quadrature(f, false, "smallest chi-squared pdf mass");
        }
        case OrderStatKind::max_gauss: {
            auto f = [k](double x) {
                const double e = std::exp(-0.5 * x * x);
                if (e == 0.0) return 0.0;
                const double cdf_part = 0.5 * (1.0 + std::erf(x * kSqrt1_2));
                return k * std::pow(cdf_part, k - 1) * e * kInvSqrt2Pi;
            };
            return run_quadrature(f, true, "largest gaussian pdf mass");
        }
    }
    throw std::logic_error("unreachable order statistic kind");
}

}  // namespace maxgrad::order_stats
