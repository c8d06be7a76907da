#include "maxgrad/theory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace maxgrad::theory {

namespace {

using order_stats::cached_constants;
using order_stats::OrderStatConstants;

const OrderStatConstants& require_maxout(const net::Architecture& arch, double c) {
    arch.validate();
    if (arch.activation != net::Activation::maxout)
        throw std::invalid_argument("closed-form bounds are defined for maxout networks only");
    if (!(c > 0.0) || !std::isfinite(c))
        throw std::invalid_argument("weight scale c must be positive and finite");
    return cached_constants(arch.maxout_rank);
}

// sum_{l=1}^{L-1} 1/(n_l K)
double width_sum(const net::Architecture& arch) {
    double s = 0.0;
    for (int w : arch.hidden_widths) s += 1.0 / (static_cast<double>(w) * arch.maxout_rank);
    return s;
}

double norm_sq(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

double log_binomial(double n, double k) {
    if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
    if (k == 0 || k == n) return 0.0;
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

BoundReport jacobian_moment_bounds(const net::Architecture& arch, double c, int t) {
    const OrderStatConstants& osc = require_maxout(arch, c);
    if (t < 1) throw std::invalid_argument("moment order t must be >= 1");
    const double ratio = static_cast<double>(arch.output_width) / arch.input_width;
    const int lm1 = arch.hidden_count();

    BoundReport r;
    r.quantity = "jacobian_sq_moment";
    r.t = t;
    if (t == 1) {
        r.lower = ratio * std::pow(c * osc.s, lm1);
        r.upper = ratio * std::pow(c * osc.l, lm1);
    } else {
        const double expo = width_sum(arch) + 1.0 / arch.output_width;
        r.upper = std::pow(ratio, t) * std::pow(c * osc.k, static_cast<double>(t) * lm1) *
                  std::exp(static_cast<double>(t) * t * expo);
    }
    return r;
}

BoundReport jacobian_variance_bound(const net::Architecture& arch, double c) {
    const OrderStatConstants& osc = require_maxout(arch, c);
    const double ratio = static_cast<double>(arch.output_width) / arch.input_width;
    const int lm1 = arch.hidden_count();
    const double expo = width_sum(arch) + 1.0 / arch.output_width;

    BoundReport r;
    r.quantity = "jacobian_sq_variance";
    r.t = 2;
    r.upper = ratio * ratio * std::pow(c, 2.0 * lm1) *
              (std::pow(static_cast<double>(osc.k), 2.0 * lm1) * std::exp(4.0 * expo) -
               std::pow(osc.s, 2.0 * lm1));
    return r;
}

double wide_deep_mean(const net::Architecture& arch) {
    arch.validate();
    return static_cast<double>(arch.output_width) / arch.input_width;
}

ActivationLengthStats activation_length_stats(const net::Architecture& arch, double c,
                                              const std::vector<double>& x, int layer, int t) {
    const OrderStatConstants& osc = require_maxout(arch, c);
    if (static_cast<int>(x.size()) != arch.input_width)
        throw std::invalid_argument("input size must match input width");
    if (layer < 1 || layer > arch.hidden_count())
        throw std::invalid_argument("activation layer must name a hidden layer (1-based)");
    if (t < 1) throw std::invalid_argument("moment order t must be >= 1");

    const bool gaussian_bias = arch.bias_mode == net::BiasMode::gaussian;
    const double n0 = arch.input_width;
    const double in_sq = norm_sq(x) + (gaussian_bias ? 1.0 : 0.0);
    const double cm = c * osc.m;
    const double ck = c * osc.k;

    auto hidden_width = [&](int l) { return static_cast<double>(arch.hidden_widths[static_cast<std::size_t>(l) - 1]); };
    // sum_{l=a}^{b} 1/(n_l K) over hidden layers
    auto inv_width_sum = [&](int a, int b) {
        double s = 0.0;
        for (int l = a; l <= b; ++l) s += 1.0 / (hidden_width(l) * osc.k);
        return s;
    };

    ActivationLengthStats out;
    out.layer = layer;
    out.t = t;

    out.exact_mean = in_sq / n0 * std::pow(cm, layer);
    if (gaussian_bias)
        for (int j = 2; j <= layer; ++j)
            out.exact_mean += std::pow(cm, layer - j + 1) / hidden_width(j - 1);

    out.variance_upper = 2.0 * in_sq * in_sq / (n0 * n0) * std::pow(c, 2.0 * layer) *
                         std::pow(static_cast<double>(osc.k), 2.0 * layer) *
                         std::exp(4.0 * inv_width_sum(1, layer));

    if (t >= 2) {
        double up = std::pow(2.0, t - 1) * std::pow(in_sq / n0, t) * std::pow(ck, static_cast<double>(t) * layer) *
                    std::exp(static_cast<double>(t) * t * inv_width_sum(1, layer));
        double lo = std::pow(in_sq / n0, t) * std::pow(cm, static_cast<double>(t) * layer);
        if (gaussian_bias) {
            double up_tail = 0.0, lo_tail = 0.0;
            for (int j = 2; j <= layer; ++j) {
                up_tail += std::pow(ck, static_cast<double>(t) * (layer - j + 1)) /
                           std::pow(hidden_width(j - 1), t) *
                           std::exp(static_cast<double>(t) * t * inv_width_sum(j, layer));
                lo_tail += std::pow(cm, static_cast<double>(t) * (layer - j + 1)) /
                           std::pow(hidden_width(j - 1), t);
            }
            if (layer >= 2) up += std::pow(2.0 * (layer - 1), t - 1) * up_tail;
            lo += lo_tail;
        }
        out.moment_upper = up;
        out.moment_lower = lo;
    }
    return out;
}

double c_grad_bound(const net::Architecture& arch, double c, int t) {
    require_maxout(arch, c);
    if (t < 1) throw std::invalid_argument("moment order t must be >= 1");
    const double ck = c * arch.maxout_rank;
    const double amp = std::max(1.0, std::pow(ck, 0.5 * arch.hidden_count()));
    return amp / std::sqrt(static_cast<double>(arch.input_width)) *
           std::exp(0.5 * t * (width_sum(arch) + 1.0));
}

RegionCountBound region_count_bound(std::int64_t unit_count, int input_width, int rank,
                                    std::int64_t r, double t_scale) {
    if (unit_count < 0 || input_width < 1 || rank < 2 || r < 0 || !(t_scale > 0.0))
        throw std::invalid_argument("region count bound: bad arguments");
    const double n = static_cast<double>(unit_count);
    const double n0 = static_cast<double>(input_width);
    const double k = static_cast<double>(rank);
    const double rr = static_cast<double>(r);

    double log_v;
    if (unit_count <= input_width) {
        log_v = log_binomial(rr * k, 2.0 * rr) + log_binomial(n, rr) + (n - rr) * std::log(k);
    } else {
        log_v = n0 * std::log(t_scale * k * n) + log_binomial(n0 * k, 2.0 * n0) -
                rr * std::log(2.0 * k) - std::lgamma(n0 + 1.0);
    }
    RegionCountBound out;
    out.log_upper = log_v;
    out.upper = std::exp(log_v);
    return out;
}

BoundReport curve_length_bounds(const net::Architecture& arch, double c, int t) {
    const OrderStatConstants& osc = require_maxout(arch, c);
    if (t < 1) throw std::invalid_argument("moment order t must be >= 1");
    const double ratio = static_cast<double>(arch.output_width) / arch.input_width;
    const int lm1 = arch.hidden_count();

    BoundReport r;
    r.quantity = "curve_length";
    r.t = t;
    if (t == 1) {
        r.upper = std::sqrt(ratio) * std::pow(c * osc.l, 0.5 * lm1);
    } else {
        const double expo = width_sum(arch) + 1.0 / arch.output_width;
        r.upper = std::pow(ratio, 0.5 * t) * std::pow(c * osc.k, 0.5 * t * lm1) *
                  std::exp(0.5 * t * t * expo);
    }
    return r;
}

BoundReport curve_length_variance_bound(const net::Architecture& arch, double c) {
    const OrderStatConstants& osc = require_maxout(arch, c);
    const double ratio = static_cast<double>(arch.output_width) / arch.input_width;
    BoundReport r;
    r.quantity = "curve_length_variance";
    r.t = 2;
    r.upper = ratio * std::pow(c * osc.l, arch.hidden_count());
    return r;
}

NtkBounds ntk_bounds(const net::Architecture& arch, double c, const std::vector<double>& x) {
    const OrderStatConstants& osc = require_maxout(arch, c);
    if (arch.output_width != 1)
        throw std::invalid_argument("ntk bounds require a scalar output");
    if (arch.bias_mode != net::BiasMode::zero)
        throw std::invalid_argument("ntk bounds require zero biases");
    if (static_cast<int>(x.size()) != arch.input_width)
        throw std::invalid_argument("input size must match input width");
    if (c < osc.s || c > osc.l)
        throw std::invalid_argument("ntk bounds require s <= c <= l");

    const int big_l = arch.depth();
    const double n0 = arch.input_width;
    const double aug_sq = norm_sq(x) + 1.0;

    NtkBounds out;
    out.p = n0;
    for (int w : arch.hidden_widths) out.p += w;
    double pw = 0.0;
    int prev = arch.input_width;
    for (int w : arch.hidden_widths) {
        pw += static_cast<double>(w) * prev;
        prev = w;
    }
    pw += static_cast<double>(arch.output_width) * prev;
    out.p_w = pw;

    out.mean_lower = aug_sq * std::pow(c * osc.s, big_l - 2) / n0 * out.p;
    out.mean_upper =
        aug_sq * std::pow(c * osc.l, big_l - 2) * std::pow(osc.m, big_l - 1) / n0 * out.p;

    double inv_sum = 0.0;
    for (int w : arch.hidden_widths) inv_sum += 4.0 / (static_cast<double>(w) * osc.k);
    out.second_moment_upper = 2.0 * out.p * out.p_w * std::pow(c * osc.k, 2.0 * (big_l - 2)) *
                              aug_sq * aug_sq / (n0 * n0) * std::exp(inv_sum + 4.0);
    return out;
}

ArchitectureCheck architecture_check(const net::Architecture& arch, double c) {
    const OrderStatConstants& osc = require_maxout(arch, c);
    ArchitectureCheck out;
    out.width_sum = width_sum(arch);
    out.width_ok = out.width_sum <= 1.0;
    out.ck = c * osc.k;
    out.recommended = 1.0 / osc.m;
    out.c_is_recommended = std::abs(c - out.recommended) <= 1e-6;
    return out;
}

}  // namespace maxgrad::theory
