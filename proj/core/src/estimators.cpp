#include "maxgrad/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "maxgrad/order_stats.hpp"
#include "maxgrad/parallel.hpp"

namespace maxgrad::est {

namespace {

using order_stats::OrderStatKind;

void check_vec(const std::vector<double>& v, int want, const char* what) {
    if (static_cast<int>(v.size()) != want) {
        std::ostringstream msg;
        msg << what << " has size " << v.size() << ", expected " << want;
        throw std::invalid_argument(msg.str());
    }
}

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
}

void require_unit(const std::vector<double>& u, const char* what) {
    if (std::abs(norm(u) - 1.0) > 1e-6)
        throw std::invalid_argument(std::string(what) + " must have unit norm");
}

void require_nonzero(const std::vector<double>& x, const char* what) {
    if (norm(x) == 0.0) throw std::invalid_argument(std::string(what) + " must be nonzero");
}

// |cos| between activation and direction vectors, optionally bias-augmented:
// (x, 1) vs (u, 0) appends nothing to the inner product but extends ||x||.
double abs_cosine(const std::vector<double>& x, const std::vector<double>& u, bool augment) {
    double xx = 0.0, uu = 0.0, xu = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx += x[i] * x[i];
        uu += u[i] * u[i];
        xu += x[i] * u[i];
    }
    if (augment) xx += 1.0;
    if (xx == 0.0 || uu == 0.0) return 0.0;
    return std::abs(xu) / std::sqrt(xx * uu);
}

// signed cosine, same augmentation convention
double cosine(const std::vector<double>& x, const std::vector<double>& u, bool augment) {
    double xx = 0.0, uu = 0.0, xu = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx += x[i] * x[i];
        uu += u[i] * u[i];
        xu += x[i] * u[i];
    }
    if (augment) xx += 1.0;
    if (xx == 0.0 || uu == 0.0) return 0.0;
    return xu / std::sqrt(xx * uu);
}

// direction image under the selected rows of each hidden layer, normalized
// after every layer; entries[l] = u^(l). Returns false once a zero image is
// hit (remaining entries stay zero vectors).
std::vector<std::vector<double>> propagate_direction(const net::ParamSet& p,
                                                     const net::ForwardTrace& trace,
                                                     const std::vector<double>& u) {
    const bool relu = p.arch.activation == net::Activation::relu;
    std::vector<std::vector<double>> out(p.hidden.size() + 1);
    out[0] = u;
    const double n0 = norm(out[0]);
    if (n0 > 0.0)
        for (double& e : out[0]) e /= n0;
    for (std::size_t l = 0; l < p.hidden.size(); ++l) {
        const net::LayerParams& lp = p.hidden[l];
        const std::vector<int>& ks = trace.kstar[l];
        std::vector<double>& next = out[l + 1];
        next.assign(lp.units, 0.0);
        double nsq = 0.0;
        for (int i = 0; i < lp.units; ++i) {
            if (relu && ks[i] == 0) continue;
            const int k = relu ? 0 : ks[i];
            const double* row = &lp.w[(static_cast<std::size_t>(i) * lp.rank + k) * lp.fan_in];
            double s = 0.0;
            for (int j = 0; j < lp.fan_in; ++j) s += row[j] * out[l][static_cast<std::size_t>(j)];
            next[i] = s;
            nsq += s * s;
        }
        if (nsq == 0.0) break;
        const double inv = 1.0 / std::sqrt(nsq);
        for (double& e : next) e *= inv;
    }
    return out;
}

}  // namespace

MomentEstimate summarize(const std::vector<double>& values, int t_max, std::uint64_t master_seed) {
    MomentEstimate e;
    e.n = static_cast<std::int64_t>(values.size());
    e.master_seed = master_seed;
    if (values.empty()) return e;

    double sum = 0.0;
    for (double v : values) sum += v;
    e.mean = sum / static_cast<double>(e.n);

    double ss = 0.0;
    for (double v : values) {
        const double d = v - e.mean;
        ss += d * d;
    }
    e.variance = e.n > 1 ? ss / static_cast<double>(e.n - 1) : 0.0;
    e.stderr_mean = std::sqrt(e.variance / static_cast<double>(e.n));

    for (int t = 2; t <= t_max; ++t) {
        double acc = 0.0;
        for (double v : values) acc += std::pow(v, t);
        e.higher[t] = acc / static_cast<double>(e.n);
    }
    return e;
}

MomentEstimate mc_jacobian_moments(const net::Architecture& arch, const net::InitScheme& scheme,
                                   const std::vector<double>& x, const std::vector<double>& u,
                                   int t_max, std::int64_t n_samples, std::uint64_t master_seed) {
    arch.validate();
    check_vec(x, arch.input_width, "input x");
    check_vec(u, arch.input_width, "direction u");
    require_unit(u, "direction u");
    if (t_max < 1) throw std::invalid_argument("mc_jacobian_moments needs t_max >= 1");
    if (n_samples < 100)
        throw std::invalid_argument("mc_jacobian_moments needs at least 100 samples");
    auto values = par::map_indexed<double>(n_samples, [&](std::int64_t i) {
        rng::Stream stream(master_seed, static_cast<std::uint64_t>(i));
        const net::ParamSet p = net::init_params_stream(arch, scheme.c, stream);
        return net::directional_derivative_sq(p, x, u);
    });
    return summarize(values, t_max, master_seed);
}

StochasticOrderReport stochastic_order_test(const net::Architecture& arch,
                                            const net::InitScheme& scheme,
                                            const std::vector<double>& x,
                                            const std::vector<double>& u,
                                            std::int64_t n_per_side, double alpha,
                                            std::uint64_t master_seed, int grid_points) {
    arch.validate();
    if (arch.activation != net::Activation::maxout)
        throw std::invalid_argument("stochastic order test is defined for maxout networks");
    check_vec(x, arch.input_width, "input x");
    check_vec(u, arch.input_width, "direction u");
    if (n_per_side < 10000)
        throw std::invalid_argument("stochastic order test: insufficient samples (need >= 10^4)");
    if (!(alpha > 0.0 && alpha < 1.0) || grid_points < 1)
        throw std::invalid_argument("stochastic order test: bad arguments");

    const int k = arch.maxout_rank;
    const double n0 = arch.input_width;

    auto net_vals = par::map_indexed<double>(n_per_side, [&](std::int64_t i) {
        rng::Stream stream(master_seed, static_cast<std::uint64_t>(i));
        const net::ParamSet p = net::init_params_stream(arch, scheme.c, stream);
        return net::directional_derivative_sq(p, x, u);
    });
    // product random variables (1/n0) chi2_{nL} prod_l (c/n_l) sum_i xi_{l,i}
    auto bound_sample = [&](std::uint64_t stream_id, OrderStatKind kind) {
        rng::Stream stream(master_seed, stream_id);
        double v = stream.chi_squared(arch.output_width) / n0;
        for (int w : arch.hidden_widths) {
            double s = 0.0;
            for (int i = 0; i < w; ++i) s += order_stats::sample_order_stat(kind, k, stream);
            v *= scheme.c / static_cast<double>(w) * s;
        }
        return v;
    };
    auto lower_vals = par::map_indexed<double>(n_per_side, [&](std::int64_t i) {
        return bound_sample(static_cast<std::uint64_t>(n_per_side + i), OrderStatKind::min_chisq1);
    });
    auto upper_vals = par::map_indexed<double>(n_per_side, [&](std::int64_t i) {
        return bound_sample(static_cast<std::uint64_t>(2 * n_per_side + i), OrderStatKind::max_chisq1);
    });

    std::vector<double> net_sorted = net_vals;
    std::sort(net_sorted.begin(), net_sorted.end());
    std::sort(lower_vals.begin(), lower_vals.end());
    std::sort(upper_vals.begin(), upper_vals.end());

    auto ecdf = [](const std::vector<double>& sorted, double z) {
        return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), z) -
                                   sorted.begin()) /
               static_cast<double>(sorted.size());
    };

    StochasticOrderReport rep;
    rep.alpha = alpha;
    rep.n_per_side = n_per_side;
    rep.grid_points = grid_points;
    rep.epsilon = std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n_per_side)));

    for (int g = 0; g < grid_points; ++g) {
        const double q = (g + 0.5) / grid_points;
        const double z =
            net_sorted[static_cast<std::size_t>(q * static_cast<double>(n_per_side - 1))];
        const double f_net = ecdf(net_sorted, z);
        const double f_lower = ecdf(lower_vals, z);
        const double f_upper = ecdf(upper_vals, z);
        // lowerRV <=st net <=st upperRV means F_lower >= F_net >= F_upper
        rep.max_lower_violation = std::max(rep.max_lower_violation, f_net - f_lower);
        rep.max_upper_violation = std::max(rep.max_upper_violation, f_upper - f_net);
    }
    rep.pass = rep.max_lower_violation <= 2.0 * rep.epsilon &&
               rep.max_upper_violation <= 2.0 * rep.epsilon;
    return rep;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t ia = 0, ib = 0;
    double d = 0.0;
    while (ia < a.size() && ib < b.size()) {
        const double z = std::min(a[ia], b[ib]);
        while (ia < a.size() && a[ia] <= z) ++ia;
        while (ib < b.size() && b[ib] <= z) ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    return d;
}

double ks_critical(std::int64_t n, std::int64_t m, double alpha) {
    if (n < 1 || m < 1 || !(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("ks critical value: bad arguments");
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * static_cast<double>(m)));
}

KsReport eq_in_distribution_check(const net::Architecture& arch, const net::InitScheme& scheme,
                                  const std::vector<double>& x, const std::vector<double>& u,
                                  std::int64_t n_per_side, double alpha,
                                  std::uint64_t master_seed) {
    arch.validate();
    if (arch.activation != net::Activation::maxout)
        throw std::invalid_argument("equality in distribution is defined for maxout networks");
    check_vec(x, arch.input_width, "input x");
    check_vec(u, arch.input_width, "direction u");
    require_nonzero(x, "input x");
    if (n_per_side < 2 || !(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("eq-in-distribution check: bad arguments");

    const bool augment = arch.bias_mode == net::BiasMode::gaussian;
    const int k = arch.maxout_rank;
    const double n0 = arch.input_width;

    auto real_vals = par::map_indexed<double>(n_per_side, [&](std::int64_t i) {
        rng::Stream stream(master_seed, static_cast<std::uint64_t>(2 * i));
        const net::ParamSet p = net::init_params_stream(arch, scheme.c, stream);
        return net::directional_derivative_sq(p, x, u);
    });

    auto sim_vals = par::map_indexed<double>(n_per_side, [&](std::int64_t i) {
        rng::Stream stream(master_seed, static_cast<std::uint64_t>(2 * i + 1));
        const net::ParamSet p = net::init_params_stream(arch, scheme.c, stream);
        const net::ForwardTrace trace = net::forward(p, x);
        const auto dirs = propagate_direction(p, trace, u);

        double v = stream.chi_squared(arch.output_width) / n0;
        for (std::size_t l = 0; l < p.hidden.size(); ++l) {
            const double rho = cosine(trace.x[l], dirs[l], augment);
            const double ortho = std::sqrt(std::max(0.0, 1.0 - rho * rho));
            const int w = p.hidden[l].units;
            double s = 0.0;
            for (int i2 = 0; i2 < w; ++i2) {
                const double g = stream.gaussian();
                const double xi =
                    order_stats::sample_order_stat(OrderStatKind::max_gauss, k, stream);
                const double term = g * ortho + xi * rho;
                s += term * term;
            }
            v *= scheme.c / static_cast<double>(w) * s;
        }
        return v;
    });

    KsReport rep;
    rep.alpha = alpha;
    rep.n = n_per_side;
    rep.d_stat = ks_statistic(real_vals, sim_vals);
    rep.d_critical = ks_critical(n_per_side, n_per_side, alpha);
    rep.pass = rep.d_stat <= rep.d_critical;
    return rep;
}

CosineTrajectory cosine_trajectory(const net::Architecture& arch, const net::InitScheme& scheme,
                                   const std::vector<double>& x, const std::vector<double>& u,
                                   int n_inits, std::uint64_t master_seed) {
    arch.validate();
    check_vec(x, arch.input_width, "input x");
    check_vec(u, arch.input_width, "direction u");
    require_nonzero(x, "input x");
    require_unit(u, "direction u");
    if (n_inits < 1) throw std::invalid_argument("cosine trajectory: n_inits must be >= 1");

    const bool augment = arch.bias_mode == net::BiasMode::gaussian;
    const std::size_t layers = arch.hidden_widths.size();

    auto rows = par::map_indexed<std::vector<double>>(n_inits, [&](std::int64_t i) {
        rng::Stream stream(master_seed, static_cast<std::uint64_t>(i));
        const net::ParamSet p = net::init_params_stream(arch, scheme.c, stream);
        const net::ForwardTrace trace = net::forward(p, x);
        const auto dirs = propagate_direction(p, trace, u);
        std::vector<double> cs(layers);
        for (std::size_t l = 0; l < layers; ++l) cs[l] = abs_cosine(trace.x[l], dirs[l], augment);
        return cs;
    });

    CosineTrajectory out;
    out.n_inits = n_inits;
    out.mean_abs_cos.assign(layers, 0.0);
    out.stderr_abs_cos.assign(layers, 0.0);
    for (const auto& row : rows)
        for (std::size_t l = 0; l < layers; ++l) out.mean_abs_cos[l] += row[l];
    for (std::size_t l = 0; l < layers; ++l) out.mean_abs_cos[l] /= n_inits;
    if (n_inits > 1) {
        for (const auto& row : rows)
            for (std::size_t l = 0; l < layers; ++l) {
                const double d = row[l] - out.mean_abs_cos[l];
                out.stderr_abs_cos[l] += d * d;
            }
        for (std::size_t l = 0; l < layers; ++l)
            out.stderr_abs_cos[l] =
                std::sqrt(out.stderr_abs_cos[l] / (static_cast<double>(n_inits) - 1.0) /
                          static_cast<double>(n_inits));
    }
    return out;
}

MomentEstimate mc_activation_length(const net::Architecture& arch, const net::InitScheme& scheme,
                                    const std::vector<double>& x, int layer, int t_max,
                                    std::int64_t n_samples, std::uint64_t master_seed) {
    arch.validate();
    check_vec(x, arch.input_width, "input x");
    if (layer < 0 || layer > arch.hidden_count())
        throw std::invalid_argument("activation layer out of range");
    auto values = par::map_indexed<double>(n_samples, [&](std::int64_t i) {
        rng::Stream stream(master_seed, static_cast<std::uint64_t>(i));
        const net::ParamSet p = net::init_params_stream(arch, scheme.c, stream);
        const net::ForwardTrace trace = net::forward(p, x);
        return net::activation_length(trace, arch, layer);
    });
    return summarize(values, t_max, master_seed);
}

namespace {

struct CurveGrid {
    std::vector<std::vector<double>> pts;
    std::vector<std::vector<double>> tang;
    std::vector<double> tau;
};

CurveGrid prepare_curve(const std::vector<std::vector<double>>& curve, int input_width) {
    if (curve.size() < 2) throw std::invalid_argument("curve needs at least 2 points");
    for (const auto& pt : curve) check_vec(pt, input_width, "curve point");

    // rescale to unit total chord length
    double total = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        double seg = 0.0;
        for (std::size_t j = 0; j < curve[i].size(); ++j) {
            const double d = curve[i][j] - curve[i - 1][j];
            seg += d * d;
        }
        total += std::sqrt(seg);
    }
    if (!(total > 0.0)) throw std::invalid_argument("curve has zero length");

    CurveGrid g;
    const std::size_t m = curve.size();
    g.pts.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        g.pts[i] = curve[i];
        for (double& v : g.pts[i]) v /= total;
    }
    g.tau.assign(m, 0.0);
    for (std::size_t i = 1; i < m; ++i) {
        double seg = 0.0;
        for (std::size_t j = 0; j < g.pts[i].size(); ++j) {
            const double d = g.pts[i][j] - g.pts[i - 1][j];
            seg += d * d;
        }
        g.tau[i] = g.tau[i - 1] + std::sqrt(seg);
    }
    // tangents: central differences in tau, one-sided at the ends
    g.tang.assign(m, std::vector<double>(g.pts[0].size(), 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 == m ? i : i + 1;
        const double dt = g.tau[hi] - g.tau[lo];
        if (dt <= 0.0) throw std::invalid_argument("curve has coincident grid points");
        for (std::size_t j = 0; j < g.pts[0].size(); ++j)
            g.tang[i][j] = (g.pts[hi][j] - g.pts[lo][j]) / dt;
    }
    return g;
}

double curve_length_on_grid(const net::ParamSet& params, const CurveGrid& g) {
    const std::size_t m = g.pts.size();
    double len = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double speed = std::sqrt(net::directional_derivative_sq(params, g.pts[i], g.tang[i]));
        if (i > 0) len += 0.5 * (prev + speed) * (g.tau[i] - g.tau[i - 1]);
        prev = speed;
    }
    return len;
}

}  // namespace

double curve_length(const net::ParamSet& params, const std::vector<std::vector<double>>& curve) {
    params.arch.validate();
    return curve_length_on_grid(params, prepare_curve(curve, params.arch.input_width));
}

MomentEstimate mc_curve_length(const net::Architecture& arch, const net::InitScheme& scheme,
                               const std::vector<std::vector<double>>& curve,
                               std::int64_t n_inits, std::uint64_t master_seed) {
    arch.validate();
    const CurveGrid grid = prepare_curve(curve, arch.input_width);
    auto values = par::map_indexed<double>(n_inits, [&](std::int64_t i) {
        rng::Stream stream(master_seed, static_cast<std::uint64_t>(i));
        const net::ParamSet p = net::init_params_stream(arch, scheme.c, stream);
        return curve_length_on_grid(p, grid);
    });
    return summarize(values, 2, master_seed);
}

RegionCount1D count_regions_1d(const net::ParamSet& params, const std::vector<double>& a,
                               const std::vector<double>& b, int resolution, double refine_tol) {
    params.arch.validate();
    check_vec(a, params.arch.input_width, "segment start");
    check_vec(b, params.arch.input_width, "segment end");
    if (resolution < 2 || !(refine_tol > 0.0))
        throw std::invalid_argument("region scan: bad arguments");

    const int n0 = params.arch.input_width;
    std::vector<double> point(static_cast<std::size_t>(n0));
    std::vector<double> sa, sb;
    std::vector<int> pat_prev, pat_cur, pat_lo;

    auto eval_pattern = [&](double t, std::vector<int>& out) {
        for (int j = 0; j < n0; ++j) point[static_cast<std::size_t>(j)] = a[static_cast<std::size_t>(j)] + t * (b[static_cast<std::size_t>(j)] - a[static_cast<std::size_t>(j)]);
        net::argmax_pattern(params, point, out, sa, sb);
    };

    RegionCount1D out;
    eval_pattern(0.0, pat_prev);
    double t_prev = 0.0;
    for (int s = 1; s <= resolution; ++s) {
        const double t_cur = static_cast<double>(s) / resolution;
        eval_pattern(t_cur, pat_cur);
        if (pat_cur != pat_prev) {
            // bisect for the first pattern change after t_prev
            double lo = t_prev, hi = t_cur;
            pat_lo = pat_prev;
            std::vector<int> pat_mid;
            while (hi - lo > refine_tol) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                eval_pattern(mid, pat_mid);
                if (pat_mid == pat_lo)
                    lo = mid;
                else
                    hi = mid;
            }
            out.breakpoints.push_back(0.5 * (lo + hi));
            pat_prev.swap(pat_cur);
        }
        t_prev = t_cur;
    }
    out.region_count = static_cast<std::int64_t>(out.breakpoints.size()) + 1;
    return out;
}

MomentEstimate mc_ntk_diag(const net::Architecture& arch, const net::InitScheme& scheme,
                           const std::vector<double>& x, std::int64_t n_samples,
                           std::uint64_t master_seed) {
    arch.validate();
    if (arch.output_width != 1)
        throw std::invalid_argument("ntk estimator requires a scalar output");
    if (arch.bias_mode != net::BiasMode::zero)
        throw std::invalid_argument("ntk estimator requires zero-bias initialization");
    check_vec(x, arch.input_width, "input x");
    const std::vector<double> upstream{1.0};

    auto values = par::map_indexed<double>(n_samples, [&](std::int64_t i) {
        rng::Stream stream(master_seed, static_cast<std::uint64_t>(i));
        const net::ParamSet p = net::init_params_stream(arch, scheme.c, stream);
        const net::GradientSet g = net::param_gradients(p, x, upstream);
        double s = 0.0;
        for (const net::LayerParams& lp : g.hidden)
            for (double v : lp.w) s += v * v;
        for (double v : g.w_out) s += v * v;
        return s;
    });
    return summarize(values, 2, master_seed);
}

}  // namespace maxgrad::est
