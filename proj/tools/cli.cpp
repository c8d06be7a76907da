#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "config.hpp"
#include "json.hpp"
#include "maxgrad/estimators.hpp"
#include "maxgrad/network.hpp"
#include "maxgrad/order_stats.hpp"
#include "maxgrad/report.hpp"
#include "maxgrad/rng.hpp"
#include "maxgrad/theory.hpp"
#include "maxgrad/training.hpp"
#include "maxgrad/version.hpp"

namespace maxgrad::cli {

namespace {

using nlohmann::json;
using report::format_double;

std::string hash_hex(std::uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json meta_json(const ExperimentConfig& cfg, std::uint64_t master_seed) {
    json meta;
    meta["version"] = std::string(kVersion);
    meta["subcommand"] = cfg.subcommand;
    meta["master_seed"] = master_seed;
    meta["config_hash"] = hash_hex(cfg.config_hash);
    meta["config"] = json::parse(cfg.canonical_json);
    return meta;
}

std::vector<std::string> provenance_comments(const ExperimentConfig& cfg,
                                             std::uint64_t master_seed) {
    return {"subcommand=" + cfg.subcommand, "master_seed=" + std::to_string(master_seed),
            "config_hash=" + hash_hex(cfg.config_hash), "version=" + std::string(kVersion)};
}

void write_summary(const ExperimentConfig& cfg, std::uint64_t master_seed, json data) {
    json out;
    out["meta"] = meta_json(cfg, master_seed);
    out["data"] = std::move(data);
    report::write_text_atomic(cfg.io.out_json, out.dump(2) + "\n");
}

const net::Architecture& require_arch(const ExperimentConfig& cfg, bool maxout_only) {
    if (!cfg.architecture)
        throw ConfigError("config error: subcommand \"" + cfg.subcommand +
                          "\" requires an architecture block");
    if (maxout_only && cfg.architecture->activation != net::Activation::maxout)
        throw ConfigError(
            "config error: the closed-form comparisons need a maxout architecture");
    return *cfg.architecture;
}

std::vector<double> require_vec(const std::vector<double>& v, int want, const char* name) {
    if (static_cast<int>(v.size()) != want)
        throw ConfigError("config error: estimator." + std::string(name) + " must have " +
                          std::to_string(want) + " entries");
    return v;
}

void print_pass_line(bool pass) { std::cout << "result: " << (pass ? "pass" : "fail") << "\n"; }

// ---- constants -------------------------------------------------------------

int cmd_constants(const ExperimentConfig& cfg, int k_min, int k_max) {
    if (k_min < order_stats::kMinRank || k_max > order_stats::kMaxRank || k_min > k_max)
        throw ConfigError("config error: need " + std::to_string(order_stats::kMinRank) +
                          " <= k-min <= k-max <= " + std::to_string(order_stats::kMaxRank));
    report::CsvFile csv;
    csv.comments = provenance_comments(cfg, 0);
    csv.header = {"k", "min_chisq_mean", "max_chisq_mean", "max_gauss_sq_mean", "recommended_c"};
    json rows = json::array();
    report::Table table(csv.header);
    for (int k = k_min; k <= k_max; ++k) {
        const auto c = order_stats::compute_constants(k);
        const double rec = 1.0 / c.m;
        csv.rows.push_back({std::to_string(k), format_double(c.s), format_double(c.l),
                            format_double(c.m), format_double(rec)});
        table.add_row(csv.rows.back());
        rows.push_back({{"k", k},
                        {"min_chisq_mean", c.s},
                        {"max_chisq_mean", c.l},
                        {"max_gauss_sq_mean", c.m},
                        {"recommended_c", rec}});
    }
    report::write_csv(cfg.io.out_csv, csv);
    write_summary(cfg, 0, json{{"rows", rows}});
    std::cout << table.to_string();
    return 0;
}

// ---- bounds ----------------------------------------------------------------

int cmd_bounds(const ExperimentConfig& cfg) {
    const net::Architecture& arch = require_arch(cfg, true);
    const double c = resolve_c(cfg.c_kind, cfg.c, arch);
    const int t_max = std::max(1, cfg.estimator.t_max);

    report::CsvFile csv;
    csv.comments = provenance_comments(cfg, 0);
    csv.header = {"quantity", "t", "lower", "upper", "exact"};
    json data;
    auto add = [&](const theory::BoundReport& b) {
        csv.rows.push_back({b.quantity, std::to_string(b.t),
                            b.lower ? format_double(*b.lower) : std::string(),
                            b.upper ? format_double(*b.upper) : std::string(),
                            b.exact ? format_double(*b.exact) : std::string()});
        json j{{"quantity", b.quantity}, {"t", b.t}};
        if (b.lower) j["lower"] = *b.lower;
        if (b.upper) j["upper"] = *b.upper;
        if (b.exact) j["exact"] = *b.exact;
        data["bounds"].push_back(std::move(j));
    };

    for (int t = 1; t <= t_max; ++t) add(theory::jacobian_moment_bounds(arch, c, t));
    add(theory::jacobian_variance_bound(arch, c));
    add(theory::curve_length_bounds(arch, c, 1));
    {
        theory::BoundReport grad;
        grad.quantity = "gradient_scale";
        grad.t = 1;
        grad.upper = theory::c_grad_bound(arch, c, 1);
        add(grad);
    }
    if (!cfg.estimator.input.empty()) {
        const auto x = require_vec(cfg.estimator.input, arch.input_width, "input");
        int layer = cfg.estimator.layer;
        if (layer < 0) layer = arch.hidden_count();
        const auto stats = theory::activation_length_stats(arch, c, x, layer, t_max);
        theory::BoundReport act;
        act.quantity = "activation_length_layer" + std::to_string(layer);
        act.t = 1;
        act.exact = stats.exact_mean;
        add(act);
        theory::BoundReport actvar;
        actvar.quantity = "activation_length_variance_layer" + std::to_string(layer);
        actvar.t = 2;
        actvar.upper = stats.variance_upper;
        add(actvar);
    }
    if (arch.output_width == 1 && arch.bias_mode == net::BiasMode::zero &&
        !cfg.estimator.input.empty()) {
        const auto x = require_vec(cfg.estimator.input, arch.input_width, "input");
        const auto ntk = theory::ntk_bounds(arch, c, x);
        theory::BoundReport rep;
        rep.quantity = "ntk_mean";
        rep.t = 1;
        rep.lower = ntk.mean_lower;
        rep.upper = ntk.mean_upper;
        add(rep);
        theory::BoundReport rep2;
        rep2.quantity = "ntk_second_moment";
        rep2.t = 2;
        rep2.upper = ntk.second_moment_upper;
        add(rep2);
    }
    const auto check = theory::architecture_check(arch, c);
    data["architecture_check"] = {{"width_sum", check.width_sum},
                                  {"width_ok", check.width_ok},
                                  {"ck", check.ck},
                                  {"recommended_c", check.recommended},
                                  {"c_is_recommended", check.c_is_recommended}};

    report::write_csv(cfg.io.out_csv, csv);
    write_summary(cfg, 0, data);
    report::Table table(csv.header);
    for (const auto& row : csv.rows) table.add_row(row);
    std::cout << table.to_string();
    return 0;
}

// ---- verify-jacobian -------------------------------------------------------

int cmd_verify_jacobian(const ExperimentConfig& cfg) {
    const net::Architecture& arch = require_arch(cfg, true);
    const double c = resolve_c(cfg.c_kind, cfg.c, arch);
    const auto x = require_vec(cfg.estimator.input, arch.input_width, "input");
    const auto u = require_vec(cfg.estimator.direction, arch.input_width, "direction");
    const EstimatorBlock& e = cfg.estimator;
    const int t_max = std::max(1, e.t_max);

    const auto mc =
        est::mc_jacobian_moments(arch, {c, e.seed}, x, u, t_max, e.n_samples, e.seed);

    report::CsvFile csv;
    csv.comments = provenance_comments(cfg, e.seed);
    csv.header = {"t", "estimate", "stderr", "lower", "upper"};
    json data;
    bool in_bounds = true;
    for (int t = 1; t <= t_max; ++t) {
        const auto b = theory::jacobian_moment_bounds(arch, c, t);
        const double estimate = t == 1 ? mc.mean : mc.higher.at(t);
        const double se = t == 1 ? mc.stderr_mean : 0.0;
        if (t == 1) in_bounds = *b.lower <= mc.mean && mc.mean <= *b.upper;
        csv.rows.push_back({std::to_string(t), format_double(estimate), format_double(se),
                            format_double(*b.lower), format_double(*b.upper)});
        data["moments"].push_back({{"t", t},
                                   {"estimate", estimate},
                                   {"lower", *b.lower},
                                   {"upper", *b.upper}});
    }
    data["mean"] = mc.mean;
    data["stderr_mean"] = mc.stderr_mean;
    data["variance"] = mc.variance;
    data["variance_upper"] = *theory::jacobian_variance_bound(arch, c).upper;
    data["n_samples"] = mc.n;
    data["in_bounds"] = in_bounds;

    report::write_csv(cfg.io.out_csv, csv);
    write_summary(cfg, e.seed, data);
    std::cout << "mean ||Ju||^2 = " << format_double(mc.mean) << " (stderr "
              << format_double(mc.stderr_mean) << "), bounds ["
              << format_double(*theory::jacobian_moment_bounds(arch, c, 1).lower) << ", "
              << format_double(*theory::jacobian_moment_bounds(arch, c, 1).upper) << "]\n";
    print_pass_line(in_bounds);
    return in_bounds ? 0 : 1;
}

// ---- verify-order ----------------------------------------------------------

int cmd_verify_order(const ExperimentConfig& cfg) {
    const net::Architecture& arch = require_arch(cfg, true);
    const double c = resolve_c(cfg.c_kind, cfg.c, arch);
    const auto x = require_vec(cfg.estimator.input, arch.input_width, "input");
    const auto u = require_vec(cfg.estimator.direction, arch.input_width, "direction");
    const EstimatorBlock& e = cfg.estimator;

    const auto rep = est::stochastic_order_test(arch, {c, e.seed}, x, u, e.n_samples, e.alpha,
                                                e.seed, e.grid_points);

    report::CsvFile csv;
    csv.comments = provenance_comments(cfg, e.seed);
    csv.header = {"quantity", "value"};
    csv.rows = {{"epsilon", format_double(rep.epsilon)},
                {"max_lower_violation", format_double(rep.max_lower_violation)},
                {"max_upper_violation", format_double(rep.max_upper_violation)},
                {"n_per_side", std::to_string(rep.n_per_side)},
                {"grid_points", std::to_string(rep.grid_points)},
                {"alpha", format_double(rep.alpha)},
                {"pass", rep.pass ? "1" : "0"}};
    json data{{"pass", rep.pass},
              {"epsilon", rep.epsilon},
              {"max_lower_violation", rep.max_lower_violation},
              {"max_upper_violation", rep.max_upper_violation},
              {"n_per_side", rep.n_per_side},
              {"grid_points", rep.grid_points},
              {"alpha", rep.alpha}};

    report::write_csv(cfg.io.out_csv, csv);
    write_summary(cfg, e.seed, data);
    std::cout << "max violations: lower " << format_double(rep.max_lower_violation) << ", upper "
              << format_double(rep.max_upper_violation) << " vs band "
              << format_double(2.0 * rep.epsilon) << "\n";
    print_pass_line(rep.pass);
    return rep.pass ? 0 : 1;
}

// ---- verify-eqdist ---------------------------------------------------------

int cmd_verify_eqdist(const ExperimentConfig& cfg) {
    const net::Architecture& arch = require_arch(cfg, true);
    const double c = resolve_c(cfg.c_kind, cfg.c, arch);
    const auto x = require_vec(cfg.estimator.input, arch.input_width, "input");
    const auto u = require_vec(cfg.estimator.direction, arch.input_width, "direction");
    const EstimatorBlock& e = cfg.estimator;

    const auto rep = est::eq_in_distribution_check(arch, {c, e.seed}, x, u, e.n_samples, e.alpha,
                                                   e.seed);

    report::CsvFile csv;
    csv.comments = provenance_comments(cfg, e.seed);
    csv.header = {"quantity", "value"};
    csv.rows = {{"ks_statistic", format_double(rep.d_stat)},
                {"ks_critical", format_double(rep.d_critical)},
                {"n_per_side", std::to_string(rep.n)},
                {"alpha", format_double(rep.alpha)},
                {"pass", rep.pass ? "1" : "0"}};
    json data{{"pass", rep.pass},
              {"ks_statistic", rep.d_stat},
              {"ks_critical", rep.d_critical},
              {"n_per_side", rep.n},
              {"alpha", rep.alpha}};

    report::write_csv(cfg.io.out_csv, csv);
    write_summary(cfg, e.seed, data);
    std::cout << "two-sample KS: " << format_double(rep.d_stat) << " vs critical "
              << format_double(rep.d_critical) << "\n";
    print_pass_line(rep.pass);
    return rep.pass ? 0 : 1;
}

// ---- cosine ----------------------------------------------------------------

int cmd_cosine(const ExperimentConfig& cfg) {
    const net::Architecture& arch = require_arch(cfg, false);
    const double c = resolve_c(cfg.c_kind, cfg.c, arch);
    const auto x = require_vec(cfg.estimator.input, arch.input_width, "input");
    const auto u = require_vec(cfg.estimator.direction, arch.input_width, "direction");
    const EstimatorBlock& e = cfg.estimator;

    const auto traj =
        est::cosine_trajectory(arch, {c, e.seed}, x, u, static_cast<int>(e.n_samples), e.seed);

    report::CsvFile csv;
    csv.comments = provenance_comments(cfg, e.seed);
    csv.header = {"layer", "mean_abs_cos", "stderr"};
    bool pass = true;
    json data;
    for (std::size_t l = 0; l < traj.mean_abs_cos.size(); ++l) {
        csv.rows.push_back({std::to_string(l), format_double(traj.mean_abs_cos[l]),
                            format_double(traj.stderr_abs_cos[l])});
        data["mean_abs_cos"].push_back(traj.mean_abs_cos[l]);
        data["stderr"].push_back(traj.stderr_abs_cos[l]);
        if (traj.mean_abs_cos[l] < 0.0 || traj.mean_abs_cos[l] > 1.0 + 1e-12) pass = false;
    }
    data["n_inits"] = traj.n_inits;
    data["pass"] = pass;

    report::write_csv(cfg.io.out_csv, csv);
    write_summary(cfg, e.seed, data);
    if (!traj.mean_abs_cos.empty())
        std::cout << "final-layer mean |cos| = " << format_double(traj.mean_abs_cos.back())
                  << " over " << traj.n_inits << " inits\n";
    print_pass_line(pass);
    return pass ? 0 : 1;
}

// ---- verify-actlen ---------------------------------------------------------

int cmd_verify_actlen(const ExperimentConfig& cfg) {
    const net::Architecture& arch = require_arch(cfg, true);
    const double c = resolve_c(cfg.c_kind, cfg.c, arch);
    const auto x = require_vec(cfg.estimator.input, arch.input_width, "input");
    const EstimatorBlock& e = cfg.estimator;
    int layer = e.layer;
    if (layer < 0) layer = arch.hidden_count();
    if (layer < 1 || layer > arch.hidden_count())
        throw ConfigError("config error: estimator.layer must name a hidden layer");
    const int t_max = std::max(2, e.t_max);

    const auto mc = est::mc_activation_length(arch, {c, e.seed}, x, layer, t_max, e.n_samples,
                                              e.seed);
    const auto stats = theory::activation_length_stats(arch, c, x, layer, 2);

    const bool mean_ok = std::abs(mc.mean - stats.exact_mean) <= 3.0 * mc.stderr_mean;
    const bool second_ok = !stats.moment_upper || mc.higher.at(2) <= *stats.moment_upper;
    const bool pass = mean_ok && second_ok;

    report::CsvFile csv;
    csv.comments = provenance_comments(cfg, e.seed);
    csv.header = {"quantity", "value"};
    csv.rows = {{"layer", std::to_string(layer)},
                {"mc_mean", format_double(mc.mean)},
                {"mc_stderr", format_double(mc.stderr_mean)},
                {"exact_mean", format_double(stats.exact_mean)},
                {"mc_second_moment", format_double(mc.higher.at(2))},
                {"variance_upper", format_double(stats.variance_upper)},
                {"n_samples", std::to_string(mc.n)},
                {"pass", pass ? "1" : "0"}};
    json data{{"layer", layer},
              {"mc_mean", mc.mean},
              {"mc_stderr", mc.stderr_mean},
              {"exact_mean", stats.exact_mean},
              {"mc_second_moment", mc.higher.at(2)},
              {"variance_upper", stats.variance_upper},
              {"mean_ok", mean_ok},
              {"second_moment_ok", second_ok},
              {"pass", pass}};
    if (stats.moment_upper) data["second_moment_upper"] = *stats.moment_upper;

    report::write_csv(cfg.io.out_csv, csv);
    write_summary(cfg, e.seed, data);
    std::cout << "layer " << layer << ": MC mean " << format_double(mc.mean) << " vs exact "
              << format_double(stats.exact_mean) << " (stderr " << format_double(mc.stderr_mean)
              << ")\n";
    print_pass_line(pass);
    return pass ? 0 : 1;
}

// ---- curve -----------------------------------------------------------------

int cmd_curve(const ExperimentConfig& cfg) {
    const net::Architecture& arch = require_arch(cfg, true);
    const double c = resolve_c(cfg.c_kind, cfg.c, arch);
    const auto a = require_vec(cfg.estimator.segment_a, arch.input_width, "segment_a");
    const auto b = require_vec(cfg.estimator.segment_b, arch.input_width, "segment_b");
    const EstimatorBlock& e = cfg.estimator;
    if (e.curve_points < 2) throw ConfigError("config error: curve_points must be >= 2");

    std::vector<std::vector<double>> curve(static_cast<std::size_t>(e.curve_points));
    for (int i = 0; i < e.curve_points; ++i) {
        const double t = static_cast<double>(i) / (e.curve_points - 1);
        curve[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(arch.input_width));
        for (int j = 0; j < arch.input_width; ++j)
            curve[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                a[static_cast<std::size_t>(j)] +
                t * (b[static_cast<std::size_t>(j)] - a[static_cast<std::size_t>(j)]);
    }

    const auto mc = est::mc_curve_length(arch, {c, e.seed}, curve, e.n_samples, e.seed);
    const auto bounds = theory::curve_length_bounds(arch, c, 1);
    const auto var_bound = theory::curve_length_variance_bound(arch, c);
    const bool pass = mc.mean <= *bounds.upper + 3.0 * mc.stderr_mean;

    report::CsvFile csv;
    csv.comments = provenance_comments(cfg, e.seed);
    csv.header = {"quantity", "value"};
    csv.rows = {{"mc_mean_length", format_double(mc.mean)},
                {"mc_stderr", format_double(mc.stderr_mean)},
                {"mc_variance", format_double(mc.variance)},
                {"mean_upper", format_double(*bounds.upper)},
                {"variance_upper", format_double(*var_bound.upper)},
                {"n_inits", std::to_string(mc.n)},
                {"pass", pass ? "1" : "0"}};
    json data{{"mc_mean_length", mc.mean},         {"mc_stderr", mc.stderr_mean},
              {"mc_variance", mc.variance},        {"mean_upper", *bounds.upper},
              {"variance_upper", *var_bound.upper}, {"n_inits", mc.n},
              {"pass", pass}};

    report::write_csv(cfg.io.out_csv, csv);
    write_summary(cfg, e.seed, data);
    std::cout << "mean image length " << format_double(mc.mean) << " vs upper bound "
              << format_double(*bounds.upper) << "\n";
    print_pass_line(pass);
    return pass ? 0 : 1;
}

// ---- regions ---------------------------------------------------------------

int cmd_regions(const ExperimentConfig& cfg) {
    const net::Architecture& arch = require_arch(cfg, false);
    const double c = resolve_c(cfg.c_kind, cfg.c, arch);
    const auto a = require_vec(cfg.estimator.segment_a, arch.input_width, "segment_a");
    const auto b = require_vec(cfg.estimator.segment_b, arch.input_width, "segment_b");
    const EstimatorBlock& e = cfg.estimator;
    if (e.n_nets < 1) throw ConfigError("config error: n_nets must be >= 1");

    // one-hidden-layer nets admit a hard per-unit kink budget
    std::int64_t hard_cap = -1;
    if (arch.hidden_count() == 1) {
        const std::int64_t kinks = arch.activation == net::Activation::maxout
                                       ? static_cast<std::int64_t>(arch.hidden_widths[0]) *
                                             (arch.maxout_rank - 1)
                                       : static_cast<std::int64_t>(arch.hidden_widths[0]);
        hard_cap = kinks + 1;
    }

    report::CsvFile csv;
    csv.comments = provenance_comments(cfg, e.seed);
    csv.header = {"net_index", "region_count", "breakpoints"};
    json counts = json::array();
    bool pass = true;
    std::int64_t max_count = 0;
    for (int i = 0; i < e.n_nets; ++i) {
        rng::Stream stream(e.seed, static_cast<std::uint64_t>(i));
        const net::ParamSet p = net::init_params_stream(arch, c, stream);
        const auto rc = est::count_regions_1d(p, a, b, e.resolution, e.refine_tol);
        csv.rows.push_back({std::to_string(i), std::to_string(rc.region_count),
                            std::to_string(rc.breakpoints.size())});
        counts.push_back(rc.region_count);
        max_count = std::max(max_count, rc.region_count);
        if (hard_cap >= 0 && rc.region_count > hard_cap) pass = false;
    }
    json data{{"region_counts", counts}, {"max_region_count", max_count}, {"pass", pass}};
    if (hard_cap >= 0) data["one_layer_cap"] = hard_cap;

    report::write_csv(cfg.io.out_csv, csv);
    write_summary(cfg, e.seed, data);
    std::cout << "max region count " << max_count;
    if (hard_cap >= 0) std::cout << " (cap " << hard_cap << ")";
    std::cout << " over " << e.n_nets << " nets\n";
    print_pass_line(pass);
    return pass ? 0 : 1;
}

// ---- ntk -------------------------------------------------------------------

int cmd_ntk(const ExperimentConfig& cfg) {
    const net::Architecture& arch = require_arch(cfg, true);
    const double c = resolve_c(cfg.c_kind, cfg.c, arch);
    const auto x = require_vec(cfg.estimator.input, arch.input_width, "input");
    const EstimatorBlock& e = cfg.estimator;
    if (arch.output_width != 1)
        throw ConfigError("config error: the ntk subcommand needs output_width 1");
    if (arch.bias_mode != net::BiasMode::zero)
        throw ConfigError("config error: the ntk subcommand needs bias_mode \"zero\"");

    const auto mc = est::mc_ntk_diag(arch, {c, e.seed}, x, e.n_samples, e.seed);
    const auto bounds = theory::ntk_bounds(arch, c, x);
    const bool mean_ok = mc.mean >= bounds.mean_lower - 3.0 * mc.stderr_mean &&
                         mc.mean <= bounds.mean_upper + 3.0 * mc.stderr_mean;
    const bool second_ok = mc.higher.at(2) <= bounds.second_moment_upper;
    const bool pass = mean_ok && second_ok;

    report::CsvFile csv;
    csv.comments = provenance_comments(cfg, e.seed);
    csv.header = {"quantity", "value"};
    csv.rows = {{"mc_mean", format_double(mc.mean)},
                {"mc_stderr", format_double(mc.stderr_mean)},
                {"mc_second_moment", format_double(mc.higher.at(2))},
                {"mean_lower", format_double(bounds.mean_lower)},
                {"mean_upper", format_double(bounds.mean_upper)},
                {"second_moment_upper", format_double(bounds.second_moment_upper)},
                {"n_samples", std::to_string(mc.n)},
                {"pass", pass ? "1" : "0"}};
    json data{{"mc_mean", mc.mean},
              {"mc_stderr", mc.stderr_mean},
              {"mc_second_moment", mc.higher.at(2)},
              {"mean_lower", bounds.mean_lower},
              {"mean_upper", bounds.mean_upper},
              {"second_moment_upper", bounds.second_moment_upper},
              {"parameter_count", bounds.p_w},
              {"mean_ok", mean_ok},
              {"second_moment_ok", second_ok},
              {"pass", pass}};

    report::write_csv(cfg.io.out_csv, csv);
    write_summary(cfg, e.seed, data);
    std::cout << "MC mean " << format_double(mc.mean) << " vs bracket ["
              << format_double(bounds.mean_lower) << ", " << format_double(bounds.mean_upper)
              << "]; second moment " << format_double(mc.higher.at(2)) << " vs "
              << format_double(bounds.second_moment_upper) << "\n";
    print_pass_line(pass);
    return pass ? 0 : 1;
}

// ---- train / compare -------------------------------------------------------

train::Dataset build_dataset(const ExperimentConfig& cfg) {
    if (!cfg.io.dataset.empty()) {
        try {
            return train::load_csv_dataset(cfg.io.dataset);
        } catch (const std::runtime_error& err) {
            throw ConfigError(std::string("config error: ") + err.what());
        }
    }
    if (cfg.training.synthetic) {
        const SyntheticSpec& s = *cfg.training.synthetic;
        if (s.kind == "blobs")
            return train::make_blobs(s.per_class, s.class_count, s.feature_count, s.center_scale,
                                     s.noise, s.seed);
        return train::make_spirals(s.per_class, s.noise, s.seed);
    }
    throw ConfigError("config error: train/compare need io.dataset or training.synthetic");
}

train::TrainConfig make_train_config(const TrainingBlock& t) {
    train::TrainConfig cfg;
    if (t.optimizer == "sgd")
        cfg.optimizer = train::Optimizer::sgd;
    else if (t.optimizer == "adam")
        cfg.optimizer = train::Optimizer::adam;
    else
        cfg.optimizer = train::Optimizer::nesterov;
    cfg.learning_rate = t.learning_rate;
    cfg.momentum = t.momentum;
    cfg.adam_beta1 = t.adam_beta1;
    cfg.adam_beta2 = t.adam_beta2;
    cfg.adam_epsilon = t.adam_epsilon;
    cfg.epochs = t.epochs;
    cfg.batch_size = t.batch_size;
    cfg.lr_halving_period_epochs = t.lr_halving_period_epochs;
    cfg.check_gradients = true;
    return cfg;
}

train::DataSplit build_split(const ExperimentConfig& cfg, const train::Dataset& data) {
    try {
        train::DataSplit split = train::stratified_split(
            data, cfg.training.train_frac, cfg.training.val_frac,
            rng::derive_stream(cfg.training.seed, 0x5Eul));
        train::standardize(split);
        return split;
    } catch (const std::invalid_argument& err) {
        throw ConfigError(std::string("config error: ") + err.what());
    }
}

int cmd_train(const ExperimentConfig& cfg) {
    const net::Architecture& arch = require_arch(cfg, false);
    const double c = resolve_c(cfg.c_kind, cfg.c, arch);
    const train::Dataset data = build_dataset(cfg);
    if (arch.output_width < data.class_count)
        throw ConfigError("config error: architecture output_width is smaller than the number of classes");
    const train::DataSplit split = build_split(cfg, data);

    rng::Stream init_stream(cfg.training.seed, 1);
    net::ParamSet params = net::init_params_stream(arch, c, init_stream);
    train::TrainConfig tc = make_train_config(cfg.training);
    tc.shuffle_seed = rng::derive_stream(cfg.training.seed, 2);
    const train::TrainResult res = train::train(params, split, tc);

    report::CsvFile csv;
    csv.comments = provenance_comments(cfg, cfg.training.seed);
    csv.header = {"epoch", "train_loss", "train_accuracy", "val_accuracy"};
    for (int ep = 0; ep < res.epochs_run; ++ep)
        csv.rows.push_back({std::to_string(ep + 1),
                            format_double(res.train_loss[static_cast<std::size_t>(ep)]),
                            format_double(res.train_accuracy[static_cast<std::size_t>(ep)]),
                            format_double(res.val_accuracy[static_cast<std::size_t>(ep)])});

    json data_json{{"final_train_accuracy", res.final_train_accuracy},
                   {"final_val_accuracy", res.final_val_accuracy},
                   {"final_test_accuracy", res.final_test_accuracy},
                   {"diverged", res.diverged},
                   {"epochs_run", res.epochs_run},
                   {"train_loss", res.train_loss},
                   {"train_accuracy", res.train_accuracy},
                   {"val_accuracy", res.val_accuracy},
                   {"split_sizes",
                    {{"train", split.train.size()}, {"val", split.val.size()}, {"test", split.test.size()}}}};

    report::write_csv(cfg.io.out_csv, csv);
    json out;
    out["meta"] = meta_json(cfg, cfg.training.seed);
    out["meta"]["wall_time_seconds"] = res.wall_time_seconds;
    out["data"] = std::move(data_json);
    report::write_text_atomic(cfg.io.out_json, out.dump(2) + "\n");

    std::cout << "test accuracy " << format_double(res.final_test_accuracy) << " after "
              << res.epochs_run << " epochs" << (res.diverged ? " (diverged)" : "") << "\n";
    return 0;
}

int cmd_compare(const ExperimentConfig& cfg) {
    const net::Architecture& base_arch = require_arch(cfg, false);
    if (cfg.training.schemes.size() < 2)
        throw ConfigError("config error: compare needs at least two training.schemes entries");
    const train::Dataset data = build_dataset(cfg);
    if (base_arch.output_width < data.class_count)
        throw ConfigError("config error: architecture output_width is smaller than the number of classes");
    const train::DataSplit split = build_split(cfg, data);

    std::vector<train::SchemeSpec> schemes;
    for (const SchemeEntry& entry : cfg.training.schemes) {
        train::SchemeSpec spec;
        spec.name = entry.name;
        spec.arch = base_arch;
        spec.arch.activation =
            entry.activation == "relu" ? net::Activation::relu : net::Activation::maxout;
        spec.c = resolve_c(entry.c_kind, entry.c, spec.arch);
        spec.learning_rate = entry.learning_rate;
        schemes.push_back(std::move(spec));
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = train::compare_inits(split, schemes, make_train_config(cfg.training),
                                           cfg.training.n_runs, cfg.training.seed);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    report::CsvFile csv;
    csv.comments = provenance_comments(cfg, cfg.training.seed);
    csv.header = {"scheme", "c", "mean_acc", "std_acc", "n_runs"};
    json jrows = json::array();
    report::Table table(csv.header);
    for (const auto& row : rows) {
        csv.rows.push_back({row.scheme, format_double(row.c), format_double(row.mean_accuracy),
                            format_double(row.std_accuracy), std::to_string(row.n_runs)});
        table.add_row(csv.rows.back());
        jrows.push_back({{"scheme", row.scheme},
                         {"c", row.c},
                         {"mean_acc", row.mean_accuracy},
                         {"std_acc", row.std_accuracy},
                         {"n_runs", row.n_runs},
                         {"n_diverged", row.n_diverged}});
    }

    report::write_csv(cfg.io.out_csv, csv);
    json out;
    out["meta"] = meta_json(cfg, cfg.training.seed);
    out["meta"]["wall_time_seconds"] = wall;
    out["data"] = json{{"rows", jrows}};
    report::write_text_atomic(cfg.io.out_json, out.dump(2) + "\n");
    std::cout << table.to_string();
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"maxout-network numerics laboratory"};
    app.require_subcommand(1);

    struct Common {
        std::string config_path;
        std::string out_path;
        std::string data_path;
        std::optional<std::uint64_t> seed;
    };
    std::map<std::string, Common> common;
    auto add_common = [&](CLI::App* sub, bool with_data) {
        Common& c = common[sub->get_name()];
        sub->add_option("--config", c.config_path, "experiment config (JSON)");
        sub->add_option("--out", c.out_path, "primary output path");
        sub->add_option("--seed", c.seed, "master seed override");
        if (with_data) sub->add_option("--data", c.data_path, "dataset CSV path");
    };

    int k_min = 2, k_max = 10;
    CLI::App* constants = app.add_subcommand(
        "constants", "order-statistic means and the variance-stabilizing constant per rank");
    constants->add_option("--k-min", k_min, "smallest rank");
    constants->add_option("--k-max", k_max, "largest rank");
    add_common(constants, false);

    const std::pair<const char*, const char*> estimator_subs[] = {
        {"bounds", "closed-form moment bounds for a given architecture"},
        {"verify-jacobian", "Monte-Carlo squared directional derivative vs its bounds"},
        {"verify-order", "stochastic ordering of the squared derivative between order-stat products"},
        {"verify-eqdist", "equality in distribution against the factorized chi-square form"},
        {"cosine", "per-layer cosine between a propagated input pair"},
        {"verify-actlen", "activation-length moments per layer vs their bounds"},
        {"curve", "expected output curve length along a circle vs its bounds"},
        {"regions", "linear-region counts of width-n rank-K nets on a line segment"},
        {"ntk", "on-diagonal kernel moments at init vs the closed-form bracket"},
    };
    for (const auto& [name, help] : estimator_subs) add_common(app.add_subcommand(name, help), false);
    add_common(app.add_subcommand("train", "train one network on a dataset"), true);
    add_common(app.add_subcommand("compare", "compare initialization schemes"), true);

    std::vector<std::string> argv_like = args;
    argv_like.insert(argv_like.begin(), "maxgrad");
    std::vector<const char*> argv;
    argv.reserve(argv_like.size());
    for (const std::string& a : argv_like) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    const Common& c = common[name];

    try {
        const ExperimentConfig cfg =
            load_config(c.config_path, name, c.seed, c.out_path, c.data_path);
        if (name == "constants") return cmd_constants(cfg, k_min, k_max);
        if (name == "bounds") return cmd_bounds(cfg);
        if (name == "verify-jacobian") return cmd_verify_jacobian(cfg);
        if (name == "verify-order") return cmd_verify_order(cfg);
        if (name == "verify-eqdist") return cmd_verify_eqdist(cfg);
        if (name == "cosine") return cmd_cosine(cfg);
        if (name == "verify-actlen") return cmd_verify_actlen(cfg);
        if (name == "curve") return cmd_curve(cfg);
        if (name == "regions") return cmd_regions(cfg);
        if (name == "ntk") return cmd_ntk(cfg);
        if (name == "train") return cmd_train(cfg);
        if (name == "compare") return cmd_compare(cfg);
        std::cerr << "unknown subcommand: " << name << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace maxgrad::cli
