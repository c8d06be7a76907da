#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "maxgrad/order_stats.hpp"
#include "maxgrad/report.hpp"

namespace maxgrad::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config error: " + msg); }

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) fail("unknown key \"" + it.key() + "\" in " + where);
}

double get_number(const json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) fail("\"" + key + "\" must be a number");
    return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer()) fail("\"" + key + "\" must be an integer");
    return obj[key].get<int>();
}

std::int64_t get_int64(const json& obj, const std::string& key, std::int64_t fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer()) fail("\"" + key + "\" must be an integer");
    return obj[key].get<std::int64_t>();
}

std::uint64_t get_seed(const json& obj, const std::string& key, std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer() && !obj[key].is_number_unsigned())
        fail("\"" + key + "\" must be a non-negative integer");
    if (obj[key].is_number_integer() && obj[key].get<std::int64_t>() < 0 &&
        !obj[key].is_number_unsigned())
        fail("\"" + key + "\" must be a non-negative integer");
    return obj[key].get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string()) fail("\"" + key + "\" must be a string");
    return obj[key].get<std::string>();
}

std::vector<double> get_vector(const json& obj, const std::string& key) {
    std::vector<double> out;
    if (!obj.contains(key)) return out;
    if (!obj[key].is_array()) fail("\"" + key + "\" must be an array of numbers");
    for (const auto& v : obj[key]) {
        if (!v.is_number()) fail("\"" + key + "\" must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

net::Activation parse_activation(const std::string& s) {
    if (s == "maxout") return net::Activation::maxout;
    if (s == "relu") return net::Activation::relu;
    fail("activation must be \"maxout\" or \"relu\", got \"" + s + "\"");
}

net::Architecture parse_architecture(const json& obj) {
    reject_unknown(obj, "architecture", {"input_width", "hidden_widths", "output_width",
                                         "maxout_rank", "activation", "bias_mode"});
    net::Architecture arch;
    if (!obj.contains("input_width") || !obj.contains("output_width"))
        fail("architecture needs input_width and output_width");
    arch.input_width = get_int(obj, "input_width", 0);
    arch.output_width = get_int(obj, "output_width", 0);
    if (obj.contains("hidden_widths")) {
        if (!obj["hidden_widths"].is_array()) fail("hidden_widths must be an array of integers");
        for (const auto& w : obj["hidden_widths"]) {
            if (!w.is_number_integer()) fail("hidden_widths must be an array of integers");
            arch.hidden_widths.push_back(w.get<int>());
        }
    }
    arch.maxout_rank = get_int(obj, "maxout_rank", 2);
    arch.activation = parse_activation(get_string(obj, "activation", "maxout"));
    const std::string bias = get_string(obj, "bias_mode", "gaussian");
    if (bias == "gaussian")
        arch.bias_mode = net::BiasMode::gaussian;
    else if (bias == "zero")
        arch.bias_mode = net::BiasMode::zero;
    else
        fail("bias_mode must be \"gaussian\" or \"zero\", got \"" + bias + "\"");
    try {
        arch.validate();
    } catch (const std::invalid_argument& e) {
        fail(std::string("invalid architecture: ") + e.what());
    }
    return arch;
}

// scheme c may be a number, "auto" (variance-stabilizing for the rank) or
// "he" (the ReLU baseline constant 2)
void parse_c(const json& obj, const std::string& key, std::string& kind, double& value) {
    if (!obj.contains(key)) return;
    const json& v = obj[key];
    if (v.is_number()) {
        kind = "value";
        value = v.get<double>();
        if (!(value > 0.0)) fail("\"" + key + "\" must be positive");
    } else if (v.is_string() && (v.get<std::string>() == "auto" || v.get<std::string>() == "he")) {
        kind = v.get<std::string>();
    } else {
        fail("\"" + key + "\" must be a positive number, \"auto\", or \"he\"");
    }
}

EstimatorBlock parse_estimator(const json& obj) {
    reject_unknown(obj, "estimator",
                   {"n_samples", "t_max", "alpha", "seed", "input", "direction", "layer",
                    "grid_points", "resolution", "refine_tol", "segment_a", "segment_b",
                    "curve_points", "n_nets"});
    EstimatorBlock e;
    e.n_samples = get_int64(obj, "n_samples", e.n_samples);
    e.t_max = get_int(obj, "t_max", e.t_max);
    e.alpha = get_number(obj, "alpha", e.alpha);
    e.seed = get_seed(obj, "seed", e.seed);
    e.input = get_vector(obj, "input");
    e.direction = get_vector(obj, "direction");
    e.layer = get_int(obj, "layer", e.layer);
    e.grid_points = get_int(obj, "grid_points", e.grid_points);
    e.resolution = get_int(obj, "resolution", e.resolution);
    e.refine_tol = get_number(obj, "refine_tol", e.refine_tol);
    e.segment_a = get_vector(obj, "segment_a");
    e.segment_b = get_vector(obj, "segment_b");
    e.curve_points = get_int(obj, "curve_points", e.curve_points);
    e.n_nets = get_int(obj, "n_nets", e.n_nets);
    return e;
}

SyntheticSpec parse_synthetic(const json& obj) {
    reject_unknown(obj, "training.synthetic",
                   {"kind", "per_class", "class_count", "feature_count", "center_scale", "noise",
                    "seed"});
    SyntheticSpec s;
    s.kind = get_string(obj, "kind", "");
    if (s.kind != "blobs" && s.kind != "spirals")
        fail("synthetic kind must be \"blobs\" or \"spirals\"");
    s.per_class = get_int(obj, "per_class", s.per_class);
    s.class_count = get_int(obj, "class_count", s.class_count);
    s.feature_count = get_int(obj, "feature_count", s.feature_count);
    s.center_scale = get_number(obj, "center_scale", s.center_scale);
    s.noise = get_number(obj, "noise", s.noise);
    s.seed = get_seed(obj, "seed", s.seed);
    return s;
}

TrainingBlock parse_training(const json& obj) {
    reject_unknown(obj, "training",
                   {"optimizer", "learning_rate", "momentum", "adam_beta1", "adam_beta2",
                    "adam_epsilon", "epochs", "batch_size", "lr_halving_period_epochs", "seed",
                    "n_runs", "train_frac", "val_frac", "schemes", "synthetic"});
    TrainingBlock t;
    t.optimizer = get_string(obj, "optimizer", t.optimizer);
    if (t.optimizer != "sgd" && t.optimizer != "nesterov" && t.optimizer != "adam")
        fail("optimizer must be \"sgd\", \"nesterov\", or \"adam\"");
    t.learning_rate = get_number(obj, "learning_rate", t.learning_rate);
    t.momentum = get_number(obj, "momentum", t.momentum);
    t.adam_beta1 = get_number(obj, "adam_beta1", t.adam_beta1);
    t.adam_beta2 = get_number(obj, "adam_beta2", t.adam_beta2);
    t.adam_epsilon = get_number(obj, "adam_epsilon", t.adam_epsilon);
    t.epochs = get_int(obj, "epochs", t.epochs);
    t.batch_size = get_int(obj, "batch_size", t.batch_size);
    t.lr_halving_period_epochs = get_int(obj, "lr_halving_period_epochs", t.lr_halving_period_epochs);
    t.seed = get_seed(obj, "seed", t.seed);
    t.n_runs = get_int(obj, "n_runs", t.n_runs);
    t.train_frac = get_number(obj, "train_frac", t.train_frac);
    t.val_frac = get_number(obj, "val_frac", t.val_frac);
    if (obj.contains("schemes")) {
        if (!obj["schemes"].is_array()) fail("training.schemes must be an array");
        for (const auto& s : obj["schemes"]) {
            if (!s.is_object()) fail("training.schemes entries must be objects");
            reject_unknown(s, "training.schemes entry",
                           {"name", "activation", "c", "learning_rate"});
            SchemeEntry entry;
            entry.name = get_string(s, "name", "");
            if (entry.name.empty()) fail("every training scheme needs a name");
            entry.activation = get_string(s, "activation", entry.activation);
            parse_activation(entry.activation);  // validation only
            parse_c(s, "c", entry.c_kind, entry.c);
            entry.learning_rate = get_number(s, "learning_rate", t.learning_rate);
            t.schemes.push_back(std::move(entry));
        }
    }
    if (obj.contains("synthetic")) {
        if (!obj["synthetic"].is_object()) fail("training.synthetic must be an object");
        t.synthetic = parse_synthetic(obj["synthetic"]);
    }
    return t;
}

IoBlock parse_io(const json& obj) {
    reject_unknown(obj, "io", {"out_csv", "out_json", "dataset"});
    IoBlock io;
    io.out_csv = get_string(obj, "out_csv", "");
    io.out_json = get_string(obj, "out_json", "");
    io.dataset = get_string(obj, "dataset", "");
    return io;
}

// top-level blocks each subcommand accepts
std::set<std::string> allowed_blocks(const std::string& subcommand) {
    if (subcommand == "constants") return {"subcommand", "io"};
    if (subcommand == "train" || subcommand == "compare")
        return {"subcommand", "architecture", "scheme", "training", "io"};
    // bounds and the estimator-driven subcommands
    return {"subcommand", "architecture", "scheme", "estimator", "io"};
}

void derive_sibling_paths(IoBlock& io, const std::string& subcommand) {
    auto swap_ext = [](const std::string& path, const std::string& ext) {
        const std::size_t slash = path.find_last_of('/');
        const std::size_t dot = path.find_last_of('.');
        if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
            return path + ext;
        return path.substr(0, dot) + ext;
    };
    if (io.out_csv.empty() && io.out_json.empty()) {
        io.out_csv = "maxgrad-" + subcommand + ".csv";
        io.out_json = "maxgrad-" + subcommand + ".json";
    } else if (io.out_csv.empty()) {
        io.out_csv = swap_ext(io.out_json, ".csv");
    } else if (io.out_json.empty()) {
        io.out_json = swap_ext(io.out_csv, ".json");
    }
    if (io.out_csv == io.out_json) fail("out_csv and out_json must differ");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& subcommand,
                                   const std::optional<std::uint64_t>& seed_override,
                                   const std::string& out_override,
                                   const std::string& data_override) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string("malformed JSON: ") + e.what());
    }
    if (!root.is_object()) fail("top level must be a JSON object");

    // merge flag overrides before hashing so the fingerprint is effective
    if (seed_override) {
        if (subcommand == "train" || subcommand == "compare") {
            if (!root.contains("training")) root["training"] = json::object();
            root["training"]["seed"] = *seed_override;
        } else {
            if (!root.contains("estimator")) root["estimator"] = json::object();
            root["estimator"]["seed"] = *seed_override;
        }
    }
    if (!out_override.empty() || !data_override.empty()) {
        if (!root.contains("io")) root["io"] = json::object();
        if (!out_override.empty()) {
            const bool csv_primary = subcommand == "constants" || subcommand == "bounds" ||
                                     subcommand == "cosine" || subcommand == "compare";
            root["io"][csv_primary ? "out_csv" : "out_json"] = out_override;
        }
        if (!data_override.empty()) root["io"]["dataset"] = data_override;
    }

    reject_unknown(root, "config", allowed_blocks(subcommand));

    ExperimentConfig cfg;
    cfg.subcommand = subcommand;
    if (root.contains("subcommand")) {
        const std::string declared = get_string(root, "subcommand", "");
        if (declared != subcommand)
            fail("config declares subcommand \"" + declared + "\" but \"" + subcommand +
                 "\" was invoked");
    }
    if (root.contains("architecture")) {
        if (!root["architecture"].is_object()) fail("architecture must be an object");
        cfg.architecture = parse_architecture(root["architecture"]);
    }
    if (root.contains("scheme")) {
        if (!root["scheme"].is_object()) fail("scheme must be an object");
        reject_unknown(root["scheme"], "scheme", {"c"});
        parse_c(root["scheme"], "c", cfg.c_kind, cfg.c);
    }
    if (root.contains("estimator")) {
        if (!root["estimator"].is_object()) fail("estimator must be an object");
        cfg.estimator = parse_estimator(root["estimator"]);
    }
    if (root.contains("training")) {
        if (!root["training"].is_object()) fail("training must be an object");
        cfg.training = parse_training(root["training"]);
    }
    if (root.contains("io")) {
        if (!root["io"].is_object()) fail("io must be an object");
        cfg.io = parse_io(root["io"]);
    }
    derive_sibling_paths(cfg.io, subcommand);

    cfg.canonical_json = root.dump();  // nlohmann objects iterate in key order
    cfg.config_hash = report::fnv1a64(cfg.canonical_json);
    return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::string& subcommand,
                             const std::optional<std::uint64_t>& seed_override,
                             const std::string& out_override, const std::string& data_override) {
    std::string text = "{}";
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) fail("cannot read config file: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }
    ExperimentConfig cfg =
        parse_config_text(text, subcommand, seed_override, out_override, data_override);
    if (cfg.io.out_csv == path || cfg.io.out_json == path)
        fail("refusing to overwrite the config file with an output");
    return cfg;
}

double resolve_c(const std::string& c_kind, double c, const net::Architecture& arch) {
    if (c_kind == "auto") {
        if (arch.activation == net::Activation::relu) return 2.0;
        return order_stats::recommended_c(arch.maxout_rank);
    }
    if (c_kind == "he") return 2.0;
    return c;
}

}  // namespace maxgrad::cli
