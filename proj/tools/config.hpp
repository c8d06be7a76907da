#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "maxgrad/network.hpp"

namespace maxgrad::cli {

// Any problem with the experiment configuration (unreadable file, malformed
// JSON, schema violation, missing dataset). Maps to process exit code 2.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct EstimatorBlock {
    std::int64_t n_samples = 10000;
    int t_max = 1;
    double alpha = 0.01;
    std::uint64_t seed = 0;
    std::vector<double> input;
    std::vector<double> direction;
    int layer = -1;  // -1 selects the last hidden layer
    int grid_points = 100;
    int resolution = 10000;
    double refine_tol = 1e-10;
    std::vector<double> segment_a;
    std::vector<double> segment_b;
    int curve_points = 101;
    int n_nets = 50;
};

// One named initialization in a comparison table. c_kind "auto" resolves to
// the variance-stabilizing constant for the architecture's rank, "he" to 2.
struct SchemeEntry {
    std::string name;
    std::string activation = "maxout";
    std::string c_kind = "value";  // value | auto | he
    double c = 1.0;
    double learning_rate = 0.01;
};

struct SyntheticSpec {
    std::string kind;  // blobs | spirals
    int per_class = 100;
    int class_count = 3;
    int feature_count = 2;
    double center_scale = 3.0;
    double noise = 1.0;
    std::uint64_t seed = 0;
};

struct TrainingBlock {
    std::string optimizer = "nesterov";
    double learning_rate = 0.01;
    double momentum = 0.9;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int epochs = 40;
    int batch_size = 32;
    int lr_halving_period_epochs = 0;
    std::uint64_t seed = 0;
    int n_runs = 4;
    double train_frac = 0.6;
    double val_frac = 0.2;
    std::vector<SchemeEntry> schemes;
    std::optional<SyntheticSpec> synthetic;
};

struct IoBlock {
    std::string out_csv;
    std::string out_json;
    std::string dataset;
};

struct ExperimentConfig {
    std::string subcommand;
    std::optional<net::Architecture> architecture;
    std::string c_kind = "value";  // scheme block: value | auto | he
    double c = 1.0;
    EstimatorBlock estimator;
    TrainingBlock training;
    IoBlock io;
    // canonical serialized form of the merged config and its fingerprint;
    // stamped into every output file
    std::string canonical_json;
    std::uint64_t config_hash = 0;
};

// Parses and validates a config against the subcommand's schema. Unknown keys
// at any level are rejected. Overrides (from command-line flags) are merged
// before hashing so the fingerprint reflects the effective configuration.
ExperimentConfig parse_config_text(const std::string& text, const std::string& subcommand,
                                   const std::optional<std::uint64_t>& seed_override,
                                   const std::string& out_override,
                                   const std::string& data_override);

// Reads the file then delegates to parse_config_text. A missing or unreadable
// file is a ConfigError. An empty path yields an all-defaults config (only
// valid for subcommands with no required blocks).
ExperimentConfig load_config(const std::string& path, const std::string& subcommand,
                             const std::optional<std::uint64_t>& seed_override,
                             const std::string& out_override, const std::string& data_override);

// Resolves "auto"/"he" to concrete variance constants for this architecture.
double resolve_c(const std::string& c_kind, double c, const net::Architecture& arch);

}  // namespace maxgrad::cli
