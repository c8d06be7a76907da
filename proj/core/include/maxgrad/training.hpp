#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "maxgrad/network.hpp"
#include "maxgrad/rng.hpp"

namespace maxgrad::train {

// Row-major feature matrix plus integer class labels.
struct Dataset {
    int feature_count = 0;
    int class_count = 0;
    std::vector<std::vector<double>> x;
    std::vector<int> y;

    std::int64_t size() const { return static_cast<std::int64_t>(x.size()); }
};

struct DataSplit {
    Dataset train;
    Dataset val;
    Dataset test;
};

// Class-stratified split with the given fractions (test gets the remainder).
// Shuffle order is seed-determined. Throws if any split ends up empty.
DataSplit stratified_split(const Dataset& data, double train_frac, double val_frac,
                           std::uint64_t seed);

// Per-feature standardization. Statistics always come from the train split and
// are applied to all three. Zero-variance features are left centered only.
void standardize(DataSplit& split);

Dataset load_csv_dataset(const std::string& path);

// Synthetic datasets for init-comparison experiments.
Dataset make_blobs(int per_class, int class_count, int feature_count, double center_scale,
                   double noise, std::uint64_t seed);
Dataset make_spirals(int per_class, double noise, std::uint64_t seed);

enum class Optimizer { sgd, nesterov, adam };

struct TrainConfig {
    Optimizer optimizer = Optimizer::nesterov;
    double learning_rate = 0.01;
    double momentum = 0.9;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int epochs = 40;
    int batch_size = 32;
    int lr_halving_period_epochs = 0;  // 0 disables the schedule
    std::uint64_t shuffle_seed = 0;
    bool check_gradients = false;  // finite-difference spot checks, debug aid
};

struct TrainResult {
    std::vector<double> train_loss;  // per epoch, averaged over batches
    std::vector<double> train_accuracy;
    std::vector<double> val_accuracy;
    double final_train_accuracy = 0.0;
    double final_val_accuracy = 0.0;
    double final_test_accuracy = 0.0;
    bool diverged = false;
    int epochs_run = 0;
    double wall_time_seconds = 0.0;
    TrainConfig config;
};

// Mean cross-entropy of softmax(logits) against labels.
double softmax_cross_entropy(const std::vector<double>& logits, int label,
                             std::vector<double>* grad);

double evaluate_accuracy(const net::ParamSet& params, const Dataset& data);
double evaluate_loss(const net::ParamSet& params, const Dataset& data);

// One optimizer step on a flat parameter/gradient view. Exposed separately so
// the update rules can be tested against closed-form sequences.
void sgd_update(std::vector<double>& theta, const std::vector<double>& grad, double lr);
void nesterov_update(std::vector<double>& theta, std::vector<double>& velocity,
                     const std::vector<double>& grad, double lr, double momentum);
void adam_update(std::vector<double>& theta, std::vector<double>& m, std::vector<double>& v,
                 const std::vector<double>& grad, double lr, double beta1, double beta2,
                 double epsilon, std::int64_t step);

// Flat parameter views used by the optimizer. Order is stable: hidden layers
// in depth order (weights then biases), then output weights and bias.
std::vector<double> flatten_params(const net::ParamSet& params);
void unflatten_params(const std::vector<double>& theta, net::ParamSet& params);

// Mini-batch training; params are updated in place.
TrainResult train(net::ParamSet& params, const DataSplit& split, const TrainConfig& config);

// One named initialization scheme in a comparison run.
struct SchemeSpec {
    std::string name;
    net::Architecture arch;
    double c = 1.0;
    double learning_rate = 0.01;
};

struct CompareRow {
    std::string scheme;
    double c = 0.0;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    int n_runs = 0;
    int n_diverged = 0;
};

// Repeats train() n_runs times per scheme with distinct seeds and reports
// test-accuracy statistics. Runs are parallelized across available workers.
std::vector<CompareRow> compare_inits(const DataSplit& split,
                                      const std::vector<SchemeSpec>& schemes,
                                      const TrainConfig& base_config, int n_runs,
                                      std::uint64_t master_seed);

}  // namespace maxgrad::train
