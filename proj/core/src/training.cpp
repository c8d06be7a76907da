#include "maxgrad/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "maxgrad/parallel.hpp"

namespace maxgrad::train {

namespace {

void require_compatible(const net::Architecture& arch, const Dataset& data) {
    if (arch.input_width != data.feature_count)
        throw std::invalid_argument("network input width does not match dataset features");
    if (arch.output_width < data.class_count)
        throw std::invalid_argument("network output width smaller than class count");
}

// Fisher-Yates with our own stream so shuffles reproduce across platforms.
void shuffle_indices(std::vector<std::int64_t>& idx, rng::Stream& stream) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(stream.next_u64() % i);
        std::swap(idx[i - 1], idx[j]);
    }
}

bool all_finite(const std::vector<double>& v) {
    for (double e : v)
        if (!std::isfinite(e)) return false;
    return true;
}

}  // namespace

DataSplit stratified_split(const Dataset& data, double train_frac, double val_frac,
                           std::uint64_t seed) {
    if (!(train_frac > 0.0) || !(val_frac >= 0.0) || train_frac + val_frac >= 1.0)
        throw std::invalid_argument("split fractions must satisfy 0 < train, train+val < 1");
    if (data.size() == 0) throw std::invalid_argument("cannot split an empty dataset");

    std::map<int, std::vector<std::int64_t>> by_class;
    for (std::int64_t i = 0; i < data.size(); ++i) by_class[data.y[static_cast<std::size_t>(i)]].push_back(i);

    rng::Stream stream(seed, 0);
    DataSplit out;
    for (Dataset* d : {&out.train, &out.val, &out.test}) {
        d->feature_count = data.feature_count;
        d->class_count = data.class_count;
    }
    for (auto& [label, idx] : by_class) {
        shuffle_indices(idx, stream);
        const std::int64_t n = static_cast<std::int64_t>(idx.size());
        const std::int64_t n_train = static_cast<std::int64_t>(std::llround(train_frac * static_cast<double>(n)));
        const std::int64_t n_val = static_cast<std::int64_t>(std::llround(val_frac * static_cast<double>(n)));
        for (std::int64_t i = 0; i < n; ++i) {
            Dataset* dst = i < n_train ? &out.train : (i < n_train + n_val ? &out.val : &out.test);
            dst->x.push_back(data.x[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]);
            dst->y.push_back(label);
        }
    }
    if (out.train.size() == 0 || out.test.size() == 0)
        throw std::invalid_argument("split produced an empty train or test set");
    return out;
}

void standardize(DataSplit& split) {
    const int f = split.train.feature_count;
    if (split.train.size() == 0) throw std::invalid_argument("standardize: empty train split");
    std::vector<double> mean(static_cast<std::size_t>(f), 0.0), sd(static_cast<std::size_t>(f), 0.0);
    for (const auto& row : split.train.x)
        for (int j = 0; j < f; ++j) mean[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j)];
    for (double& m : mean) m /= static_cast<double>(split.train.size());
    for (const auto& row : split.train.x)
        for (int j = 0; j < f; ++j) {
            const double d = row[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)];
            sd[static_cast<std::size_t>(j)] += d * d;
        }
    for (double& s : sd) s = std::sqrt(s / static_cast<double>(split.train.size()));

    for (Dataset* d : {&split.train, &split.val, &split.test})
        for (auto& row : d->x)
            for (int j = 0; j < f; ++j) {
                row[static_cast<std::size_t>(j)] -= mean[static_cast<std::size_t>(j)];
                if (sd[static_cast<std::size_t>(j)] > 0.0) row[static_cast<std::size_t>(j)] /= sd[static_cast<std::size_t>(j)];
            }
}

Dataset load_csv_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    Dataset data;
    std::string line;
    bool header_checked = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_checked) {
            header_checked = true;
            // skip a header row if the first field is not numeric
            char* end = nullptr;
            std::strtod(line.c_str(), &end);
            if (end == line.c_str()) continue;
        }
        std::vector<double> fields;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                fields.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error("non-numeric cell in dataset file: " + path);
            }
        }
        if (fields.size() < 2) throw std::runtime_error("dataset rows need features and a label");
        const double label_raw = fields.back();
        fields.pop_back();
        const int label = static_cast<int>(std::llround(label_raw));
        if (label < 0 || std::abs(label_raw - label) > 1e-9)
            throw std::runtime_error("dataset labels must be non-negative integers");
        if (data.feature_count == 0) data.feature_count = static_cast<int>(fields.size());
        if (static_cast<int>(fields.size()) != data.feature_count)
            throw std::runtime_error("inconsistent column count in dataset file");
        data.x.push_back(std::move(fields));
        data.y.push_back(label);
        data.class_count = std::max(data.class_count, label + 1);
    }
    if (data.size() == 0) throw std::runtime_error("dataset file has no data rows: " + path);
    return data;
}

Dataset make_blobs(int per_class, int class_count, int feature_count, double center_scale,
                   double noise, std::uint64_t seed) {
    if (per_class < 1 || class_count < 2 || feature_count < 1)
        throw std::invalid_argument("make_blobs: bad arguments");
    rng::Stream stream(seed, 0);
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(class_count));
    for (auto& c : centers) {
        c.resize(static_cast<std::size_t>(feature_count));
        for (double& v : c) v = center_scale * stream.gaussian();
    }
    Dataset data;
    data.feature_count = feature_count;
    data.class_count = class_count;
    for (int cls = 0; cls < class_count; ++cls)
        for (int i = 0; i < per_class; ++i) {
            std::vector<double> row(static_cast<std::size_t>(feature_count));
            for (int j = 0; j < feature_count; ++j)
                row[static_cast<std::size_t>(j)] = centers[static_cast<std::size_t>(cls)][static_cast<std::size_t>(j)] + noise * stream.gaussian();
            data.x.push_back(std::move(row));
            data.y.push_back(cls);
        }
    return data;
}

Dataset make_spirals(int per_class, double noise, std::uint64_t seed) {
    if (per_class < 1) throw std::invalid_argument("make_spirals: bad arguments");
    rng::Stream stream(seed, 0);
    Dataset data;
    data.feature_count = 2;
    data.class_count = 2;
    constexpr double kPi = 3.14159265358979323846;
    for (int cls = 0; cls < 2; ++cls)
        for (int i = 0; i < per_class; ++i) {
            const double t = static_cast<double>(i) / per_class * 3.0 * kPi + 0.25 * kPi;
            const double r = t / (3.0 * kPi);
            const double sgn = cls == 0 ? 1.0 : -1.0;
            data.x.push_back({sgn * r * std::cos(t) + noise * stream.gaussian(),
                              sgn * r * std::sin(t) + noise * stream.gaussian()});
            data.y.push_back(cls);
        }
    return data;
}

double softmax_cross_entropy(const std::vector<double>& logits, int label,
                             std::vector<double>* grad) {
    if (label < 0 || label >= static_cast<int>(logits.size()))
        throw std::invalid_argument("label out of range for logits");
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double z : logits) denom += std::exp(z - zmax);
    const double log_denom = std::log(denom);
    const double loss = -(logits[static_cast<std::size_t>(label)] - zmax - log_denom);
    if (grad) {
        grad->resize(logits.size());
        for (std::size_t o = 0; o < logits.size(); ++o)
            (*grad)[o] = std::exp(logits[o] - zmax - log_denom);
        (*grad)[static_cast<std::size_t>(label)] -= 1.0;
    }
    return loss;
}

double evaluate_accuracy(const net::ParamSet& params, const Dataset& data) {
    if (data.size() == 0) return 0.0;
    std::int64_t correct = 0;
    for (std::int64_t i = 0; i < data.size(); ++i) {
        const net::ForwardTrace trace = net::forward(params, data.x[static_cast<std::size_t>(i)]);
        const auto& out = trace.output;
        const int pred = static_cast<int>(std::max_element(out.begin(), out.end()) - out.begin());
        if (pred == data.y[static_cast<std::size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

double evaluate_loss(const net::ParamSet& params, const Dataset& data) {
    if (data.size() == 0) return 0.0;
    double total = 0.0;
    for (std::int64_t i = 0; i < data.size(); ++i) {
        const net::ForwardTrace trace = net::forward(params, data.x[static_cast<std::size_t>(i)]);
        total += softmax_cross_entropy(trace.output, data.y[static_cast<std::size_t>(i)], nullptr);
    }
    return total / static_cast<double>(data.size());
}

void sgd_update(std::vector<double>& theta, const std::vector<double>& grad, double lr) {
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
}

void nesterov_update(std::vector<double>& theta, std::vector<double>& velocity,
                     const std::vector<double>& grad, double lr, double momentum) {
    // velocity-form Nesterov: v <- mu v - lr g; theta <- theta + mu v - lr g.
    // With mu = 0 this is plain SGD.
    for (std::size_t i = 0; i < theta.size(); ++i) {
        velocity[i] = momentum * velocity[i] - lr * grad[i];
        theta[i] += momentum * velocity[i] - lr * grad[i];
    }
}

void adam_update(std::vector<double>& theta, std::vector<double>& m, std::vector<double>& v,
                 const std::vector<double>& grad, double lr, double beta1, double beta2,
                 double epsilon, std::int64_t step) {
    if (step < 1) throw std::invalid_argument("adam step counter starts at 1");
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        theta[i] -= lr * mhat / (std::sqrt(vhat) + epsilon);
    }
}

std::vector<double> flatten_params(const net::ParamSet& params) {
    std::vector<double> theta;
    theta.reserve(params.scalar_count());
    for (const net::LayerParams& lp : params.hidden) {
        theta.insert(theta.end(), lp.w.begin(), lp.w.end());
        theta.insert(theta.end(), lp.b.begin(), lp.b.end());
    }
    theta.insert(theta.end(), params.w_out.begin(), params.w_out.end());
    theta.insert(theta.end(), params.b_out.begin(), params.b_out.end());
    return theta;
}

void unflatten_params(const std::vector<double>& theta, net::ParamSet& params) {
    if (theta.size() != params.scalar_count())
        throw std::invalid_argument("flat parameter vector has the wrong length");
    std::size_t pos = 0;
    for (net::LayerParams& lp : params.hidden) {
        std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(pos), lp.w.size(), lp.w.begin());
        pos += lp.w.size();
        std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(pos), lp.b.size(), lp.b.begin());
        pos += lp.b.size();
    }
    std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(pos), params.w_out.size(), params.w_out.begin());
    pos += params.w_out.size();
    std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(pos), params.b_out.size(), params.b_out.begin());
}

namespace {

// Accumulates parameter gradients for a batch into a flat vector, averaged.
double batch_gradient(const net::ParamSet& params, const Dataset& data,
                      const std::vector<std::int64_t>& idx, std::size_t begin, std::size_t end,
                      std::vector<double>& flat_grad) {
    std::fill(flat_grad.begin(), flat_grad.end(), 0.0);
    double loss = 0.0;
    std::vector<double> logit_grad;
    const double inv = 1.0 / static_cast<double>(end - begin);
    for (std::size_t s = begin; s < end; ++s) {
        const auto& x = data.x[static_cast<std::size_t>(idx[s])];
        const int label = data.y[static_cast<std::size_t>(idx[s])];
        const net::ForwardTrace trace = net::forward(params, x);
        loss += softmax_cross_entropy(trace.output, label, &logit_grad);
        for (double& g : logit_grad) g *= inv;
        const net::GradientSet g = net::param_gradients(params, trace, logit_grad);
        std::size_t pos = 0;
        for (const net::LayerParams& lp : g.hidden) {
            for (std::size_t i = 0; i < lp.w.size(); ++i) flat_grad[pos + i] += lp.w[i];
            pos += lp.w.size();
            for (std::size_t i = 0; i < lp.b.size(); ++i) flat_grad[pos + i] += lp.b[i];
            pos += lp.b.size();
        }
        for (std::size_t i = 0; i < g.w_out.size(); ++i) flat_grad[pos + i] += g.w_out[i];
        pos += g.w_out.size();
        for (std::size_t i = 0; i < g.b_out.size(); ++i) flat_grad[pos + i] += g.b_out[i];
    }
    return loss * inv;
}

// Central-difference check of a few flat-gradient coordinates on one sample.
// Probes whose +/-h evaluations land in different linear regions are skipped:
// the loss is only piecewise smooth and finite differences across an argmax
// switch say nothing about the analytic gradient.
bool spot_check_gradient(net::ParamSet& params, const std::vector<double>& x, int label,
                         rng::Stream& stream) {
    std::vector<double> logit_grad;
    const net::ForwardTrace trace = net::forward(params, x);
    softmax_cross_entropy(trace.output, label, &logit_grad);
    const net::GradientSet g = net::param_gradients(params, trace, logit_grad);

    std::vector<double> theta = flatten_params(params);
    const std::vector<double> analytic = flatten_params(g);
    const double h = 1e-5;
    int checked = 0;
    for (int attempt = 0; attempt < 12 && checked < 3; ++attempt) {
        const std::size_t i = static_cast<std::size_t>(stream.next_u64() % theta.size());
        const double orig = theta[i];
        theta[i] = orig + h;
        unflatten_params(theta, params);
        const net::ForwardTrace up_trace = net::forward(params, x);
        const double up = softmax_cross_entropy(up_trace.output, label, nullptr);
        theta[i] = orig - h;
        unflatten_params(theta, params);
        const net::ForwardTrace dn_trace = net::forward(params, x);
        const double dn = softmax_cross_entropy(dn_trace.output, label, nullptr);
        theta[i] = orig;
        unflatten_params(theta, params);
        if (up_trace.kstar != dn_trace.kstar) continue;  // straddles a kink
        ++checked;
        const double fd = (up - dn) / (2.0 * h);
        const double scale = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
        if (std::abs(fd - analytic[i]) / scale > 1e-3) return false;
    }
    return true;
}

}  // namespace

TrainResult train(net::ParamSet& params, const DataSplit& split, const TrainConfig& config) {
    require_compatible(params.arch, split.train);
    if (config.epochs < 1 || config.batch_size < 1 || !(config.learning_rate >= 0.0))
        throw std::invalid_argument("bad training configuration");

    const auto t_start = std::chrono::steady_clock::now();
    TrainResult result;
    result.config = config;
    std::vector<double> theta = flatten_params(params);
    std::vector<double> velocity(theta.size(), 0.0);
    std::vector<double> adam_m, adam_v;
    if (config.optimizer == Optimizer::adam) {
        adam_m.assign(theta.size(), 0.0);
        adam_v.assign(theta.size(), 0.0);
    }
    std::vector<double> flat_grad(theta.size(), 0.0);
    std::vector<std::int64_t> idx(static_cast<std::size_t>(split.train.size()));
    std::iota(idx.begin(), idx.end(), 0);
    rng::Stream shuffle_stream(config.shuffle_seed, 0);
    rng::Stream check_stream(config.shuffle_seed, 1);

    double lr = config.learning_rate;
    std::int64_t adam_step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.lr_halving_period_epochs > 0 && epoch > 0 &&
            epoch % config.lr_halving_period_epochs == 0)
            lr *= 0.5;
        shuffle_indices(idx, shuffle_stream);
        double epoch_loss = 0.0;
        int batches = 0;
        for (std::size_t begin = 0; begin < idx.size(); begin += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(begin + static_cast<std::size_t>(config.batch_size), idx.size());
            epoch_loss += batch_gradient(params, split.train, idx, begin, end, flat_grad);
            ++batches;
            switch (config.optimizer) {
                case Optimizer::sgd:
                    sgd_update(theta, flat_grad, lr);
                    break;
                case Optimizer::nesterov:
                    nesterov_update(theta, velocity, flat_grad, lr, config.momentum);
                    break;
                case Optimizer::adam:
                    adam_update(theta, adam_m, adam_v, flat_grad, lr, config.adam_beta1,
                                config.adam_beta2, config.adam_epsilon, ++adam_step);
                    break;
            }
            unflatten_params(theta, params);
        }
        if (config.check_gradients && split.train.size() > 0) {
            const std::size_t s = static_cast<std::size_t>(check_stream.next_u64() %
                                                           static_cast<std::uint64_t>(split.train.size()));
            if (!spot_check_gradient(params, split.train.x[s], split.train.y[s], check_stream))
                throw std::runtime_error("analytic gradient disagrees with finite differences");
        }
        result.train_loss.push_back(epoch_loss / std::max(batches, 1));
        result.train_accuracy.push_back(evaluate_accuracy(params, split.train));
        result.val_accuracy.push_back(evaluate_accuracy(params, split.val));
        result.epochs_run = epoch + 1;
        if (!all_finite(theta) || !std::isfinite(epoch_loss)) {
            result.diverged = true;
            // leave parameters at a finite sentinel so downstream metrics stay defined
            for (double& t : theta)
                if (!std::isfinite(t)) t = 0.0;
            unflatten_params(theta, params);
            break;
        }
    }
    result.final_train_accuracy = evaluate_accuracy(params, split.train);
    result.final_val_accuracy = evaluate_accuracy(params, split.val);
    result.final_test_accuracy = evaluate_accuracy(params, split.test);
    result.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

std::vector<CompareRow> compare_inits(const DataSplit& split,
                                      const std::vector<SchemeSpec>& schemes,
                                      const TrainConfig& base_config, int n_runs,
                                      std::uint64_t master_seed) {
    if (schemes.size() < 2 || n_runs < 1)
        throw std::invalid_argument("compare_inits: need at least two schemes and one run");

    std::vector<CompareRow> rows;
    for (std::size_t si = 0; si < schemes.size(); ++si) {
        const SchemeSpec& spec = schemes[si];
        struct RunOut {
            double acc;
            bool diverged;
        };
        auto outs = par::map_indexed<RunOut>(n_runs, [&](std::int64_t r) {
            const std::uint64_t run_seed =
                rng::derive_stream(master_seed, si * 1000003ULL + static_cast<std::uint64_t>(r));
            rng::Stream init_stream(run_seed, 0);
            net::ParamSet params = net::init_params_stream(spec.arch, spec.c, init_stream);
            TrainConfig cfg = base_config;
            cfg.learning_rate = spec.learning_rate;
            cfg.shuffle_seed = rng::derive_stream(run_seed, 1);
            const TrainResult res = train(params, split, cfg);
            return RunOut{res.final_test_accuracy, res.diverged};
        });
        CompareRow row;
        row.scheme = spec.name;
        row.c = spec.c;
        row.n_runs = n_runs;
        for (const RunOut& o : outs) {
            row.mean_accuracy += o.acc;
            if (o.diverged) ++row.n_diverged;
        }
        row.mean_accuracy /= n_runs;
        for (const RunOut& o : outs) {
            const double d = o.acc - row.mean_accuracy;
            row.std_accuracy += d * d;
        }
        row.std_accuracy = n_runs > 1 ? std::sqrt(row.std_accuracy / (n_runs - 1)) : 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace maxgrad::train
