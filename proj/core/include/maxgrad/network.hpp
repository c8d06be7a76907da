#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maxgrad/rng.hpp"

namespace maxgrad::net {

enum class Activation { maxout, relu };
enum class BiasMode { gaussian, zero };

// Fully connected network: hidden layers of maxout units (max of `maxout_rank`
// affine pieces) or relu units, followed by one linear output layer.
struct Architecture {
    int input_width = 0;
    std::vector<int> hidden_widths;
    int output_width = 0;
    int maxout_rank = 2;
    Activation activation = Activation::maxout;
    BiasMode bias_mode = BiasMode::gaussian;

    // Number of affine layers, output included; hidden_widths may be empty.
    int depth() const { return static_cast<int>(hidden_widths.size()) + 1; }
    int hidden_count() const { return static_cast<int>(hidden_widths.size()); }
    // n_l for l = 0 (input) .. depth() (output)
    int layer_width(int l) const;
    // affine pieces per unit: maxout_rank for maxout, 1 for relu
    int rank() const { return activation == Activation::maxout ? maxout_rank : 1; }
    void validate() const;  // throws std::invalid_argument
};

struct InitScheme {
    double c = 1.0;            // weight variance scale: Var(w) = c / fan_in
    std::uint64_t seed = 0;
};

struct LayerParams {
    int units = 0;
    int rank = 0;
    int fan_in = 0;
    std::vector<double> w;  // (units, rank, fan_in) row-major
    std::vector<double> b;  // (units, rank)

    double& wat(int i, int k, int j) { return w[(static_cast<std::size_t>(i) * rank + k) * fan_in + j]; }
    double wat(int i, int k, int j) const { return w[(static_cast<std::size_t>(i) * rank + k) * fan_in + j]; }
    double& bat(int i, int k) { return b[static_cast<std::size_t>(i) * rank + k]; }
    double bat(int i, int k) const { return b[static_cast<std::size_t>(i) * rank + k]; }
};

struct ParamSet {
    Architecture arch;
    std::vector<LayerParams> hidden;
    std::vector<double> w_out;  // (output_width, n_{L-1}) row-major
    std::vector<double> b_out;  // (output_width)

    std::size_t scalar_count() const;
};

// Gaussian init: hidden entries N(0, c/fan_in) for weights and (in gaussian
// bias mode) biases; output layer N(0, 1/n_{L-1}) with zero bias. The draw
// sequence is fixed, so equal seeds give bitwise-identical parameters.
ParamSet init_params(const Architecture& arch, const InitScheme& scheme);

// Same, drawing from a caller-owned stream (used by the estimators to chain
// further draws onto the same substream).
ParamSet init_params_stream(const Architecture& arch, double c, rng::Stream& stream);

struct ForwardTrace {
    // x[0] = input, x[l] = activation of hidden layer l (1-based), l <= L-1
    std::vector<std::vector<double>> x;
    // preactivations per hidden layer, (units * rank) row-major
    std::vector<std::vector<double>> z;
    // selected piece per unit; ties resolve to the lowest index.
    // For relu: 1 if the unit is strictly positive, else 0.
    std::vector<std::vector<int>> kstar;
    std::vector<double> output;
};

ForwardTrace forward(const ParamSet& p, const std::vector<double>& input);

struct JacobianResult {
    std::vector<double> j;  // (output_width, input_width) row-major
    ForwardTrace trace;
};

// Input-output Jacobian at `input`: the product of the selected affine rows,
// constant on the activation region containing the input.
JacobianResult input_jacobian(const ParamSet& p, const std::vector<double>& input);

// ||J(input) u||^2 computed as the layerwise product of squared norms of the
// selected-row images (never materializes J). If a propagated direction hits
// exactly zero the product is 0.
double directional_derivative_sq(const ParamSet& p, const std::vector<double>& input,
                                 const std::vector<double>& direction);

// ||x^(layer)||^2 / n_layer for layer = 0 (input) .. L-1 (last hidden).
double activation_length(const ForwardTrace& trace, const Architecture& arch, int layer);

// Gradient of <upstream, N(x)> with respect to every parameter. Entries for
// non-selected pieces are exactly zero.
using GradientSet = ParamSet;
GradientSet param_gradients(const ParamSet& p, const std::vector<double>& input,
                            const std::vector<double>& upstream);
GradientSet param_gradients(const ParamSet& p, const ForwardTrace& trace,
                            const std::vector<double>& upstream);

// Concatenated argmax pattern of all hidden layers at `input`; buffers are
// caller-owned so scans can run without per-call allocation.
void argmax_pattern(const ParamSet& p, const std::vector<double>& input,
                    std::vector<int>& pattern, std::vector<double>& scratch_a,
                    std::vector<double>& scratch_b);

// Flat little-endian binary round-trip of a ParamSet (architecture header
// followed by raw f64 payload in init order).
void save_params(const ParamSet& p, const std::string& path);
ParamSet load_params(const std::string& path);

}  // namespace maxgrad::net
