#include "maxgrad/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace maxgrad::net {

static_assert(std::endian::native == std::endian::little,
              "param serialization assumes a little-endian host");

namespace {

inline double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += a[j] * b[j];
    return s;
}

void check_input(const Architecture& arch, const std::vector<double>& input) {
    if (static_cast<int>(input.size()) != arch.input_width) {
        std::ostringstream msg;
        msg << "input size " << input.size() << " does not match input width "
            << arch.input_width;
        throw std::invalid_argument(msg.str());
    }
}

// activation + argmax of one hidden layer; cur -> next
void layer_forward(const LayerParams& lp, bool relu, const std::vector<double>& cur,
                   std::vector<double>& z, std::vector<int>& ks, std::vector<double>& next) {
    const int units = lp.units, rank = lp.rank, fan = lp.fan_in;
    z.resize(static_cast<std::size_t>(units) * rank);
    ks.resize(units);
    next.resize(units);
    for (int i = 0; i < units; ++i) {
        double best = -std::numeric_limits<double>::infinity();
        int bk = 0;
        for (int k = 0; k < rank; ++k) {
            const double v = lp.bat(i, k) + dot(&lp.w[(static_cast<std::size_t>(i) * rank + k) * fan],
                                                cur.data(), fan);
            z[static_cast<std::size_t>(i) * rank + k] = v;
            if (v > best) {
                best = v;
                bk = k;
            }
        }
        if (relu) {
            ks[i] = best > 0.0 ? 1 : 0;
            next[i] = best > 0.0 ? best : 0.0;
        } else {
            ks[i] = bk;
            next[i] = best;
        }
    }
}

}  // namespace

int Architecture::layer_width(int l) const {
    if (l < 0 || l > depth()) throw std::out_of_range("layer index out of range");
    if (l == 0) return input_width;
    if (l == depth()) return output_width;
    return hidden_widths[static_cast<std::size_t>(l) - 1];
}

void Architecture::validate() const {
    if (input_width < 1) throw std::invalid_argument("input width must be >= 1");
    if (output_width < 1) throw std::invalid_argument("output width must be >= 1");
    for (int w : hidden_widths)
        if (w < 1) throw std::invalid_argument("hidden widths must be >= 1");
    if (activation == Activation::maxout && (maxout_rank < 2 || maxout_rank > 100))
        throw std::invalid_argument("maxout rank must be in [2, 100]");
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = w_out.size() + b_out.size();
    for (const LayerParams& l : hidden) n += l.w.size() + l.b.size();
    return n;
}

ParamSet init_params_stream(const Architecture& arch, double c, rng::Stream& stream) {
    arch.validate();
    if (!(c > 0.0) || !std::isfinite(c))
        throw std::invalid_argument("weight scale c must be positive and finite");

    ParamSet p;
    p.arch = arch;
    const int rank = arch.rank();
    int fan = arch.input_width;
    p.hidden.reserve(arch.hidden_widths.size());
    for (int width : arch.hidden_widths) {
        LayerParams lp;
        lp.units = width;
        lp.rank = rank;
        lp.fan_in = fan;
        lp.w.resize(static_cast<std::size_t>(width) * rank * fan);
        lp.b.assign(static_cast<std::size_t>(width) * rank, 0.0);
        const double sigma = std::sqrt(c / fan);
        for (double& v : lp.w) v = sigma * stream.gaussian();
        if (arch.bias_mode == BiasMode::gaussian)
            for (double& v : lp.b) v = sigma * stream.gaussian();
        p.hidden.push_back(std::move(lp));
        fan = width;
    }
    p.w_out.resize(static_cast<std::size_t>(arch.output_width) * fan);
    p.b_out.assign(arch.output_width, 0.0);
    const double sigma_out = std::sqrt(1.0 / fan);
    for (double& v : p.w_out) v = sigma_out * stream.gaussian();
    return p;
}

ParamSet init_params(const Architecture& arch, const InitScheme& scheme) {
    rng::Stream stream(scheme.seed);
    return init_params_stream(arch, scheme.c, stream);
}

ForwardTrace forward(const ParamSet& p, const std::vector<double>& input) {
    check_input(p.arch, input);
    const bool relu = p.arch.activation == Activation::relu;

    ForwardTrace t;
    const std::size_t n_hidden = p.hidden.size();
    t.x.resize(n_hidden + 1);
    t.z.resize(n_hidden);
    t.kstar.resize(n_hidden);
    t.x[0] = input;
    for (std::size_t l = 0; l < n_hidden; ++l)
        layer_forward(p.hidden[l], relu, t.x[l], t.z[l], t.kstar[l], t.x[l + 1]);

    const std::vector<double>& last = t.x[n_hidden];
    const int fan = static_cast<int>(last.size());
    t.output.resize(p.arch.output_width);
    for (int o = 0; o < p.arch.output_width; ++o)
        t.output[o] = p.b_out[o] + dot(&p.w_out[static_cast<std::size_t>(o) * fan], last.data(), fan);
    return t;
}

JacobianResult input_jacobian(const ParamSet& p, const std::vector<double>& input) {
    JacobianResult r;
    r.trace = forward(p, input);
    const int n0 = p.arch.input_width;

    // m holds the Jacobian of the current activation w.r.t. the input
    std::vector<double> m;  // (rows, n0) row-major
    int rows = n0;
    bool identity = true;

    std::vector<double> next;
    for (std::size_t l = 0; l < p.hidden.size(); ++l) {
        const LayerParams& lp = p.hidden[l];
        const std::vector<int>& ks = r.trace.kstar[l];
        next.assign(static_cast<std::size_t>(lp.units) * n0, 0.0);
        for (int i = 0; i < lp.units; ++i) {
            const bool active = p.arch.activation != Activation::relu || ks[i] == 1;
            if (!active) continue;
            const int k = p.arch.activation == Activation::relu ? 0 : ks[i];
            const double* row = &lp.w[(static_cast<std::size_t>(i) * lp.rank + k) * lp.fan_in];
            double* out = &next[static_cast<std::size_t>(i) * n0];
            if (identity) {
                std::memcpy(out, row, sizeof(double) * static_cast<std::size_t>(n0));
            } else {
                for (int j = 0; j < lp.fan_in; ++j) {
                    const double wij = row[j];
                    if (wij == 0.0) continue;
                    const double* mrow = &m[static_cast<std::size_t>(j) * n0];
                    for (int q = 0; q < n0; ++q) out[q] += wij * mrow[q];
                }
            }
        }
        m.swap(next);
        rows = lp.units;
        identity = false;
    }

    const int out_w = p.arch.output_width;
    r.j.assign(static_cast<std::size_t>(out_w) * n0, 0.0);
    const int fan = rows;
    for (int o = 0; o < out_w; ++o) {
        double* jrow = &r.j[static_cast<std::size_t>(o) * n0];
        const double* wrow = &p.w_out[static_cast<std::size_t>(o) * fan];
        if (identity) {
            std::memcpy(jrow, wrow, sizeof(double) * static_cast<std::size_t>(n0));
        } else {
            for (int j = 0; j < fan; ++j) {
                const double wij = wrow[j];
                if (wij == 0.0) continue;
                const double* mrow = &m[static_cast<std::size_t>(j) * n0];
                for (int q = 0; q < n0; ++q) jrow[q] += wij * mrow[q];
            }
        }
    }
    return r;
}

double directional_derivative_sq(const ParamSet& p, const std::vector<double>& input,
                                 const std::vector<double>& direction) {
    check_input(p.arch, input);
    if (direction.size() != input.size())
        throw std::invalid_argument("direction size must match input width");
    const ForwardTrace t = forward(p, input);
    const bool relu = p.arch.activation == Activation::relu;

    std::vector<double> v = direction;
    std::vector<double> next;
    double product = 1.0;
    for (std::size_t l = 0; l < p.hidden.size(); ++l) {
        const LayerParams& lp = p.hidden[l];
        const std::vector<int>& ks = t.kstar[l];
        next.assign(lp.units, 0.0);
        double norm_sq = 0.0;
        for (int i = 0; i < lp.units; ++i) {
            if (relu && ks[i] == 0) continue;
            const int k = relu ? 0 : ks[i];
            const double s = dot(&lp.w[(static_cast<std::size_t>(i) * lp.rank + k) * lp.fan_in],
                                 v.data(), lp.fan_in);
            next[i] = s;
            norm_sq += s * s;
        }
        if (norm_sq == 0.0) return 0.0;
        product *= norm_sq;
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& e : next) e *= inv;
        v.swap(next);
    }

    const int fan = static_cast<int>(v.size());
    double out_sq = 0.0;
    for (int o = 0; o < p.arch.output_width; ++o) {
        const double s = dot(&p.w_out[static_cast<std::size_t>(o) * fan], v.data(), fan);
        out_sq += s * s;
    }
    return product * out_sq;
}

double activation_length(const ForwardTrace& trace, const Architecture& arch, int layer) {
    if (layer < 0 || layer >= static_cast<int>(trace.x.size()))
        throw std::out_of_range("activation layer out of range");
    const std::vector<double>& x = trace.x[static_cast<std::size_t>(layer)];
    double s = 0.0;
    for (double v : x) s += v * v;
    return s / arch.layer_width(layer);
}

GradientSet param_gradients(const ParamSet& p, const std::vector<double>& input,
                            const std::vector<double>& upstream) {
    return param_gradients(p, forward(p, input), upstream);
}

GradientSet param_gradients(const ParamSet& p, const ForwardTrace& trace,
                            const std::vector<double>& upstream) {
    if (static_cast<int>(upstream.size()) != p.arch.output_width)
        throw std::invalid_argument("upstream size must match output width");
    const bool relu = p.arch.activation == Activation::relu;

    GradientSet g;
    g.arch = p.arch;
    g.hidden.resize(p.hidden.size());
    for (std::size_t l = 0; l < p.hidden.size(); ++l) {
        g.hidden[l].units = p.hidden[l].units;
        g.hidden[l].rank = p.hidden[l].rank;
        g.hidden[l].fan_in = p.hidden[l].fan_in;
        g.hidden[l].w.assign(p.hidden[l].w.size(), 0.0);
        g.hidden[l].b.assign(p.hidden[l].b.size(), 0.0);
    }
    g.w_out.assign(p.w_out.size(), 0.0);
    g.b_out.assign(p.b_out.size(), 0.0);

    const std::vector<double>& last = trace.x.back();
    const int fan_out = static_cast<int>(last.size());
    std::vector<double> grad(fan_out, 0.0);  // dL/dx for the current layer input
    for (int o = 0; o < p.arch.output_width; ++o) {
        const double u = upstream[o];
        g.b_out[o] = u;
        double* gw = &g.w_out[static_cast<std::size_t>(o) * fan_out];
        const double* wrow = &p.w_out[static_cast<std::size_t>(o) * fan_out];
        for (int j = 0; j < fan_out; ++j) {
            gw[j] = u * last[j];
            grad[j] += u * wrow[j];
        }
    }

    std::vector<double> prev_grad;
    for (int l = static_cast<int>(p.hidden.size()) - 1; l >= 0; --l) {
        const LayerParams& lp = p.hidden[l];
        LayerParams& gl = g.hidden[static_cast<std::size_t>(l)];
        const std::vector<int>& ks = trace.kstar[static_cast<std::size_t>(l)];
        const std::vector<double>& below = trace.x[static_cast<std::size_t>(l)];
        prev_grad.assign(lp.fan_in, 0.0);
        for (int i = 0; i < lp.units; ++i) {
            if (relu && ks[i] == 0) continue;
            const double gi = grad[i];
            const int k = relu ? 0 : ks[i];
            gl.bat(i, k) = gi;
            double* gw = &gl.w[(static_cast<std::size_t>(i) * lp.rank + k) * lp.fan_in];
            const double* wrow = &lp.w[(static_cast<std::size_t>(i) * lp.rank + k) * lp.fan_in];
            for (int j = 0; j < lp.fan_in; ++j) {
                gw[j] = gi * below[j];
                prev_grad[j] += gi * wrow[j];
            }
        }
        grad.swap(prev_grad);
    }
    return g;
}

void argmax_pattern(const ParamSet& p, const std::vector<double>& input,
                    std::vector<int>& pattern, std::vector<double>& scratch_a,
                    std::vector<double>& scratch_b) {
    check_input(p.arch, input);
    const bool relu = p.arch.activation == Activation::relu;
    pattern.clear();
    scratch_a = input;
    std::vector<double>* cur = &scratch_a;
    std::vector<double>* next = &scratch_b;
    for (const LayerParams& lp : p.hidden) {
        next->resize(lp.units);
        for (int i = 0; i < lp.units; ++i) {
            double best = -std::numeric_limits<double>::infinity();
            int bk = 0;
            for (int k = 0; k < lp.rank; ++k) {
                const double v = lp.bat(i, k) +
                                 dot(&lp.w[(static_cast<std::size_t>(i) * lp.rank + k) * lp.fan_in],
                                     cur->data(), lp.fan_in);
                if (v > best) {
                    best = v;
                    bk = k;
                }
            }
            if (relu) {
                pattern.push_back(best > 0.0 ? 1 : 0);
                (*next)[i] = best > 0.0 ? best : 0.0;
            } else {
                pattern.push_back(bk);
                (*next)[i] = best;
            }
        }
        std::swap(cur, next);
    }
}

namespace {

constexpr char kMagic[8] = {'M', 'X', 'G', 'P', 'R', 'M', '0', '1'};

void write_i32(std::ostream& os, std::int32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::int32_t read_i32(std::istream& is) {
    std::int32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

void write_f64(std::ostream& os, const std::vector<double>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_f64(std::istream& is, std::vector<double>& v) {
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

}  // namespace

void save_params(const ParamSet& p, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write(kMagic, sizeof kMagic);
    write_i32(os, p.arch.activation == Activation::relu ? 1 : 0);
    write_i32(os, p.arch.bias_mode == BiasMode::zero ? 1 : 0);
    write_i32(os, p.arch.maxout_rank);
    write_i32(os, p.arch.input_width);
    write_i32(os, static_cast<std::int32_t>(p.arch.hidden_widths.size()));
    for (int w : p.arch.hidden_widths) write_i32(os, w);
    write_i32(os, p.arch.output_width);
    for (const LayerParams& lp : p.hidden) {
        write_f64(os, lp.w);
        write_f64(os, lp.b);
    }
    write_f64(os, p.w_out);
    write_f64(os, p.b_out);
    if (!os) throw std::runtime_error("short write: " + path);
}

ParamSet load_params(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path);
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("bad parameter file header: " + path);

    Architecture arch;
    arch.activation = read_i32(is) == 1 ? Activation::relu : Activation::maxout;
    arch.bias_mode = read_i32(is) == 1 ? BiasMode::zero : BiasMode::gaussian;
    arch.maxout_rank = read_i32(is);
    arch.input_width = read_i32(is);
    const std::int32_t n_hidden = read_i32(is);
    if (!is || n_hidden < 0 || n_hidden > 1 << 20)
        throw std::runtime_error("corrupt parameter file: " + path);
    arch.hidden_widths.resize(static_cast<std::size_t>(n_hidden));
    for (std::int32_t i = 0; i < n_hidden; ++i) arch.hidden_widths[static_cast<std::size_t>(i)] = read_i32(is);
    arch.output_width = read_i32(is);
    arch.validate();

    ParamSet p;
    p.arch = arch;
    const int rank = arch.rank();
    int fan = arch.input_width;
    for (int width : arch.hidden_widths) {
        LayerParams lp;
        lp.units = width;
        lp.rank = rank;
        lp.fan_in = fan;
        lp.w.resize(static_cast<std::size_t>(width) * rank * fan);
        lp.b.resize(static_cast<std::size_t>(width) * rank);
        read_f64(is, lp.w);
        read_f64(is, lp.b);
        p.hidden.push_back(std::move(lp));
        fan = width;
    }
    p.w_out.resize(static_cast<std::size_t>(arch.output_width) * fan);
    p.b_out.resize(static_cast<std::size_t>(arch.output_width));
    read_f64(is, p.w_out);
    read_f64(is, p.b_out);
    if (!is) throw std::runtime_error("truncated parameter file: " + path);
    return p;
}

}  // namespace maxgrad::net
