#include "maxgrad/rng.hpp"

#include <array>
#include <cmath>

namespace maxgrad::rng {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

// Ziggurat layout: 256 horizontal strips of equal area V under exp(-x^2/2),
// x[1] = R rightmost node, x[0] the virtual base width, x[256] = 0.
constexpr int kLayers = 256;
constexpr double kZigR = 3.6541528853610088;
constexpr double kZigV = 0.004928673233974655;

struct ZigTables {
    std::array<double, kLayers + 1> x;   // node abscissae, decreasing
    std::array<double, kLayers + 1> f;   // exp(-x^2/2) at nodes
    std::array<double, kLayers> ratio;   // x[i+1] / x[i] quick-accept bound
};

const ZigTables& zig() {
    static const ZigTables t = [] {
        ZigTables z{};
        z.x[0] = kZigV / std::exp(-0.5 * kZigR * kZigR);
        z.x[1] = kZigR;
        z.x[kLayers] = 0.0;
        for (int i = 2; i < kLayers; ++i) {
            const double prev = z.x[i - 1];
            z.x[i] = std::sqrt(-2.0 * std::log(kZigV / prev + std::exp(-0.5 * prev * prev)));
        }
        for (int i = 0; i <= kLayers; ++i) z.f[i] = std::exp(-0.5 * z.x[i] * z.x[i]);
        for (int i = 0; i < kLayers; ++i) z.ratio[i] = z.x[i + 1] / z.x[i];
        return z;
    }();
    return t;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_stream(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0x9E3779B97F4A7C15ULL * (index + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ rotl(b, 27);
}

Stream::Stream(std::uint64_t seed, std::uint64_t stream_index) {
    std::uint64_t sm = derive_stream(seed, stream_index);
    s_[0] = splitmix64(sm);
    s_[1] = splitmix64(sm);
    s_[2] = splitmix64(sm);
    s_[3] = splitmix64(sm);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t Stream::next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Stream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Stream::uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double Stream::gaussian() {
    const ZigTables& z = zig();
    for (;;) {
        const std::uint64_t word = next_u64();
        const int i = static_cast<int>(word & 0xFF);
        // signed 55-bit fraction in (-1, 1)
        const double u =
            static_cast<double>(static_cast<std::int64_t>(word >> 8) - (1LL << 55)) * 0x1.0p-55;
        if (std::abs(u) < z.ratio[i]) return u * z.x[i];
        if (i == 0) {
            // tail beyond R (Marsaglia)
            double xt, yt;
            do {
                xt = -std::log(uniform_pos()) / kZigR;
                yt = -std::log(uniform_pos());
            } while (yt + yt < xt * xt);
            return u > 0 ? kZigR + xt : -(kZigR + xt);
        }
        const double val = u * z.x[i];
        const double y = z.f[i] + uniform() * (z.f[i + 1] - z.f[i]);
        if (y < std::exp(-0.5 * val * val)) return val;
    }
}

double Stream::chi_squared(int dof) {
    double sum = 0.0;
    for (int i = 0; i < dof; ++i) {
        const double g = gaussian();
        sum += g * g;
    }
    return sum;
}

}  // namespace maxgrad::rng
