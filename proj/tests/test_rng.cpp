#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"
#include "maxgrad/rng.hpp"

using namespace maxgrad;

namespace {

uint64_t rotl_ref(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// Reference xoshiro256** step, written out independently of the library code.
struct XoshiroRef {
    uint64_t s[4];
    uint64_t next() {
        const uint64_t result = rotl_ref(s[1] * 5, 7) * 9;
        const uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl_ref(s[3], 45);
        return result;
    }
};

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("splitmix64 matches the published sequence from state 0") {
    uint64_t state = 0;
    CHECK(rng::splitmix64(state) == 0xe220a8397b1dcdafULL);
    CHECK(rng::splitmix64(state) == 0x6e789e6aa1b965f4ULL);
    CHECK(rng::splitmix64(state) == 0x06c45d188009454fULL);
}

TEST_CASE("derive_stream is deterministic and collision-free over small index ranges") {
    std::set<uint64_t> seen;
    for (uint64_t i = 0; i < 4096; ++i) seen.insert(rng::derive_stream(42, i));
    CHECK(seen.size() == 4096);

    CHECK(rng::derive_stream(42, 7) == rng::derive_stream(42, 7));
    CHECK(rng::derive_stream(42, 7) != rng::derive_stream(43, 7));
    CHECK(rng::derive_stream(0, 0) != rng::derive_stream(0, 1));
}

TEST_CASE("stream output reproduces the xoshiro256** recurrence from its derived state") {
    // The seeding contract: state = 4 splitmix64 draws from derive_stream(seed, stream).
    for (uint64_t seed : {0ULL, 42ULL, 0xDEADBEEFULL}) {
        for (uint64_t idx : {0ULL, 1ULL, 900ULL}) {
            uint64_t sm = rng::derive_stream(seed, idx);
            XoshiroRef ref{};
            for (auto& w : ref.s) w = rng::splitmix64(sm);
            rng::Stream s(seed, idx);
            for (int i = 0; i < 1000; ++i) CHECK(s.next_u64() == ref.next());
        }
    }
}

TEST_CASE("streams with different indices decorrelate immediately") {
    rng::Stream a(7, 0), b(7, 1);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64();
    CHECK(same == 0);
}

TEST_CASE("uniform stays in [0,1) and uniform_pos in (0,1]") {
    rng::Stream s(1, 0);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        double u = s.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        double p = s.uniform_pos();
        CHECK(p > 0.0);
        CHECK(p <= 1.0);
    }
    // the sample should actually spread over the interval
    CHECK(lo < 1e-3);
    CHECK(hi > 1.0 - 1e-3);
}

TEST_CASE("gaussian sample passes a one-sample KS test against the normal CDF") {
    const int n = 200000;
    rng::Stream s(2024, 0);
    std::vector<double> v(n);
    for (auto& x : v) x = s.gaussian();
    std::sort(v.begin(), v.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = normal_cdf(v[static_cast<size_t>(i)]);
        d = std::max(d, std::abs(f - (i + 1.0) / n));
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    }
    // K-S critical value at alpha = 1e-3 is 1.949/sqrt(n) ~ 0.00436
    CHECK(d < 1.949 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("gaussian moments match the standard normal") {
    const int n = 400000;
    rng::Stream s(5, 3);
    double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = s.gaussian();
        m1 += x;
        m2 += x * x;
        m3 += x * x * x;
        m4 += x * x * x * x;
    }
    m1 /= n; m2 /= n; m3 /= n; m4 /= n;
    CHECK(std::abs(m1) < 0.01);
    CHECK(std::abs(m2 - 1.0) < 0.02);
    CHECK(std::abs(m3) < 0.05);
    CHECK(std::abs(m4 - 3.0) < 0.1);
}

TEST_CASE("gaussian tail is actually exercised by the ziggurat fallback") {
    rng::Stream s(99, 0);
    int beyond = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i)
        if (std::abs(s.gaussian()) > 3.6541528853610088) ++beyond;
    // P(|Z| > R) ~ 2.59e-4; expect ~259 hits, allow a wide band
    CHECK(beyond > 120);
    CHECK(beyond < 500);
}

TEST_CASE("chi_squared matches its first two moments") {
    rng::Stream s(11, 0);
    for (int dof : {1, 3, 7}) {
        const int n = 200000;
        double m1 = 0, m2 = 0;
        for (int i = 0; i < n; ++i) {
            const double x = s.chi_squared(dof);
            CHECK(x >= 0.0);
            m1 += x;
            m2 += x * x;
        }
        m1 /= n; m2 /= n;
        const double var = m2 - m1 * m1;
        CHECK(std::abs(m1 - dof) < 0.08 * dof);
        CHECK(std::abs(var - 2.0 * dof) < 0.2 * dof);
    }
}

TEST_CASE("identical (seed, stream) pairs replay bitwise") {
    rng::Stream a(123, 45), b(123, 45);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    rng::Stream c(123, 45), d(123, 45);
    for (int i = 0; i < 100; ++i) {
        CHECK(c.gaussian() == d.gaussian());
    }
}
