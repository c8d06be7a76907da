#pragma once

#include <cstdint>

namespace maxgrad::rng {

// splitmix64 step; also used to derive stream seeds and to seed xoshiro state.
std::uint64_t splitmix64(std::uint64_t& state);

// Child seed for substream `index` of `master`. Used by the estimators so that
// sample i's randomness depends only on (master, i), never on scheduling.
std::uint64_t derive_stream(std::uint64_t master, std::uint64_t index);

// Counter-scheme random stream: xoshiro256** state seeded from (seed, stream).
// gaussian() is a 256-layer ziggurat; only distributional correctness is part
// of the contract, but the byte-for-byte sequence for a given (seed, stream)
// is stable, which the determinism tests rely on.
class Stream {
public:
    explicit Stream(std::uint64_t seed, std::uint64_t stream_index = 0);

    std::uint64_t next_u64();
    double uniform();      // [0, 1)
    double uniform_pos();  // (0, 1]
    double gaussian();     // standard normal
    double chi_squared(int dof);

private:
    std::uint64_t s_[4];
};

}  // namespace maxgrad::rng
