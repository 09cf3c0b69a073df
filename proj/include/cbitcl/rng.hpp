#pragma once

#include <cstdint>

#include "cbitcl/errors.hpp"
#include "cbitcl/numeric.hpp"

namespace cbitcl {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

} // namespace detail

/// Counter-based stream: output i is a hash of (key, i), so streams indexed by
/// (seed, stream, substream) are independent and draws can be reproduced
/// regardless of scheduling. Substreams let jump draws and Gaussian draws
/// coexist without perturbing each other when the jump cutoff changes.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream)
        : key_(detail::splitmix64(detail::splitmix64(seed ^ detail::splitmix64(stream)) ^
                                  detail::splitmix64(~substream))) {}

    std::uint64_t next_u64() {
        if (counter_ == UINT64_MAX) throw RNGError("counter stream exhausted");
        return detail::splitmix64(key_ ^ detail::splitmix64(counter_++));
    }

    /// Uniform on the open interval (0,1).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal by inverse transform (one uniform per draw).
    double next_normal() { return norm_inv(next_uniform()); }

    std::uint64_t draws() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Exact Poisson sampling. Knuth's product method, split into chunks so the
/// running product never underflows for large means; cost grows linearly with
/// the mean.
inline std::uint64_t poisson(CounterRng& rng, double mean) {
    if (!(mean >= 0.0)) throw RNGError("poisson mean must be >= 0");
    if (mean == 0.0) return 0;
    std::uint64_t total = 0;
    double remaining = mean;
    while (remaining > 0.0) {
        const double chunk = remaining > 20.0 ? 20.0 : remaining;
        remaining -= chunk;
        const double limit = std::exp(-chunk);
        double prod = rng.next_uniform();
        while (prod > limit) {
            ++total;
            prod *= rng.next_uniform();
        }
    }
    return total;
}

} // namespace cbitcl
