#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "edm/tensor.hpp"

namespace edm {

/// Counter-based deterministic random stream. Each draw hashes
/// (global_seed, stream_id, counter), so a given (seed, stream) pair yields
/// the same sequence on every platform and run, and distinct stream ids give
/// statistically independent sequences. One trajectory owns one stream.
class RngStream {
public:
    RngStream(std::uint64_t global_seed, std::uint64_t stream_id)
        : key_(mix(mix(global_seed ^ 0x853C49E6748FEA9BULL) ^ stream_id)) {}

    std::uint64_t next_u64() { return mix(key_ ^ counter_++); }

    /// Uniform in (0, 1].
    double next_uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the paired value is cached.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_uniform();
        double u2 = next_uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Uniform in [lo, hi).
    double next_uniform_in(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(next_u64() >> 11) * 0x1.0p-53);
    }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

private:
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// i.i.d. N(0, stddev^2) tensor of the given shape.
inline Tensor gaussian(RngStream& rng, std::vector<std::size_t> shape, double stddev) {
    if (stddev < 0.0) throw std::invalid_argument("gaussian: negative stddev");
    Tensor t = Tensor::zeros(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = stddev * rng.next_normal();
    return t;
}

} // namespace edm
