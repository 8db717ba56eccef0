// rng.hpp - counter-based random streams for reproducible event simulation.
#ifndef LOBLIQ_RNG_HPP
#define LOBLIQ_RNG_HPP

#include <cmath>
#include <cstdint>

namespace lobliq {

// splitmix64 finalizer: a 64-bit bijective mixer with good avalanche.
inline uint64_t mix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Stateless counter stream keyed by (seed, path, channel). Draw i of a
/// stream is a pure function of the key and i, so adding channels or
/// reordering draws elsewhere never perturbs this stream, and per-path
/// parallelism is deterministic by construction.
class CounterRng {
public:
    CounterRng(uint64_t seed, uint64_t path, uint64_t channel)
        : key_(mix64(mix64(mix64(seed) ^ (path * 0xA24BAED4963EE407ull)) ^
                     (channel * 0x9FB21C651E98DF25ull))) {}

    uint64_t next_u64() { return mix64(key_ + (counter_++) * 0xD1B54A32D192ED03ull); }

    /// Uniform in [0, 1).
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Exponential inter-arrival with the given rate; +inf when rate == 0.
    double next_exp(double rate) {
        if (rate <= 0.0) return std::numeric_limits<double>::infinity();
        double u = next_unit();
        return -std::log1p(-u) / rate;
    }

private:
    uint64_t key_;
    uint64_t counter_ = 0;
};

}  // namespace lobliq

#endif
