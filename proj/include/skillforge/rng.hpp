#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string_view>

namespace skillforge {

/// Deterministic random source. All distribution transforms are implemented
/// here rather than with std::*_distribution so that streams are reproducible
/// across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Modulo bias is below 1e-18 for the small n
    /// used here.
    int uniform_int(int n) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(n)); }

    /// Standard normal via Box-Muller. Stateless beyond the engine so that a
    /// serialized engine restores the exact stream.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    void save(std::ostream& os) const;
    void load(std::istream& is);

private:
    std::mt19937_64 engine_;
};

/// Child seed derivation: every random stream in a run is derived from the
/// manifest seed as hash(seed, scope, index). Parallel workers therefore
/// reproduce independent of scheduling.
std::uint64_t derive_seed(std::uint64_t root, std::string_view scope, std::uint64_t index = 0);

/// FNV-1a over arbitrary bytes, used for content fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace skillforge
