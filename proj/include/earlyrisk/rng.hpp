#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace earlyrisk {

/// SplitMix64 finalizer applied to (parent, stream). Every component that needs
/// randomness takes a seed derived this way from the run seed, so results do not
/// depend on evaluation order or thread count.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

/// Seedable generator with portable outputs: the engine is std::mt19937_64, whose
/// sequence is fixed by the C++ standard, and all distributions are implemented
/// here rather than taken from <random> (whose algorithms are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n); n must be positive.
    std::size_t below(std::size_t n);

    /// Standard normal via Box-Muller.
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// Random permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

}  // namespace earlyrisk
