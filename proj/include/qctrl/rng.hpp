#pragma once

#include <cstdint>
#include <random>

namespace qctrl {

/// Seedable random stream used by every stochastic operation.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The uniform and normal draws are computed here rather than via
/// <random> distributions, whose algorithms are implementation-defined, so
/// that a seed reproduces the same numbers on every toolchain.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for (seed, stream index), e.g. one per restart.
    static Rng derive(std::uint64_t seed, std::uint64_t stream) { return Rng(derive_seed(seed, stream)); }
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

    /// Standard normal via Box-Muller (second variate cached).
    double normal();

  private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t splitmix64(std::uint64_t x);

} // namespace qctrl
