#pragma once

#include <cstdint>
#include <span>

namespace pmilab {

/// Seeded random stream backed by SplitMix64.
///
/// The generator and every derived draw (uniform, normal, categorical,
/// gamma) are implemented here rather than through <random> distributions,
/// whose outputs differ between standard library vendors. The algorithm
/// name is written into checkpoint headers.
///
/// A stream is single-owner. Parallel or independent work obtains its own
/// stream through split() or child().
class Rng {
public:
    static constexpr const char* algorithm = "splitmix64";

    explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept;

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept;

    /// Uniform integer on [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept;

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() noexcept;

    /// Index drawn with probability proportional to weights[k].
    /// Weights must be non-negative with a positive sum.
    std::size_t categorical(std::span<const double> weights);

    /// Gamma(shape, 1) via Marsaglia-Tsang.
    double gamma(double shape);

    /// Independent stream derived from the next draw of this one.
    Rng split() noexcept;

    /// Stream derived from (seed, tag) without consuming any draws.
    static Rng child(std::uint64_t seed, std::uint64_t tag) noexcept;

private:
    std::uint64_t state_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

}  // namespace pmilab
