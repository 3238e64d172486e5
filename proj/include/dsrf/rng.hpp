#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dsrf/vec2.hpp"

namespace dsrf {

/// Counter-based pseudorandom stream (SplitMix64 core).
///
/// A source is identified by (seed, stream_id): the same pair always replays
/// the same sequence bit-exactly, and distinct stream ids give statistically
/// independent streams. split() derives child streams by hashing, so workers
/// can each own an independent source without coordination.
///
/// Gaussian draws use Box-Muller with a fixed two-uniforms-per-pair schedule;
/// there is no rejection loop, so the number of raw draws consumed per sample
/// is the same on every platform.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// Independent child stream; deterministic in (seed, stream_id, child_id).
    RandomSource split(std::uint64_t child_id) const;

    std::uint64_t next_u64();

    /// Uniform in [0, 1), 53-bit resolution.
    double next_unit();

    /// Uniform integer in [0, n), n >= 1. Unbiased via 128-bit scaling.
    std::uint64_t next_below(std::uint64_t n);

    /// One Box-Muller pair; always consumes exactly two uniforms.
    std::pair<double, double> next_gaussian_pair();

    Vec2 next_gaussian_vec2();

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t state_;
};

/// n i.i.d. standard-normal points in d dimensions, row-major.
std::vector<double> sample_gaussian(RandomSource& rng, int n, int d);

/// Sign vector with i.i.d. +-1 coordinates.
std::vector<double> sample_rademacher(RandomSource& rng, int d);

/// Uniform direction on the unit sphere in d dimensions (d=1 gives +-1).
std::vector<double> sample_unit_sphere(RandomSource& rng, int d);

Vec2 sample_unit_sphere_vec2(RandomSource& rng);

} // namespace dsrf
