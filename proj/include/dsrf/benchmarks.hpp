#pragma once

#include <array>
#include <string>
#include <vector>

#include "dsrf/rng.hpp"
#include "dsrf/vec2.hpp"

namespace dsrf {

/// 4x4 checkerboard target on [-0.9, 0.9)^2 with cell side 0.45: a uniform
/// mixture over the eight "black" cells of parity (i+j) even (lower-left cell
/// included). Cells are half-open [lo, hi) in both axes, so every point lands
/// in exactly one cell; the parity can be flipped by config.
struct CheckerboardSpec {
    double cell_side = 0.45;
    double origin_x = -0.9;
    double origin_y = -0.9;
    int grid_n = 4;
    bool flip_parity = false;

    bool black_parity(int i, int j) const {
        return (((i + j) % 2 == 0) != flip_parity);
    }
};

/// True iff p lies inside one of the eight black cells.
bool in_black_cell(const CheckerboardSpec& spec, Vec2 p);

/// Uniform draw: pick one of the eight black cells, then uniform inside it.
std::vector<Vec2> sample_checkerboard(const CheckerboardSpec& spec, RandomSource& rng, int n);

/// Three-mode isotropic Gaussian mixtures on an equilateral triangle of
/// circumradius D, the target being the source rotated 60 degrees about the
/// origin. Uniform mode weights.
struct GmmSpec {
    double variance = 0.3;
    double circumradius = 10.0;

    std::array<Vec2, 3> source_means() const;
    std::array<Vec2, 3> target_means() const;
};

std::vector<Vec2> sample_gmm(RandomSource& rng, int n, const std::array<Vec2, 3>& means,
                             double variance);

/// n i.i.d. standard-normal 2D points.
std::vector<Vec2> sample_gaussian_vec2(RandomSource& rng, int n);

enum class BenchmarkKind { checkerboard, gmm };

std::string benchmark_name(BenchmarkKind k);
BenchmarkKind parse_benchmark(const std::string& name);

/// A benchmark bundles the source distribution the flow starts from and the
/// target it must reach: N(0,I) -> checkerboard, or source GMM -> rotated GMM.
struct Benchmark {
    BenchmarkKind kind = BenchmarkKind::checkerboard;
    CheckerboardSpec checkerboard;
    GmmSpec gmm;

    std::vector<Vec2> sample_source(RandomSource& rng, int n) const;
    std::vector<Vec2> sample_target(RandomSource& rng, int n) const;
};

/// Sample dump used by the CLI: CSV with header "x,y".
void write_points_csv(const std::string& path, const std::vector<Vec2>& pts);

} // namespace dsrf
