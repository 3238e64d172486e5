#include "dsrf/benchmarks.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace dsrf {

bool in_black_cell(const CheckerboardSpec& spec, Vec2 p) {
    const double fx = (p.x - spec.origin_x) / spec.cell_side;
    const double fy = (p.y - spec.origin_y) / spec.cell_side;
    if (fx < 0.0 || fy < 0.0) return false;
    const int i = static_cast<int>(fx);  // floor: fx >= 0 here
    const int j = static_cast<int>(fy);
    if (i >= spec.grid_n || j >= spec.grid_n) return false;
    return spec.black_parity(i, j);
}

std::vector<Vec2> sample_checkerboard(const CheckerboardSpec& spec, RandomSource& rng, int n) {
    if (n < 1) throw std::invalid_argument("sample_checkerboard: n must be >= 1");
    std::vector<std::pair<int, int>> black;
    for (int j = 0; j < spec.grid_n; ++j)
        for (int i = 0; i < spec.grid_n; ++i)
            if (spec.black_parity(i, j)) black.emplace_back(i, j);
    std::vector<Vec2> out(static_cast<std::size_t>(n));
    for (auto& p : out) {
        const auto [i, j] = black[rng.next_below(black.size())];
        p.x = spec.origin_x + (i + rng.next_unit()) * spec.cell_side;
        p.y = spec.origin_y + (j + rng.next_unit()) * spec.cell_side;
    }
    return out;
}

// Vertices of the equilateral triangle of circumradius D centred at the
// origin; the target set is the source rotated 60 degrees.
std::array<Vec2, 3> GmmSpec::source_means() const {
    const double D = circumradius;
    const double s = std::sqrt(3.0) / 2.0;
    return {Vec2{D * s, D / 2.0}, Vec2{-D * s, D / 2.0}, Vec2{0.0, -D}};
}

std::array<Vec2, 3> GmmSpec::target_means() const {
    const double D = circumradius;
    const double s = std::sqrt(3.0) / 2.0;
    return {Vec2{D * s, -D / 2.0}, Vec2{-D * s, -D / 2.0}, Vec2{0.0, D}};
}

std::vector<Vec2> sample_gmm(RandomSource& rng, int n, const std::array<Vec2, 3>& means,
                             double variance) {
    if (n < 1) throw std::invalid_argument("sample_gmm: n must be >= 1");
    if (variance < 0.0) throw std::invalid_argument("sample_gmm: variance must be >= 0");
    const double sigma = std::sqrt(variance);
    std::vector<Vec2> out(static_cast<std::size_t>(n));
    for (auto& p : out) {
        const Vec2 mu = means[rng.next_below(3)];
        const Vec2 g = rng.next_gaussian_vec2();
        p = mu + sigma * g;
    }
    return out;
}

std::vector<Vec2> sample_gaussian_vec2(RandomSource& rng, int n) {
    if (n < 1) throw std::invalid_argument("sample_gaussian_vec2: n must be >= 1");
    std::vector<Vec2> out(static_cast<std::size_t>(n));
    for (auto& p : out) p = rng.next_gaussian_vec2();
    return out;
}

std::string benchmark_name(BenchmarkKind k) {
    return k == BenchmarkKind::checkerboard ? "checkerboard" : "gmm";
}

BenchmarkKind parse_benchmark(const std::string& name) {
    if (name == "checkerboard") return BenchmarkKind::checkerboard;
    if (name == "gmm") return BenchmarkKind::gmm;
    throw std::invalid_argument("unknown benchmark: " + name);
}

std::vector<Vec2> Benchmark::sample_source(RandomSource& rng, int n) const {
    if (kind == BenchmarkKind::checkerboard) return sample_gaussian_vec2(rng, n);
    return sample_gmm(rng, n, gmm.source_means(), gmm.variance);
}

std::vector<Vec2> Benchmark::sample_target(RandomSource& rng, int n) const {
    if (kind == BenchmarkKind::checkerboard) return sample_checkerboard(checkerboard, rng, n);
    return sample_gmm(rng, n, gmm.target_means(), gmm.variance);
}

void write_points_csv(const std::string& path, const std::vector<Vec2>& pts) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "x,y\n";
    os.precision(17);
    for (const auto& p : pts) os << p.x << "," << p.y << "\n";
    if (!os.good()) throw std::runtime_error("write failed: " + path);
}

} // namespace dsrf
