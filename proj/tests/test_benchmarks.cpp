#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <map>

#include "dsrf/benchmarks.hpp"

using namespace dsrf;

TEST_CASE("black cell membership at the stated boundaries") {
    const CheckerboardSpec spec;
    CHECK(in_black_cell(spec, {-0.9, -0.9}));          // lower corner included
    CHECK_FALSE(in_black_cell(spec, {10.0, 10.0}));    // outside the grid
    CHECK_FALSE(in_black_cell(spec, {-0.45 + 1e-9, -0.9})); // cell (1,0), odd parity
    CHECK_FALSE(in_black_cell(spec, {-0.45, -0.9}));   // half-open: boundary goes right
    CHECK(in_black_cell(spec, {0.0, 0.0}));            // cell (2,2), even
    CHECK_FALSE(in_black_cell(spec, {0.9, 0.0}));      // right edge excluded
}

TEST_CASE("flipping the parity inverts membership inside the grid") {
    CheckerboardSpec flipped;
    flipped.flip_parity = true;
    const CheckerboardSpec spec;
    RandomSource rng(2);
    for (int i = 0; i < 1000; ++i) {
        const Vec2 p{-0.9 + 1.8 * rng.next_unit(), -0.9 + 1.8 * rng.next_unit()};
        CHECK(in_black_cell(spec, p) != in_black_cell(flipped, p));
    }
}

TEST_CASE("checkerboard sampler lands only in black cells, uniformly") {
    const CheckerboardSpec spec;
    RandomSource rng(3);
    const int n = 80000;
    const auto pts = sample_checkerboard(spec, rng, n);
    std::map<std::pair<int, int>, int> counts;
    for (const Vec2& p : pts) {
        CHECK(in_black_cell(spec, p));
        CHECK(p.x >= -0.9);
        CHECK(p.x < 0.9);
        CHECK(p.y >= -0.9);
        CHECK(p.y < 0.9);
        const int i = static_cast<int>((p.x + 0.9) / 0.45);
        const int j = static_cast<int>((p.y + 0.9) / 0.45);
        counts[{i, j}] += 1;
    }
    CHECK(counts.size() == 8);
    const double expected = n / 8.0;
    const double sigma = std::sqrt(n * (1.0 / 8) * (7.0 / 8));
    for (const auto& [cell, c] : counts) CHECK(std::abs(c - expected) < 3 * sigma);
}

TEST_CASE("black area estimate from the bounding box") {
    const CheckerboardSpec spec;
    RandomSource rng(4);
    const int n = 400000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        const Vec2 p{-0.9 + 1.8 * rng.next_unit(), -0.9 + 1.8 * rng.next_unit()};
        hits += in_black_cell(spec, p);
    }
    const double area = 1.8 * 1.8 * hits / n;
    CHECK(area == doctest::Approx(8 * 0.45 * 0.45).epsilon(0.01));
}

TEST_CASE("gmm target means are the source means rotated 60 degrees") {
    const GmmSpec g;
    const auto src = g.source_means();
    const auto tgt = g.target_means();
    const double c = 0.5, s = std::sqrt(3.0) / 2.0;
    for (const Vec2& m : src) {
        const Vec2 rot{c * m.x - s * m.y, s * m.x + c * m.y};
        double best = 1e300;
        for (const Vec2& t : tgt) best = std::min(best, norm(rot - t));
        CHECK(best <= 1e-12);
    }
    for (const Vec2& m : src) CHECK(norm(m) == doctest::Approx(g.circumradius).epsilon(1e-14));
}

TEST_CASE("gmm sampler moments and mode balance") {
    const GmmSpec g;
    RandomSource rng(5);
    const int n = 100000;
    const auto pts = sample_gmm(rng, n, g.source_means(), g.variance);

    Vec2 mean{};
    for (const Vec2& p : pts) mean += p;
    mean = (1.0 / n) * mean;
    Vec2 mode_mean{};
    for (const Vec2& m : g.source_means()) mode_mean += m;
    mode_mean = (1.0 / 3) * mode_mean;
    CHECK(std::abs(mean.x - mode_mean.x) < 0.05);
    CHECK(std::abs(mean.y - mode_mean.y) < 0.05);

    // nearest-mode classification: modes are ~17 sigma apart
    std::array<int, 3> counts{};
    for (const Vec2& p : pts) {
        int best = 0;
        for (int k = 1; k < 3; ++k)
            if (norm(p - g.source_means()[k]) < norm(p - g.source_means()[best])) best = k;
        counts[best] += 1;
    }
    const double sigma = std::sqrt(n * (1.0 / 3) * (2.0 / 3));
    for (int c3 : counts) CHECK(std::abs(c3 - n / 3.0) < 3 * sigma);
}

TEST_CASE("zero-variance gmm collapses to the mode centres") {
    const GmmSpec g;
    RandomSource rng(6);
    const auto pts = sample_gmm(rng, 200, g.target_means(), 0.0);
    for (const Vec2& p : pts) {
        double best = 1e300;
        for (const Vec2& m : g.target_means()) best = std::min(best, norm(p - m));
        CHECK(best == 0.0);
    }
}

TEST_CASE("benchmark bundles select the right source and target") {
    Benchmark cb;
    cb.kind = BenchmarkKind::checkerboard;
    RandomSource rng(7);
    for (const Vec2& p : cb.sample_target(rng, 500)) CHECK(in_black_cell(cb.checkerboard, p));

    Benchmark gmm;
    gmm.kind = BenchmarkKind::gmm;
    RandomSource rng2(8);
    const auto src = gmm.sample_source(rng2, 500);
    for (const Vec2& p : src) {
        double best = 1e300;
        for (const Vec2& m : gmm.gmm.source_means()) best = std::min(best, norm(p - m));
        CHECK(best < 6.0 * std::sqrt(gmm.gmm.variance));
    }
}
