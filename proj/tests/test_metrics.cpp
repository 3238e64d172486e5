#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dsrf/metrics.hpp"
#include "test_fields.hpp"

using namespace dsrf;
using namespace dsrf::testing;

TEST_CASE("swd is zero on identical samples and rejects size mismatch") {
    RandomSource rng(1);
    const auto a = sample_gaussian_vec2(rng, 500);
    CHECK(sliced_wasserstein(a, a, 64, RandomSource(2)) == 0.0);

    const auto b = sample_gaussian_vec2(rng, 400);
    CHECK_THROWS_AS(sliced_wasserstein(a, b, 64, RandomSource(2)), std::invalid_argument);
}

TEST_CASE("singleton swd approaches (2/pi)|delta|") {
    const std::vector<Vec2> a = {{0.3, -0.7}};
    const std::vector<Vec2> b = {{1.3, -0.7}}; // delta = (1, 0)
    const double val = sliced_wasserstein(a, b, 100000, RandomSource(3));
    CHECK(std::abs(val - 2.0 / M_PI) <= 0.005);
}

TEST_CASE("swd is symmetric, nonnegative, and translation invariant") {
    RandomSource rng(4);
    const auto a = sample_gaussian_vec2(rng, 300);
    auto b = sample_gaussian_vec2(rng, 300);
    for (auto& p : b) p += Vec2{2.0, -1.0};

    const double ab = sliced_wasserstein(a, b, 128, RandomSource(5));
    const double ba = sliced_wasserstein(b, a, 128, RandomSource(5));
    CHECK(ab >= 0.0);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));

    const Vec2 shift{13.7, -4.2};
    std::vector<Vec2> a2 = a, b2 = b;
    for (auto& p : a2) p += shift;
    for (auto& p : b2) p += shift;
    const double shifted = sliced_wasserstein(a2, b2, 128, RandomSource(5));
    CHECK(std::abs(shifted - ab) <= 1e-12 * std::max(1.0, ab));
}

TEST_CASE("w1 order is exposed and differs from w2 on spread samples") {
    RandomSource rng(6);
    const auto a = sample_gaussian_vec2(rng, 256);
    auto b = sample_gaussian_vec2(rng, 256);
    for (auto& p : b) p = 3.0 * p;
    const double w2 = sliced_wasserstein(a, b, 64, RandomSource(7), SwdOrder::w2);
    const double w1 = sliced_wasserstein(a, b, 64, RandomSource(7), SwdOrder::w1);
    CHECK(w1 > 0.0);
    CHECK(w2 >= w1); // quadratic mean dominates the mean
}

TEST_CASE("forbidden fraction counts complements of the black cells") {
    CheckerboardSpec spec;
    RandomSource rng(8);
    const auto inside = sample_checkerboard(spec, rng, 2000);
    CHECK(forbidden_fraction(spec, inside) == 0.0);

    const std::vector<Vec2> outside(100, Vec2{10.0, 10.0});
    CHECK(forbidden_fraction(spec, outside) == 1.0);

    std::vector<Vec2> half = inside;
    half.resize(1000);
    half.insert(half.end(), 1000, Vec2{10.0, 10.0});
    CHECK(forbidden_fraction(spec, half) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("convergence field clips expansion and keeps contraction") {
    const std::vector<Vec2> pts = {{0.1, 0.2}, {-0.5, 0.7}, {1.1, -0.3}};
    const ModelParams contracting = make_linear_model({-1.0, 0.0, 0.0, -2.0}); // div = -3
    for (double c : convergence_field(contracting, pts, 0.5))
        CHECK(c == doctest::Approx(3.0).epsilon(1e-12));
    const ModelParams expanding = make_linear_model({1.0, 0.0, 0.0, 2.0}); // div = +3
    for (double c : convergence_field(expanding, pts, 0.5)) CHECK(c == 0.0);
}

TEST_CASE("mean absolute divergence on linear and zero fields") {
    const std::vector<Vec2> pts = {{0.3, 0.1}, {-0.9, 0.4}};
    const ModelParams zero = make_constant_model({0.0, 0.0});
    CHECK(mean_abs_divergence(zero, pts, 0.5) == 0.0);
    const ModelParams lin = make_linear_model({2.0, 0.0, 0.0, 3.0});
    CHECK(mean_abs_divergence(lin, pts, 0.5) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("compression score on closed-form linear flows") {
    RandomSource rng(9);
    const auto x0 = sample_gaussian_vec2(rng, 16);

    // zero field: identity flow map
    const ModelParams zero = make_constant_model({0.0, 0.0});
    for (double s : compression_score(zero, x0, 20, 0.05).scores)
        CHECK(s <= 1e-12); // identity map up to fd rounding

    // contracting field v = -x: continuous score at t = 1/2 is 1, the
    // 10-step Euler factor is (1 - 1/20)^10 per axis
    const ModelParams contracting = make_linear_model({-1.0, 0.0, 0.0, -1.0});
    const double discrete = -std::log(std::pow(0.95, 20));
    for (double s : compression_score(contracting, x0, 20, 0.05).scores) {
        CHECK(s == doctest::Approx(discrete).epsilon(1e-8)); // exact discrete oracle
        CHECK(std::abs(s - 1.0) < 0.03);                     // continuous value
    }

    // expanding field clips to zero
    const ModelParams expanding = make_linear_model({1.0, 0.0, 0.0, 1.0});
    for (double s : compression_score(expanding, x0, 20, 0.05).scores) CHECK(s <= 1e-12);
}

TEST_CASE("per-step log-determinant accumulation matches the linear closed form") {
    const Mat2 a{-0.8, 0.3, 0.2, -1.1};
    LinearField f(a);
    const double dt = 1.0 / 20;
    const Mat2 step{1 + dt * a.xx, dt * a.xy, dt * a.yx, 1 + dt * a.yy};
    const FlowLogDet out = euler_with_logdet(f, {0.4, -0.6}, 20, 10);
    CHECK(out.logdet == doctest::Approx(10.0 * std::log(step.det())).epsilon(1e-8));
}

TEST_CASE("pearson and spearman on pinned examples") {
    const std::vector<double> xs = {1, 2, 3, 4};
    const std::vector<double> lin = {3, 5, 7, 9}; // 2x + 1
    CHECK(*pearson(xs, lin) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*spearman(xs, lin) == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<double> neg = {-1, -2, -3, -4};
    CHECK(*pearson(xs, neg) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(*spearman(xs, neg) == doctest::Approx(-1.0).epsilon(1e-12));

    const std::vector<double> ys = {1, 3, 2, 4};
    CHECK(*spearman(xs, ys) == doctest::Approx(0.8).epsilon(1e-12)); // 1 - 6*2/60

    const std::vector<double> flat = {5, 5, 5, 5};
    CHECK_FALSE(pearson(xs, flat).has_value());
}

TEST_CASE("spearman is invariant under strictly monotone transforms") {
    RandomSource rng(10);
    std::vector<double> xs(64), ys(64);
    for (auto& v : xs) v = rng.next_unit();
    for (auto& v : ys) v = rng.next_unit();
    const double base = *spearman(xs, ys);
    std::vector<double> xs_t = xs, ys_t = ys;
    for (auto& v : xs_t) v = std::exp(3.0 * v);
    for (auto& v : ys_t) v = std::atan(10.0 * v - 5.0);
    CHECK(*spearman(xs_t, ys_t) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("crossing proxy on constructed configurations") {
    const std::vector<Vec2> parallel_v(10, Vec2{1.0, 0.0});
    RandomSource rng(11);
    const auto pts = sample_gaussian_vec2(rng, 10);
    CHECK(crossing_proxy(pts, parallel_v, 0.05) == 0.0);

    const std::vector<Vec2> two = {{0.0, 0.0}, {0.0, 0.0}};
    const std::vector<Vec2> opposite = {{1.0, 0.0}, {-1.0, 0.0}};
    CHECK(crossing_proxy(two, opposite, 0.05) == 1.0);

    const std::vector<Vec2> far = {{0.0, 0.0}, {10.0, 0.0}};
    CHECK(crossing_proxy(far, opposite, 0.05) == 0.0);
}

TEST_CASE("mechanism study on the zero model reports undefined correlations") {
    const ModelParams zero = make_constant_model({0.0, 0.0});
    std::vector<ModelParams> models = {zero};
    const auto stats = mechanism_study(models, 64, 20, 123);
    REQUIRE(stats.size() == 1);
    CHECK_FALSE(stats[0].pearson_r.has_value());
    CHECK_FALSE(stats[0].spearman_rho.has_value());
    CHECK(stats[0].mean_abs_div == 0.0);
    for (const auto& r : stats[0].records) {
        CHECK(r.convergence == 0.0);
        CHECK(r.compression <= 1e-12);
    }
}

TEST_CASE("convergence and compression agree with finite differences on a net") {
    ModelSpec spec;
    spec.hidden_widths = {24, 24};
    const ModelParams p = init_params(spec, RandomSource(12));
    MlpScratch ws(spec);
    RandomSource rng(13);
    const double h = 1e-5;
    for (int rep = 0; rep < 20; ++rep) {
        const Vec2 x = rng.next_gaussian_vec2();
        const double div = exact_divergence2(p, 0.5, x, ws);
        const double fd =
            (mlp_forward2(p, 0.5, {x.x + h, x.y}, ws).x - mlp_forward2(p, 0.5, {x.x - h, x.y}, ws).x +
             mlp_forward2(p, 0.5, {x.x, x.y + h}, ws).y - mlp_forward2(p, 0.5, {x.x, x.y - h}, ws).y) /
            (2 * h);
        if (std::abs(div - fd) > 1e-5) continue; // rare kink within h; skip
        const std::vector<Vec2> one = {x};
        const double c = convergence_field(p, one, 0.5)[0];
        CHECK(c == doctest::Approx(std::max(0.0, -div)).epsilon(1e-12));
    }
}
