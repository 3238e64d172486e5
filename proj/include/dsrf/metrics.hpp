#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsrf/benchmarks.hpp"
#include "dsrf/field.hpp"
#include "dsrf/mlp.hpp"
#include "dsrf/rng.hpp"
#include "dsrf/vec2.hpp"

namespace dsrf {

enum class SwdOrder { w1, w2 };

/// Sliced Wasserstein distance between equal-size empirical samples: the
/// mean over n_proj uniform directions of the 1D transport cost between
/// sorted projections. Order 2 (the default) uses
/// W2(theta) = sqrt(mean_i (sort(theta.a)_i - sort(theta.b)_i)^2);
/// order 1 uses the mean absolute quantile difference.
/// Projections are parallelised; the per-direction results are reduced in
/// direction order, so the value is worker-count independent. The _serial
/// variant is the reference implementation.
double sliced_wasserstein(std::span<const Vec2> a, std::span<const Vec2> b, int n_proj,
                          RandomSource rng, SwdOrder order = SwdOrder::w2);
double sliced_wasserstein_serial(std::span<const Vec2> a, std::span<const Vec2> b, int n_proj,
                                 RandomSource rng, SwdOrder order = SwdOrder::w2);

/// Share of samples outside the benchmark's black cells.
double forbidden_fraction(const CheckerboardSpec& spec, std::span<const Vec2> samples);

/// c(x) = max(0, -div v(t, x)) per point.
std::vector<double> convergence_field(const ModelParams& params, std::span<const Vec2> points,
                                      double t);

/// Mean over points of |div v(t, .)|.
double mean_abs_divergence(const ModelParams& params, std::span<const Vec2> points, double t);

struct CompressionResult {
    std::vector<double> scores;
    int capped = 0;  // points where |det J| underflowed 1e-300
};

/// Cumulative volume contraction of the flow map to t = 1/2:
/// s(x0) = max(0, -log|det J|), with J the Jacobian of the Euler rollout
/// over the first n_steps/2 of n_steps steps, estimated column-wise by
/// central differences of step fd_eps along the canonical axes.
CompressionResult compression_score(const ModelParams& params, std::span<const Vec2> x0_batch,
                                    int n_steps, double fd_eps);

/// Sample Pearson correlation; empty when either argument has zero variance.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

/// Spearman rank correlation with average ranks on ties.
std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys);

/// Fraction of points with a neighbour within `radius` whose velocity points
/// against its own (angle > 90 degrees). A stand-in diagnostic: trajectory
/// crossings have no unique finite-sample definition.
double crossing_proxy(std::span<const Vec2> states, std::span<const Vec2> velocities,
                      double radius);

struct FlowLogDet {
    Vec2 endpoint;
    double logdet = 0.0;
};

/// Euler rollout accumulating log|det(I + dt J_v)| per step - the discrete
/// form of d/dt log|det J| = div v along the trajectory.
FlowLogDet euler_with_logdet(VelocityField& f, Vec2 x0, int n_steps, int n_run);

struct MechanismRecord {
    Vec2 x0;
    Vec2 x_half;
    double convergence = 0.0;
    double compression = 0.0;
};

struct MechanismStats {
    std::optional<double> pearson_r;
    std::optional<double> spearman_rho;
    double mean_abs_div = 0.0;
    double crossing_fraction = 0.0;
    int capped = 0;
    std::vector<MechanismRecord> records;
};

/// Per-trajectory pairing of instantaneous convergence c(x_half) with the
/// cumulative compression s(x0) on shared Gaussian starting points: each x0
/// is rolled to t = 1/2 under plain Euler (n_steps/2 of n_steps steps) and
/// both quantities are evaluated there.
MechanismStats mechanism_study_one(const ModelParams& params, std::span<const Vec2> x0s,
                                   int n_steps = 20, double fd_eps = 0.05, double tau = 0.05);

/// Runs the analysis for several checkpoints on one shared x0 draw.
std::vector<MechanismStats> mechanism_study(std::span<const ModelParams> models, int n,
                                            int n_steps, std::uint64_t seed);

/// Record dump, header "x0_x,x0_y,xh_x,xh_y,convergence,compression".
void save_mechanism_records(const std::vector<MechanismRecord>& records, const std::string& path);

} // namespace dsrf
