#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dsrf/benchmarks.hpp"
#include "dsrf/coupling.hpp"
#include "dsrf/field.hpp"
#include "dsrf/rng.hpp"
#include "dsrf/vec2.hpp"

namespace dsrf {

enum class SolverKind { euler, ds_project_2d, ds_search, rkf45, rkf45_ds };

std::string solver_name(SolverKind k);
SolverKind parse_solver(const std::string& name);

/// Configuration for every forward solver. Only the fields relevant to
/// `kind` are read.
struct IntegratorSpec {
    SolverKind kind = SolverKind::euler;
    int n_steps = 20;        // N, fixed-step solvers
    double alpha = 0.5;      // 2D projection strength, in [0, 1]
    double fd_step = 1e-3;   // h, finite-difference probe for the projection
    double delta = 0.05;     // search radius around the state
    int candidates = 8;      // m, perturbed states per corrected step
    int hutch_probes = 8;    // n_h, probes per divergence estimate
    double t_stop = 0.5;     // correct only while t <= t_stop
    double rk_tol = 1e-6;    // adaptive error tolerance (absolute)
    double div_budget = 0.0; // optional gate: skip search when |est| <= budget

    void validate() const;

    /// Steps with index i < ceil(t_stop * N) are corrected; at the Table-6
    /// defaults (t_stop = 0.5, N = 20) that is exactly 10 of 20 steps.
    int corrected_step_count(int n) const;
};

struct Trajectory {
    std::vector<double> times;       // n_steps + 1, strictly increasing 0 -> 1
    std::vector<Vec2> states;        // aligned with times
    std::vector<bool> corrected;     // per step: a correction was attempted
};

/// Fixed-step forward Euler on the uniform grid t_i = i/N. Throws (with the
/// step index) if the state goes non-finite.
Vec2 euler(VelocityField& f, Vec2 x0, int n_steps, Trajectory* traj = nullptr);

/// First n_run steps of the N-step Euler grid (flow map to t = n_run/N).
Vec2 euler_partial(VelocityField& f, Vec2 x0, int n_steps, int n_run);

/// First-order 2D correction: estimates the gradient of |div v| with one
/// finite-difference probe along a random unit direction u and removes an
/// alpha-scaled component from the velocity:
///   g = ((div(x + h u) - div(x)) / h) u
///   v <- v - alpha * (|v| / |g|) * sign(div(x)) * g
/// Returns v unchanged when |div(x)| < 1e-10 or |g| < 1e-8.
Vec2 ds_project_velocity(VelocityField& f, double t, Vec2 x, const IntegratorSpec& spec,
                         RandomSource& probe_rng);

/// Same with a caller-fixed probe direction (unit norm), for oracle tests.
Vec2 ds_project_velocity_with_probe(VelocityField& f, double t, Vec2 x,
                                    const IntegratorSpec& spec, Vec2 probe_dir);

/// Euler with the 2D projection applied on steps i < ceil(t_stop * N).
Vec2 euler_ds_project(VelocityField& f, Vec2 x0, const IntegratorSpec& spec,
                      RandomSource probe_rng, Trajectory* traj = nullptr);

struct SearchResult {
    Vec2 x;          // state with the smallest |estimate|
    Vec2 v;          // velocity co-computed at that state
    double estimate; // its normalised divergence estimate
    bool moved;      // a candidate strictly beat the incumbent
};

/// Neighbour search: evaluates the Hutchinson estimate at x and at m
/// Gaussian perturbations x + delta*xi, and keeps the state with the
/// smallest |estimate|. Ties keep the incumbent (strict improvement only).
/// Cost: exactly (m+1) estimates of (1 + n_h) model passes each.
SearchResult hutchinson_search_correct(VelocityField& f, Vec2 x, double t,
                                       const IntegratorSpec& spec,
                                       RandomSource& perturb_rng, RandomSource& probe_rng);

/// Batched form; samples are independent, each corrected in place.
std::vector<SearchResult> hutchinson_search_correct_batch(VelocityField& f,
                                                          std::span<const Vec2> xs, double t,
                                                          const IntegratorSpec& spec,
                                                          RandomSource& perturb_rng,
                                                          RandomSource& probe_rng);

/// Euler advancing corrected steps from the searched state:
///   x <- x* + v(x*, t) dt   for steps i < ceil(t_stop * N).
/// With div_budget > 0, the candidate search is skipped whenever the
/// incumbent estimate already satisfies |est| <= budget.
/// Identical to plain euler (bit-exact) when delta = 0, m = 0 or t_stop = 0.
Vec2 euler_ds_search(VelocityField& f, Vec2 x0, const IntegratorSpec& spec,
                     RandomSource perturb_rng, RandomSource probe_rng,
                     Trajectory* traj = nullptr);

struct RkStats {
    int accepted = 0;
    int rejected = 0;
    int corrections_run = 0;    // accepted steps where the search ran
    int corrections_moved = 0;  // of those, state actually replaced
    std::uint64_t base_passes = 0;      // tableau stages + slope refreshes
    std::uint64_t search_passes = 0;    // spent inside the neighbour search
    std::uint64_t recompute_passes = 0; // slope recomputed after a move
};

/// Runge-Kutta-Fehlberg 4(5), absolute error control, classic tableau.
/// Controller: accept when err <= tol, step factor 0.9*(tol/err)^(1/5)
/// clamped to [0.2, 5]; the first attempted step spans the whole interval.
/// The stage-1 slope is cached across attempts of the same step.
/// Throws when the step size underflows 1e-10.
Vec2 rkf45(VelocityField& f, Vec2 x0, double tol, RkStats* stats = nullptr);

/// rkf45 with the neighbour search applied once per accepted step while
/// t <= t_stop: the accepted state is replaced when the search improves it,
/// and the cached slope is recomputed at the new state.
Vec2 rkf45_ds(VelocityField& f, Vec2 x0, const IntegratorSpec& spec,
              RandomSource perturb_rng, RandomSource probe_rng, RkStats* stats = nullptr);

/// Dispatch on spec.kind.
Vec2 integrate_one(VelocityField& f, Vec2 x0, const IntegratorSpec& spec,
                   RandomSource perturb_rng, RandomSource probe_rng);

/// Draw n sources from the benchmark's source distribution and integrate
/// each under the model. Source draws, search perturbations and Hutchinson
/// probes come from three distinct split streams, so switching solvers never
/// changes the x0 list. Sample i always gets streams split(i): the result is
/// byte-identical for any worker count. The _serial variant is the
/// single-thread reference for the parallel kernel.
Coupling generate_coupling(const ModelParams& params, RandomSource source_rng, int n,
                           const IntegratorSpec& spec, const Benchmark& bench, int round = 0);
Coupling generate_coupling_serial(const ModelParams& params, RandomSource source_rng, int n,
                                  const IntegratorSpec& spec, const Benchmark& bench,
                                  int round = 0);

} // namespace dsrf
