#include "dsrf/integrators.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dsrf {

std::string solver_name(SolverKind k) {
    switch (k) {
        case SolverKind::euler: return "euler";
        case SolverKind::ds_project_2d: return "ds_project_2d";
        case SolverKind::ds_search: return "ds_search";
        case SolverKind::rkf45: return "rkf45";
        case SolverKind::rkf45_ds: return "rkf45_ds";
    }
    return "?";
}

SolverKind parse_solver(const std::string& name) {
    if (name == "euler") return SolverKind::euler;
    if (name == "ds_project_2d") return SolverKind::ds_project_2d;
    if (name == "ds_search") return SolverKind::ds_search;
    if (name == "rkf45") return SolverKind::rkf45;
    if (name == "rkf45_ds") return SolverKind::rkf45_ds;
    throw std::invalid_argument("unknown solver: " + name);
}

void IntegratorSpec::validate() const {
    if (t_stop < 0.0 || t_stop > 1.0)
        throw std::invalid_argument("IntegratorSpec: t_stop must be in [0, 1]");
    switch (kind) {
        case SolverKind::euler:
            if (n_steps < 1) throw std::invalid_argument("IntegratorSpec: n_steps must be >= 1");
            break;
        case SolverKind::ds_project_2d:
            if (n_steps < 1) throw std::invalid_argument("IntegratorSpec: n_steps must be >= 1");
            if (alpha < 0.0 || alpha > 1.0)
                throw std::invalid_argument("IntegratorSpec: alpha must be in [0, 1]");
            if (fd_step <= 0.0) throw std::invalid_argument("IntegratorSpec: fd_step must be > 0");
            break;
        case SolverKind::ds_search:
            if (n_steps < 1) throw std::invalid_argument("IntegratorSpec: n_steps must be >= 1");
            if (delta < 0.0) throw std::invalid_argument("IntegratorSpec: delta must be >= 0");
            if (candidates < 0) throw std::invalid_argument("IntegratorSpec: candidates must be >= 0");
            if (hutch_probes < 1) throw std::invalid_argument("IntegratorSpec: hutch_probes must be >= 1");
            if (div_budget < 0.0) throw std::invalid_argument("IntegratorSpec: div_budget must be >= 0");
            break;
        case SolverKind::rkf45:
            if (rk_tol <= 0.0) throw std::invalid_argument("IntegratorSpec: rk_tol must be > 0");
            break;
        case SolverKind::rkf45_ds:
            if (rk_tol <= 0.0) throw std::invalid_argument("IntegratorSpec: rk_tol must be > 0");
            if (delta < 0.0) throw std::invalid_argument("IntegratorSpec: delta must be >= 0");
            if (candidates < 0) throw std::invalid_argument("IntegratorSpec: candidates must be >= 0");
            if (hutch_probes < 1) throw std::invalid_argument("IntegratorSpec: hutch_probes must be >= 1");
            break;
    }
}

int IntegratorSpec::corrected_step_count(int n) const {
    const int k = static_cast<int>(std::ceil(t_stop * n));
    return std::clamp(k, 0, n);
}

namespace {

void check_finite_state(Vec2 x, int step) {
    if (!x.finite())
        throw std::runtime_error("integrator: non-finite state at step " + std::to_string(step));
}

void traj_begin(Trajectory* traj, Vec2 x0) {
    if (!traj) return;
    traj->times.assign(1, 0.0);
    traj->states.assign(1, x0);
    traj->corrected.clear();
}

void traj_push(Trajectory* traj, double t, Vec2 x, bool corrected) {
    if (!traj) return;
    traj->times.push_back(t);
    traj->states.push_back(x);
    traj->corrected.push_back(corrected);
}

} // namespace

Vec2 euler(VelocityField& f, Vec2 x0, int n_steps, Trajectory* traj) {
    if (n_steps < 1) throw std::invalid_argument("euler: n_steps must be >= 1");
    const double dt = 1.0 / n_steps;
    Vec2 x = x0;
    traj_begin(traj, x0);
    for (int i = 0; i < n_steps; ++i) {
        const double t = static_cast<double>(i) / n_steps;
        x += dt * f.velocity(t, x);
        check_finite_state(x, i);
        traj_push(traj, static_cast<double>(i + 1) / n_steps, x, false);
    }
    return x;
}

Vec2 euler_partial(VelocityField& f, Vec2 x0, int n_steps, int n_run) {
    if (n_steps < 1 || n_run < 0 || n_run > n_steps)
        throw std::invalid_argument("euler_partial: need 0 <= n_run <= n_steps");
    const double dt = 1.0 / n_steps;
    Vec2 x = x0;
    for (int i = 0; i < n_run; ++i) {
        x += dt * f.velocity(static_cast<double>(i) / n_steps, x);
        check_finite_state(x, i);
    }
    return x;
}

namespace {

Vec2 ds_project_impl(VelocityField& f, double t, Vec2 x, const IntegratorSpec& spec, Vec2 u) {
    const Vec2 v0 = f.velocity(t, x);
    const double d0 = f.divergence(t, x);
    if (std::abs(d0) < 1e-10) return v0; // sign(0) = 0
    const double dp = f.divergence(t, x + spec.fd_step * u);
    const double slope = (dp - d0) / spec.fd_step;
    const Vec2 g = slope * u;
    const double gn = norm(g);
    if (gn < 1e-8) return v0; // divergence locally constant along the probe
    const double sgn = d0 > 0.0 ? 1.0 : -1.0;
    return v0 - (spec.alpha * norm(v0) * sgn / gn) * g;
}

} // namespace

Vec2 ds_project_velocity(VelocityField& f, double t, Vec2 x, const IntegratorSpec& spec,
                         RandomSource& probe_rng) {
    return ds_project_impl(f, t, x, spec, sample_unit_sphere_vec2(probe_rng));
}

Vec2 ds_project_velocity_with_probe(VelocityField& f, double t, Vec2 x,
                                    const IntegratorSpec& spec, Vec2 probe_dir) {
    return ds_project_impl(f, t, x, spec, probe_dir);
}

Vec2 euler_ds_project(VelocityField& f, Vec2 x0, const IntegratorSpec& spec,
                      RandomSource probe_rng, Trajectory* traj) {
    if (spec.n_steps < 1) throw std::invalid_argument("euler_ds_project: n_steps must be >= 1");
    const int n = spec.n_steps;
    const int kc = spec.corrected_step_count(n);
    const double dt = 1.0 / n;
    Vec2 x = x0;
    traj_begin(traj, x0);
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / n;
        const bool correct = i < kc && spec.alpha > 0.0;
        const Vec2 v = correct ? ds_project_velocity(f, t, x, spec, probe_rng)
                               : f.velocity(t, x);
        x += dt * v;
        check_finite_state(x, i);
        traj_push(traj, static_cast<double>(i + 1) / n, x, correct);
    }
    return x;
}

namespace {

SearchResult search_with_incumbent(VelocityField& f, Vec2 x, double t,
                                   const IntegratorSpec& spec, const DivEstimate2& incumbent,
                                   RandomSource& perturb_rng, RandomSource& probe_rng) {
    SearchResult best{x, incumbent.velocity, incumbent.value, false};
    for (int j = 0; j < spec.candidates; ++j) {
        const Vec2 xj = x + spec.delta * perturb_rng.next_gaussian_vec2();
        const DivEstimate2 ej = f.hutchinson(t, xj, probe_rng, spec.hutch_probes);
        if (std::abs(ej.value) < std::abs(best.estimate)) {
            best = {xj, ej.velocity, ej.value, true};
        }
    }
    return best;
}

} // namespace

SearchResult hutchinson_search_correct(VelocityField& f, Vec2 x, double t,
                                       const IntegratorSpec& spec,
                                       RandomSource& perturb_rng, RandomSource& probe_rng) {
    const DivEstimate2 incumbent = f.hutchinson(t, x, probe_rng, spec.hutch_probes);
    return search_with_incumbent(f, x, t, spec, incumbent, perturb_rng, probe_rng);
}

std::vector<SearchResult> hutchinson_search_correct_batch(VelocityField& f,
                                                          std::span<const Vec2> xs, double t,
                                                          const IntegratorSpec& spec,
                                                          RandomSource& perturb_rng,
                                                          RandomSource& probe_rng) {
    std::vector<SearchResult> out;
    out.reserve(xs.size());
    for (const Vec2& x : xs)
        out.push_back(hutchinson_search_correct(f, x, t, spec, perturb_rng, probe_rng));
    return out;
}

Vec2 euler_ds_search(VelocityField& f, Vec2 x0, const IntegratorSpec& spec,
                     RandomSource perturb_rng, RandomSource probe_rng, Trajectory* traj) {
    if (spec.n_steps < 1) throw std::invalid_argument("euler_ds_search: n_steps must be >= 1");
    const int n = spec.n_steps;
    const int kc = spec.corrected_step_count(n);
    const double dt = 1.0 / n;
    Vec2 x = x0;
    traj_begin(traj, x0);
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / n;
        bool correct = i < kc;
        if (correct) {
            const DivEstimate2 incumbent = f.hutchinson(t, x, probe_rng, spec.hutch_probes);
            if (spec.div_budget > 0.0 && std::abs(incumbent.value) <= spec.div_budget) {
                x += dt * incumbent.velocity; // already inside the budget
            } else {
                const SearchResult res =
                    search_with_incumbent(f, x, t, spec, incumbent, perturb_rng, probe_rng);
                x = res.x + dt * res.v;
            }
        } else {
            x += dt * f.velocity(t, x);
        }
        check_finite_state(x, i);
        traj_push(traj, static_cast<double>(i + 1) / n, x, correct);
    }
    return x;
}

// --- adaptive Fehlberg 4(5) ---------------------------------------------------

namespace {

constexpr double kC2 = 1.0 / 4, kC3 = 3.0 / 8, kC4 = 12.0 / 13, kC5 = 1.0, kC6 = 1.0 / 2;
constexpr double kA21 = 1.0 / 4;
constexpr double kA31 = 3.0 / 32, kA32 = 9.0 / 32;
constexpr double kA41 = 1932.0 / 2197, kA42 = -7200.0 / 2197, kA43 = 7296.0 / 2197;
constexpr double kA51 = 439.0 / 216, kA52 = -8.0, kA53 = 3680.0 / 513, kA54 = -845.0 / 4104;
constexpr double kA61 = -8.0 / 27, kA62 = 2.0, kA63 = -3544.0 / 2565, kA64 = 1859.0 / 4104,
                 kA65 = -11.0 / 40;
constexpr double kB41 = 25.0 / 216, kB43 = 1408.0 / 2565, kB44 = 2197.0 / 4104, kB45 = -1.0 / 5;
constexpr double kB51 = 16.0 / 135, kB53 = 6656.0 / 12825, kB54 = 28561.0 / 56430,
                 kB55 = -9.0 / 50, kB56 = 2.0 / 55;

constexpr double kMinStep = 1e-10;
constexpr double kTimeEps = 1e-14;

struct DsHook {
    const IntegratorSpec* spec = nullptr;
    RandomSource* perturb = nullptr;
    RandomSource* probes = nullptr;
};

Vec2 rkf45_impl(VelocityField& f, Vec2 x0, double tol, RkStats* stats, const DsHook& ds) {
    if (tol <= 0.0) throw std::invalid_argument("rkf45: tolerance must be > 0");
    RkStats local;
    RkStats& st = stats ? *stats : local;

    double t = 0.0;
    double h = 1.0; // first attempt spans the remaining interval
    Vec2 x = x0;
    std::uint64_t mark = f.passes();
    Vec2 k1 = f.velocity(t, x); // cached across rejected attempts
    st.base_passes += f.passes() - mark;
    int step_index = 0;

    while (t < 1.0 - kTimeEps) {
        h = std::min(h, 1.0 - t);
        if (h < kMinStep)
            throw std::runtime_error("rkf45: step size underflow at t = " + std::to_string(t));

        mark = f.passes();
        const Vec2 k2 = f.velocity(t + kC2 * h, x + h * (kA21 * k1));
        const Vec2 k3 = f.velocity(t + kC3 * h, x + h * (kA31 * k1 + kA32 * k2));
        const Vec2 k4 = f.velocity(t + kC4 * h, x + h * (kA41 * k1 + kA42 * k2 + kA43 * k3));
        const Vec2 k5 =
            f.velocity(t + kC5 * h, x + h * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4));
        const Vec2 k6 = f.velocity(
            t + kC6 * h, x + h * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5));
        st.base_passes += f.passes() - mark;

        const Vec2 x4 = x + h * (kB41 * k1 + kB43 * k3 + kB44 * k4 + kB45 * k5);
        const Vec2 x5 = x + h * (kB51 * k1 + kB53 * k3 + kB54 * k4 + kB55 * k5 + kB56 * k6);
        const double err = norm(x5 - x4);

        if (err <= tol) {
            t += h;
            x = x4;
            check_finite_state(x, step_index);
            st.accepted += 1;
            bool slope_stale = true;

            if (ds.spec && t <= ds.spec->t_stop + kTimeEps && t < 1.0 - kTimeEps) {
                mark = f.passes();
                const SearchResult res =
                    hutchinson_search_correct(f, x, t, *ds.spec, *ds.perturb, *ds.probes);
                st.search_passes += f.passes() - mark;
                st.corrections_run += 1;
                if (res.moved) {
                    st.corrections_moved += 1;
                    x = res.x;
                    mark = f.passes();
                    k1 = f.velocity(t, x); // keep the cached slope consistent
                    st.recompute_passes += f.passes() - mark;
                    slope_stale = false;
                }
            }
            if (t < 1.0 - kTimeEps && slope_stale) {
                mark = f.passes();
                k1 = f.velocity(t, x);
                st.base_passes += f.passes() - mark;
            }
        } else {
            st.rejected += 1;
        }

        const double safe_err = std::max(err, 1e-300);
        const double fac = std::clamp(0.9 * std::pow(tol / safe_err, 0.2), 0.2, 5.0);
        h *= fac;
        ++step_index;
    }
    return x;
}

} // namespace

Vec2 rkf45(VelocityField& f, Vec2 x0, double tol, RkStats* stats) {
    return rkf45_impl(f, x0, tol, stats, {});
}

Vec2 rkf45_ds(VelocityField& f, Vec2 x0, const IntegratorSpec& spec,
              RandomSource perturb_rng, RandomSource probe_rng, RkStats* stats) {
    spec.validate();
    DsHook ds{&spec, &perturb_rng, &probe_rng};
    return rkf45_impl(f, x0, spec.rk_tol, stats, ds);
}

Vec2 integrate_one(VelocityField& f, Vec2 x0, const IntegratorSpec& spec,
                   RandomSource perturb_rng, RandomSource probe_rng) {
    switch (spec.kind) {
        case SolverKind::euler: return euler(f, x0, spec.n_steps);
        case SolverKind::ds_project_2d: return euler_ds_project(f, x0, spec, probe_rng);
        case SolverKind::ds_search: return euler_ds_search(f, x0, spec, perturb_rng, probe_rng);
        case SolverKind::rkf45: return rkf45(f, x0, spec.rk_tol);
        case SolverKind::rkf45_ds: return rkf45_ds(f, x0, spec, perturb_rng, probe_rng);
    }
    throw std::logic_error("integrate_one: unknown solver kind");
}

namespace {

Coupling generate_coupling_impl(const ModelParams& params, RandomSource source_rng, int n,
                                const IntegratorSpec& spec, const Benchmark& bench, int round,
                                bool parallel) {
    if (n < 1) throw std::invalid_argument("generate_coupling: n must be >= 1");
    spec.validate();

    // Three split streams keep source draws identical across solver choices.
    RandomSource src = source_rng.split(0);
    const RandomSource perturb_root = source_rng.split(1);
    const RandomSource probe_root = source_rng.split(2);

    Coupling c;
    c.x0 = bench.sample_source(src, n);
    c.x1.resize(c.x0.size());
    c.round = round;
    c.generator = solver_name(spec.kind);
    c.seed = source_rng.seed();

    std::string error;
#pragma omp parallel if (parallel)
    {
        MlpField field(params);
#pragma omp for schedule(dynamic, 64)
        for (int i = 0; i < n; ++i) {
            try {
                c.x1[i] = integrate_one(field, c.x0[i], spec, perturb_root.split(i),
                                        probe_root.split(i));
            } catch (const std::exception& e) {
#pragma omp critical
                if (error.empty())
                    error = "sample " + std::to_string(i) + ": " + e.what();
            }
        }
    }
    if (!error.empty()) throw std::runtime_error("generate_coupling: " + error);
    return c;
}

} // namespace

Coupling generate_coupling(const ModelParams& params, RandomSource source_rng, int n,
                           const IntegratorSpec& spec, const Benchmark& bench, int round) {
    return generate_coupling_impl(params, source_rng, n, spec, bench, round, true);
}

Coupling generate_coupling_serial(const ModelParams& params, RandomSource source_rng, int n,
                                  const IntegratorSpec& spec, const Benchmark& bench, int round) {
    return generate_coupling_impl(params, source_rng, n, spec, bench, round, false);
}

} // namespace dsrf
