#include "dsrf/metrics.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "dsrf/integrators.hpp"

namespace dsrf {

namespace {

double slice_distance(std::span<const Vec2> a, std::span<const Vec2> b, Vec2 dir,
                      std::vector<double>& pa, std::vector<double>& pb, SwdOrder order) {
    const std::size_t n = a.size();
    pa.resize(n);
    pb.resize(n);
    for (std::size_t i = 0; i < n; ++i) pa[i] = dot(dir, a[i]);
    for (std::size_t i = 0; i < n; ++i) pb[i] = dot(dir, b[i]);
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    double acc = 0.0;
    if (order == SwdOrder::w2) {
        for (std::size_t i = 0; i < n; ++i) {
            const double d = pa[i] - pb[i];
            acc += d * d;
        }
        return std::sqrt(acc / static_cast<double>(n));
    }
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(pa[i] - pb[i]);
    return acc / static_cast<double>(n);
}

double swd_impl(std::span<const Vec2> a, std::span<const Vec2> b, int n_proj, RandomSource rng,
                SwdOrder order, bool parallel) {
    if (a.empty() || a.size() != b.size())
        throw std::invalid_argument("sliced_wasserstein: samples must be nonempty and equal size");
    if (n_proj < 1) throw std::invalid_argument("sliced_wasserstein: n_proj must be >= 1");

    // Directions drawn up front in order; per-direction work is independent.
    std::vector<Vec2> dirs(static_cast<std::size_t>(n_proj));
    for (auto& d : dirs) d = sample_unit_sphere_vec2(rng);

    std::vector<double> per_dir(static_cast<std::size_t>(n_proj), 0.0);
#pragma omp parallel if (parallel)
    {
        std::vector<double> pa, pb;
#pragma omp for schedule(static)
        for (int k = 0; k < n_proj; ++k)
            per_dir[k] = slice_distance(a, b, dirs[k], pa, pb, order);
    }

    double sum = 0.0;
    for (double v : per_dir) sum += v; // fixed direction order
    return sum / n_proj;
}

} // namespace

double sliced_wasserstein(std::span<const Vec2> a, std::span<const Vec2> b, int n_proj,
                          RandomSource rng, SwdOrder order) {
    return swd_impl(a, b, n_proj, rng, order, true);
}

double sliced_wasserstein_serial(std::span<const Vec2> a, std::span<const Vec2> b, int n_proj,
                                 RandomSource rng, SwdOrder order) {
    return swd_impl(a, b, n_proj, rng, order, false);
}

double forbidden_fraction(const CheckerboardSpec& spec, std::span<const Vec2> samples) {
    if (samples.empty()) throw std::invalid_argument("forbidden_fraction: empty sample");
    std::size_t inside = 0;
    for (const Vec2& p : samples) inside += in_black_cell(spec, p) ? 1 : 0;
    return 1.0 - static_cast<double>(inside) / static_cast<double>(samples.size());
}

std::vector<double> convergence_field(const ModelParams& params, std::span<const Vec2> points,
                                      double t) {
    std::vector<double> out(points.size());
#pragma omp parallel
    {
        MlpScratch ws(params.spec);
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(points.size()); ++i)
            out[i] = std::max(0.0, -exact_divergence2(params, t, points[i], ws));
    }
    return out;
}

double mean_abs_divergence(const ModelParams& params, std::span<const Vec2> points, double t) {
    if (points.empty()) throw std::invalid_argument("mean_abs_divergence: empty point set");
    std::vector<double> vals(points.size());
#pragma omp parallel
    {
        MlpScratch ws(params.spec);
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(points.size()); ++i)
            vals[i] = std::abs(exact_divergence2(params, t, points[i], ws));
    }
    double sum = 0.0;
    for (double v : vals) sum += v; // fixed index order
    return sum / static_cast<double>(points.size());
}

namespace {

constexpr double kDetFloor = 1e-300;

// Flow-map Jacobian determinant at x0 by central differences of the rollout.
double flow_det(MlpField& field, Vec2 x0, int n_steps, int n_run, double eps) {
    const Vec2 xp = euler_partial(field, {x0.x + eps, x0.y}, n_steps, n_run);
    const Vec2 xm = euler_partial(field, {x0.x - eps, x0.y}, n_steps, n_run);
    const Vec2 yp = euler_partial(field, {x0.x, x0.y + eps}, n_steps, n_run);
    const Vec2 ym = euler_partial(field, {x0.x, x0.y - eps}, n_steps, n_run);
    const Vec2 col_x = (1.0 / (2.0 * eps)) * (xp - xm);
    const Vec2 col_y = (1.0 / (2.0 * eps)) * (yp - ym);
    return det2(col_x, col_y);
}

} // namespace

CompressionResult compression_score(const ModelParams& params, std::span<const Vec2> x0_batch,
                                    int n_steps, double fd_eps) {
    if (fd_eps <= 0.0) throw std::invalid_argument("compression_score: fd_eps must be > 0");
    if (n_steps < 2) throw std::invalid_argument("compression_score: n_steps must be >= 2");
    const int n_run = n_steps / 2;
    CompressionResult res;
    res.scores.resize(x0_batch.size());
    std::vector<int> capped(x0_batch.size(), 0);
#pragma omp parallel
    {
        MlpField field(params);
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(x0_batch.size()); ++i) {
            const double det = flow_det(field, x0_batch[i], n_steps, n_run, fd_eps);
            double a = std::abs(det);
            if (a < kDetFloor) {
                a = kDetFloor;
                capped[i] = 1;
            }
            res.scores[i] = std::max(0.0, -std::log(a));
        }
    }
    for (int c : capped) res.capped += c;
    return res;
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.empty() || xs.size() != ys.size())
        throw std::invalid_argument("pearson: inputs must be nonempty and equal length");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double a = xs[i] - mx;
        const double b = ys[i] - my;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

namespace {

std::vector<double> average_ranks(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

} // namespace

std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.empty() || xs.size() != ys.size())
        throw std::invalid_argument("spearman: inputs must be nonempty and equal length");
    const std::vector<double> rx = average_ranks(xs);
    const std::vector<double> ry = average_ranks(ys);
    return pearson(rx, ry);
}

double crossing_proxy(std::span<const Vec2> states, std::span<const Vec2> velocities,
                      double radius) {
    if (states.size() != velocities.size())
        throw std::invalid_argument("crossing_proxy: states and velocities must align");
    if (states.empty()) return 0.0;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(states.size());
    const double r2 = radius * radius;
    std::vector<int> flag(states.size(), 0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        for (std::ptrdiff_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (norm2(states[i] - states[j]) <= r2 &&
                dot(velocities[i], velocities[j]) < 0.0) {
                flag[i] = 1;
                break;
            }
        }
    }
    std::size_t c = 0;
    for (int v : flag) c += v;
    return static_cast<double>(c) / static_cast<double>(n);
}

FlowLogDet euler_with_logdet(VelocityField& f, Vec2 x0, int n_steps, int n_run) {
    if (n_steps < 1 || n_run < 0 || n_run > n_steps)
        throw std::invalid_argument("euler_with_logdet: need 0 <= n_run <= n_steps");
    const double dt = 1.0 / n_steps;
    FlowLogDet out;
    Vec2 x = x0;
    for (int i = 0; i < n_run; ++i) {
        const double t = static_cast<double>(i) / n_steps;
        const Mat2 jac = f.jacobian(t, x);
        const Mat2 step{1.0 + dt * jac.xx, dt * jac.xy, dt * jac.yx, 1.0 + dt * jac.yy};
        out.logdet += std::log(std::max(std::abs(step.det()), kDetFloor));
        x += dt * f.velocity(t, x);
        if (!x.finite())
            throw std::runtime_error("euler_with_logdet: non-finite state at step " +
                                     std::to_string(i));
    }
    out.endpoint = x;
    return out;
}

MechanismStats mechanism_study_one(const ModelParams& params, std::span<const Vec2> x0s,
                                   int n_steps, double fd_eps, double tau) {
    if (x0s.empty()) throw std::invalid_argument("mechanism_study: empty x0 set");
    const int n_run = n_steps / 2;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x0s.size());
    const double t_half = static_cast<double>(n_run) / n_steps;

    std::vector<Vec2> x_half(x0s.size());
    std::vector<Vec2> v_half(x0s.size());
    std::vector<double> conv(x0s.size());
    std::vector<double> absdiv(x0s.size());
#pragma omp parallel
    {
        MlpField field(params);
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const Vec2 xh = euler_partial(field, x0s[i], n_steps, n_run);
            x_half[i] = xh;
            v_half[i] = field.velocity(t_half, xh);
            const double div = field.divergence(t_half, xh);
            conv[i] = std::max(0.0, -div);
            absdiv[i] = std::abs(div);
        }
    }

    const CompressionResult comp = compression_score(params, x0s, n_steps, fd_eps);

    MechanismStats st;
    st.pearson_r = pearson(conv, comp.scores);
    st.spearman_rho = spearman(conv, comp.scores);
    double sum = 0.0;
    for (double v : absdiv) sum += v;
    st.mean_abs_div = sum / static_cast<double>(n);
    st.crossing_fraction = crossing_proxy(x_half, v_half, tau);
    st.capped = comp.capped;
    st.records.resize(x0s.size());
    for (std::ptrdiff_t i = 0; i < n; ++i)
        st.records[i] = {x0s[i], x_half[i], conv[i], comp.scores[i]};
    return st;
}

std::vector<MechanismStats> mechanism_study(std::span<const ModelParams> models, int n,
                                            int n_steps, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("mechanism_study: n must be >= 1");
    RandomSource rng(seed, 0x6d656368ULL);
    const std::vector<Vec2> x0s = sample_gaussian_vec2(rng, n); // shared across models
    std::vector<MechanismStats> out;
    out.reserve(models.size());
    for (const ModelParams& m : models) out.push_back(mechanism_study_one(m, x0s, n_steps));
    return out;
}

void save_mechanism_records(const std::vector<MechanismRecord>& records, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "x0_x,x0_y,xh_x,xh_y,convergence,compression\n";
    os.precision(17);
    for (const auto& r : records)
        os << r.x0.x << "," << r.x0.y << "," << r.x_half.x << "," << r.x_half.y << ","
           << r.convergence << "," << r.compression << "\n";
    if (!os.good()) throw std::runtime_error("write failed: " + path);
}

} // namespace dsrf
