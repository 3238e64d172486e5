// Timing comparison of the serial reference kernels against their
// OpenMP counterparts, on desk-scale shapes.

#include <omp.h>

#include <cstdio>
#include <functional>

#include "dsrf/benchmarks.hpp"
#include "dsrf/integrators.hpp"
#include "dsrf/metrics.hpp"
#include "dsrf/mlp.hpp"
#include "dsrf/train.hpp"

using namespace dsrf;

namespace {

double time_best_of(int reps, const std::function<void()>& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = omp_get_wtime();
        fn();
        const double t1 = omp_get_wtime();
        best = std::min(best, t1 - t0);
    }
    return best;
}

void report(const char* name, double serial_s, double parallel_s) {
    std::printf("%-28s serial %8.3f ms   parallel %8.3f ms   speedup %.2fx\n", name,
                1e3 * serial_s, 1e3 * parallel_s, serial_s / parallel_s);
}

} // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());

    ModelSpec spec;
    spec.hidden_widths = {128, 128, 128};
    const ModelParams params = init_params(spec, RandomSource(11));

    Benchmark bench;
    bench.kind = BenchmarkKind::checkerboard;

    // batch gradient
    {
        Coupling c = make_independent_coupling(RandomSource(1), bench, 4096);
        TrainBatch batch;
        batch.n = 1024;
        batch.d = 2;
        batch.t.resize(batch.n);
        batch.x.resize(2 * batch.n);
        batch.target.resize(2 * batch.n);
        RandomSource rng(2);
        for (int i = 0; i < batch.n; ++i) {
            const int idx = static_cast<int>(rng.next_below(c.size()));
            const double t = rng.next_unit();
            const Vec2 xt = (1 - t) * c.x0[idx] + t * c.x1[idx];
            const Vec2 tg = c.x1[idx] - c.x0[idx];
            batch.t[i] = t;
            batch.x[2 * i] = xt.x;
            batch.x[2 * i + 1] = xt.y;
            batch.target[2 * i] = tg.x;
            batch.target[2 * i + 1] = tg.y;
        }
        const double s = time_best_of(5, [&] { param_gradient_serial(params, batch); });
        const double p = time_best_of(5, [&] { param_gradient(params, batch); });
        report("param_gradient (b=1024)", s, p);
    }

    // coupling generation, plain and corrected
    {
        IntegratorSpec euler_spec;
        euler_spec.kind = SolverKind::euler;
        euler_spec.n_steps = 20;
        const double s = time_best_of(3, [&] {
            generate_coupling_serial(params, RandomSource(3), 2000, euler_spec, bench);
        });
        const double p = time_best_of(3, [&] {
            generate_coupling(params, RandomSource(3), 2000, euler_spec, bench);
        });
        report("generate euler (n=2000)", s, p);

        IntegratorSpec ds;
        ds.kind = SolverKind::ds_project_2d;
        ds.n_steps = 20;
        const double sd = time_best_of(3, [&] {
            generate_coupling_serial(params, RandomSource(3), 2000, ds, bench);
        });
        const double pd = time_best_of(3, [&] {
            generate_coupling(params, RandomSource(3), 2000, ds, bench);
        });
        report("generate ds_project (n=2000)", sd, pd);
    }

    // sliced Wasserstein
    {
        RandomSource rng(4);
        const std::vector<Vec2> a = sample_gaussian_vec2(rng, 10000);
        const std::vector<Vec2> b = sample_gaussian_vec2(rng, 10000);
        const double s = time_best_of(5, [&] {
            sliced_wasserstein_serial(a, b, 500, RandomSource(5));
        });
        const double p = time_best_of(5, [&] {
            sliced_wasserstein(a, b, 500, RandomSource(5));
        });
        report("swd (10k x 500 proj)", s, p);
    }

    // mechanism batch
    {
        RandomSource rng(6);
        const std::vector<Vec2> x0 = sample_gaussian_vec2(rng, 1024);
        int saved = omp_get_max_threads();
        omp_set_num_threads(1);
        const double s = time_best_of(3, [&] { mechanism_study_one(params, x0); });
        omp_set_num_threads(saved);
        const double p = time_best_of(3, [&] { mechanism_study_one(params, x0); });
        report("mechanism (n=1024)", s, p);
    }

    return 0;
}
