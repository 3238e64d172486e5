#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dsrf/benchmarks.hpp"
#include "dsrf/coupling.hpp"
#include "dsrf/integrators.hpp"
#include "dsrf/mlp.hpp"
#include "dsrf/rng.hpp"

namespace dsrf {

struct TrainConfig {
    int iterations = 6000;
    int batch_size = 1024;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct LossLogEntry {
    int iter;
    double loss;
};

/// Loss log CSV, header "iter,loss".
void save_loss_log(const std::vector<LossLogEntry>& log, const std::string& path);

struct AdamState {
    GradBuffer m;
    GradBuffer v;
    long step = 0;

    void init_like(const ModelParams& p);
};

/// One bias-corrected Adam update. A zero gradient leaves params unchanged.
void adam_step(ModelParams& params, const GradBuffer& grad, AdamState& opt,
               const TrainConfig& cfg);

/// Independent pairing: x0 from the benchmark source, x1 from its target,
/// paired by index. Distinct split streams feed the two samplers.
Coupling make_independent_coupling(RandomSource rng, const Benchmark& bench, int n);

/// Regression loss at explicitly chosen pairs and times: mean over the batch
/// of || v(t_i, x_i) - (x1_i - x0_i) ||^2 at x_i = (1 - t_i) x0_i + t_i x1_i.
double cfm_loss(const ModelParams& params, const Coupling& coupling,
                std::span<const int> batch_indices, std::span<const double> t_draws);

/// Everything needed to resume training mid-run deterministically.
struct TrainState {
    ModelParams params;
    AdamState opt;
    int iter = 0;
};

TrainState make_train_state(const ModelParams& init);

/// Runs n_iters optimization steps. Each iteration draws batch indices and
/// fresh uniform times from a stream derived from (cfg.seed, iteration), so
/// split runs replay bit-exactly. Appends to `log` every 100 iterations and
/// at the last step. Throws (with the iteration index) if the loss goes
/// non-finite.
void train_steps(TrainState& state, const Coupling& coupling, const TrainConfig& cfg,
                 int n_iters, std::vector<LossLogEntry>* log = nullptr);

/// Full run from the given initial parameters.
ModelParams train(const ModelParams& init, const Coupling& coupling, const TrainConfig& cfg,
                  std::vector<LossLogEntry>* log = nullptr);

struct ReflowResult {
    Coupling coupling;
    ModelParams params;
};

/// One rectification round: regenerate the coupling from the previous
/// round's model under the chosen solver, then fit a model to it. The
/// trainee re-initialises from scratch with a round-dependent seed unless
/// warm_start is set.
ReflowResult reflow_round(const ModelParams& prev_params, RandomSource source_rng, int n,
                          const IntegratorSpec& integrator, const Benchmark& bench,
                          const TrainConfig& cfg, int round, bool warm_start = false,
                          std::vector<LossLogEntry>* log = nullptr);

} // namespace dsrf
