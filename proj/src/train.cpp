#include "dsrf/train.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace dsrf {

namespace {

// Stream ids under the training seed.
constexpr std::uint64_t kIterStreamRoot = 0x7261696e0001ULL;
constexpr std::uint64_t kInitStreamRoot = 0x7261696e0002ULL;

} // namespace

void TrainConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("TrainConfig: iterations must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (adam_beta1 <= 0.0 || adam_beta1 >= 1.0 || adam_beta2 <= 0.0 || adam_beta2 >= 1.0)
        throw std::invalid_argument("TrainConfig: betas must be in (0, 1)");
    if (adam_eps <= 0.0) throw std::invalid_argument("TrainConfig: adam_eps must be > 0");
}

void save_loss_log(const std::vector<LossLogEntry>& log, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "iter,loss\n";
    os.precision(17);
    for (const auto& e : log) os << e.iter << "," << e.loss << "\n";
    if (!os.good()) throw std::runtime_error("write failed: " + path);
}

void AdamState::init_like(const ModelParams& p) {
    m.init_like(p);
    v.init_like(p);
    step = 0;
}

void adam_step(ModelParams& params, const GradBuffer& grad, AdamState& opt,
               const TrainConfig& cfg) {
    opt.step += 1;
    const double b1 = cfg.adam_beta1;
    const double b2 = cfg.adam_beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(opt.step));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(opt.step));
    const double lr = cfg.learning_rate;

    auto update = [&](double* p, const double* g, double* m, double* v, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = m[i] / corr1;
            const double vhat = v[i] / corr2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        }
    };

    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        update(params.weights[l].data(), grad.weights[l].data(), opt.m.weights[l].data(),
               opt.v.weights[l].data(), params.weights[l].size());
        update(params.biases[l].data(), grad.biases[l].data(), opt.m.biases[l].data(),
               opt.v.biases[l].data(), params.biases[l].size());
    }
}

Coupling make_independent_coupling(RandomSource rng, const Benchmark& bench, int n) {
    if (n < 1) throw std::invalid_argument("make_independent_coupling: n must be >= 1");
    RandomSource src = rng.split(0);
    RandomSource tgt = rng.split(1);
    Coupling c;
    c.x0 = bench.sample_source(src, n);
    c.x1 = bench.sample_target(tgt, n);
    c.round = 0;
    c.generator = "independent";
    c.seed = rng.seed();
    return c;
}

namespace {

void fill_batch_row(const Coupling& coupling, int idx, double t, int row, TrainBatch& batch) {
    const Vec2 x0 = coupling.x0[idx];
    const Vec2 x1 = coupling.x1[idx];
    const Vec2 xt = (1.0 - t) * x0 + t * x1;
    const Vec2 tgt = x1 - x0;
    batch.t[row] = t;
    batch.x[2 * row] = xt.x;
    batch.x[2 * row + 1] = xt.y;
    batch.target[2 * row] = tgt.x;
    batch.target[2 * row + 1] = tgt.y;
}

// Per-iteration batch: index then time drawn per example, in example order.
void fill_cfm_batch(const Coupling& coupling, RandomSource iter_stream, int batch_size,
                    TrainBatch& batch) {
    batch.n = batch_size;
    batch.d = 2;
    batch.t.resize(batch_size);
    batch.x.resize(static_cast<std::size_t>(batch_size) * 2);
    batch.target.resize(static_cast<std::size_t>(batch_size) * 2);
    const std::uint64_t n = coupling.size();
    for (int i = 0; i < batch_size; ++i) {
        const int idx = static_cast<int>(iter_stream.next_below(n));
        const double t = iter_stream.next_unit();
        fill_batch_row(coupling, idx, t, i, batch);
    }
}

} // namespace

double cfm_loss(const ModelParams& params, const Coupling& coupling,
                std::span<const int> batch_indices, std::span<const double> t_draws) {
    coupling.validate();
    if (batch_indices.empty() || batch_indices.size() != t_draws.size())
        throw std::invalid_argument("cfm_loss: indices and times must be nonempty and aligned");
    TrainBatch batch;
    batch.n = static_cast<int>(batch_indices.size());
    batch.d = 2;
    batch.t.resize(batch.n);
    batch.x.resize(static_cast<std::size_t>(batch.n) * 2);
    batch.target.resize(static_cast<std::size_t>(batch.n) * 2);
    for (int i = 0; i < batch.n; ++i) {
        const int idx = batch_indices[i];
        if (idx < 0 || static_cast<std::size_t>(idx) >= coupling.size())
            throw std::invalid_argument("cfm_loss: index out of range");
        const double t = t_draws[i];
        if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("cfm_loss: t outside [0, 1]");
        fill_batch_row(coupling, idx, t, i, batch);
    }
    return batch_loss(params, batch);
}

TrainState make_train_state(const ModelParams& init) {
    TrainState st;
    st.params = init;
    st.opt.init_like(init);
    st.iter = 0;
    return st;
}

void train_steps(TrainState& state, const Coupling& coupling, const TrainConfig& cfg,
                 int n_iters, std::vector<LossLogEntry>* log) {
    cfg.validate();
    coupling.validate();
    const RandomSource iter_root = RandomSource(cfg.seed, kIterStreamRoot);
    TrainBatch batch;
    for (int k = 0; k < n_iters; ++k) {
        const int iter = state.iter;
        fill_cfm_batch(coupling, iter_root.split(static_cast<std::uint64_t>(iter)),
                       cfg.batch_size, batch);
        double loss = 0.0;
        GradBuffer grad = param_gradient(state.params, batch, &loss);
        if (!std::isfinite(loss))
            throw std::runtime_error("train: loss diverged (non-finite) at iteration " +
                                     std::to_string(iter));
        if (log && (iter % 100 == 0 || k == n_iters - 1)) log->push_back({iter, loss});
        adam_step(state.params, grad, state.opt, cfg);
        state.iter += 1;
    }
}

ModelParams train(const ModelParams& init, const Coupling& coupling, const TrainConfig& cfg,
                  std::vector<LossLogEntry>* log) {
    TrainState state = make_train_state(init);
    train_steps(state, coupling, cfg, cfg.iterations, log);
    return std::move(state.params);
}

ReflowResult reflow_round(const ModelParams& prev_params, RandomSource source_rng, int n,
                          const IntegratorSpec& integrator, const Benchmark& bench,
                          const TrainConfig& cfg, int round, bool warm_start,
                          std::vector<LossLogEntry>* log) {
    ReflowResult out;
    out.coupling = generate_coupling(prev_params, source_rng, n, integrator, bench, round);
    ModelParams init =
        warm_start ? prev_params
                   : init_params(prev_params.spec,
                                 RandomSource(cfg.seed, kInitStreamRoot)
                                     .split(static_cast<std::uint64_t>(round)));
    out.params = train(init, out.coupling, cfg, log);
    return out;
}

} // namespace dsrf
