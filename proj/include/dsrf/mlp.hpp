#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsrf/matrix.hpp"
#include "dsrf/rng.hpp"
#include "dsrf/vec2.hpp"

namespace dsrf {

/// Architecture of the velocity model: an MLP over the concatenated input
/// [x; t], ReLU hidden layers, linear output. output_dim is the state
/// dimension d; input_dim must be d + 1.
struct ModelSpec {
    int input_dim = 3;
    std::vector<int> hidden_widths = {128, 128, 128};
    int output_dim = 2;

    int state_dim() const { return output_dim; }
    int n_layers() const { return static_cast<int>(hidden_widths.size()) + 1; }
    int layer_in(int l) const;
    int layer_out(int l) const;
    void validate() const;

    bool operator==(const ModelSpec&) const = default;
};

/// Layer weights are stored input-major, weights[l](k, j) = w_{j<-k}, so the
/// hot loops run contiguously over the output index. The checkpoint format
/// stores the conventional (out x in) row-major layout; io transposes.
struct ModelParams {
    ModelSpec spec;
    std::vector<Matrix> weights;              // (fan_in x fan_out) per layer
    std::vector<std::vector<double>> biases;  // fan_out per layer

    std::size_t total_params() const;
    bool all_finite() const;
    bool operator==(const ModelParams&) const = default;
};

ModelParams zero_params(const ModelSpec& spec);

/// Uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out)), zero biases.
/// Draw order: layer by layer, row-major over the internal layout.
ModelParams init_params(const ModelSpec& spec, RandomSource rng);

/// Normalised stochastic trace estimate: value = tr(dv/dx) / d plus the
/// velocity co-computed by the same forward pass.
struct DivergenceEstimate {
    double value = 0.0;
    std::vector<double> velocity;
    int n_probes = 0;
};

/// Per-caller evaluation workspace: activation stacks plus a model-pass
/// counter (each forward, JVP sweep or VJP sweep counts as one pass).
/// Not shareable across threads; cheap to construct per worker.
class MlpScratch {
public:
    MlpScratch() { sized_for.output_dim = 0; } // never equals a valid spec
    explicit MlpScratch(const ModelSpec& spec) { resize(spec); }

    void resize(const ModelSpec& spec);

    std::uint64_t passes() const { return passes_; }
    void reset_passes() { passes_ = 0; }

    // implementation state, used by the free functions below
    std::vector<std::vector<double>> act;   // act[0] = input, act[L] = output
    std::vector<std::vector<double>> pre;   // pre-activations per layer
    std::vector<std::vector<double>> tan;   // tangent stack (JVP)
    std::vector<std::vector<double>> cot;   // cotangent stack (VJP)
    ModelSpec sized_for;
    std::uint64_t passes_ = 0;
};

// --- single-sample evaluation ----------------------------------------------

/// v = MLP([x; t]). Throws on non-finite input. One model pass.
void mlp_forward(const ModelParams& p, double t, std::span<const double> x,
                 std::span<double> v_out, MlpScratch& ws);
Vec2 mlp_forward2(const ModelParams& p, double t, Vec2 x, MlpScratch& ws);

/// Directional derivative (dv/dx) . direction via forward-mode accumulation.
/// direction must be unit norm. Two model passes (forward + tangent sweep).
void input_jvp(const ModelParams& p, double t, std::span<const double> x,
               std::span<const double> direction, std::span<double> out, MlpScratch& ws);
Vec2 input_jvp2(const ModelParams& p, double t, Vec2 x, Vec2 direction, MlpScratch& ws);

/// w^T (dv/dx) via one reverse sweep; gradient with respect to x only.
void input_vjp(const ModelParams& p, double t, std::span<const double> x,
               std::span<const double> cotangent, std::span<double> out, MlpScratch& ws);

/// tr(dv/dx) from d JVP sweeps. Rejects d > 4 (use hutchinson_divergence).
double exact_divergence(const ModelParams& p, double t, std::span<const double> x, MlpScratch& ws);
double exact_divergence2(const ModelParams& p, double t, Vec2 x, MlpScratch& ws);

/// Input Jacobian of the velocity, d = 2 only (two JVP sweeps).
Mat2 input_jacobian2(const ModelParams& p, double t, Vec2 x, MlpScratch& ws);

/// Rademacher quadratic forms, one VJP pass each: 1 + n_h model passes.
DivergenceEstimate hutchinson_divergence(const ModelParams& p, double t,
                                         std::span<const double> x,
                                         RandomSource& probe_rng, int n_h, MlpScratch& ws);

/// Same estimator with caller-supplied probe vectors (n_h x d row-major);
/// lets tests enumerate the full +-1 set.
DivergenceEstimate hutchinson_divergence_with_probes(const ModelParams& p, double t,
                                                     std::span<const double> x,
                                                     std::span<const double> probes, int n_h,
                                                     MlpScratch& ws);

// --- batched training kernels ----------------------------------------------

/// Regression batch in SoA layout: states x and targets are (n x d) row-major.
struct TrainBatch {
    int n = 0;
    int d = 0;
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> target;
};

/// Parameter-shaped accumulator for gradients and optimizer moments.
struct GradBuffer {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    void init_like(const ModelParams& p);
    void zero();
    void add(const GradBuffer& o);
};

/// Mean over the batch of || f(t_i, x_i) - target_i ||^2.
double batch_loss(const ModelParams& p, const TrainBatch& batch);

/// Gradient of batch_loss with respect to every weight and bias.
/// The batch is split into fixed 64-example chunks; chunk gradients are
/// combined by a pairwise tree in index order, so the result is bit-identical
/// for any worker count. The _serial variant runs the same arithmetic on one
/// thread and is kept as the reference for the parallel kernel.
GradBuffer param_gradient(const ModelParams& p, const TrainBatch& batch, double* loss_out = nullptr);
GradBuffer param_gradient_serial(const ModelParams& p, const TrainBatch& batch, double* loss_out = nullptr);

// --- checkpoint io -----------------------------------------------------------

struct CheckpointMagicError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CheckpointShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CheckpointTruncatedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Binary checkpoint: ASCII magic "DSRF0001\n", header line
/// "d=<int> layers=<w1,w2,...>\n", then per layer the (out x in) row-major
/// weight matrix followed by the bias vector, little-endian float64.
void save_checkpoint(const ModelParams& p, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

/// Loads and rejects (CheckpointShapeError, reporting both shapes) if the
/// stored spec differs from the expected one.
ModelParams load_checkpoint(const std::string& path, const ModelSpec& expected);

} // namespace dsrf
