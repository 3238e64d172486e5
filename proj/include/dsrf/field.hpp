#pragma once

#include <cstdint>
#include <memory>

#include "dsrf/mlp.hpp"
#include "dsrf/rng.hpp"
#include "dsrf/vec2.hpp"

namespace dsrf {

/// Hutchinson estimate plus the velocity co-computed by its forward pass.
struct DivEstimate2 {
    double value = 0.0;  // tr(dv/dx) / d
    Vec2 velocity;
};

/// 2D velocity field as seen by the solvers. The trained model is the
/// production implementation; tests substitute closed-form fields so solver
/// behaviour can be checked against hand-computable dynamics.
///
/// Implementations keep a model-pass counter (forward = 1 pass, each
/// JVP/VJP sweep = 1 pass) so solver cost accounting can be asserted.
class VelocityField {
public:
    virtual ~VelocityField() = default;

    virtual Vec2 velocity(double t, Vec2 x) = 0;
    virtual double divergence(double t, Vec2 x) = 0;
    virtual Mat2 jacobian(double t, Vec2 x) = 0;
    virtual DivEstimate2 hutchinson(double t, Vec2 x, RandomSource& probe_rng, int n_h) = 0;

    virtual std::uint64_t passes() const = 0;
    virtual void reset_passes() = 0;
};

/// Adapter binding a trained model and a private evaluation workspace.
/// One instance per worker thread; the referenced params must outlive it.
class MlpField final : public VelocityField {
public:
    explicit MlpField(const ModelParams& p) : params_(&p), ws_(p.spec) {
        if (p.spec.state_dim() != 2)
            throw std::invalid_argument("MlpField: model is not 2-dimensional");
    }

    Vec2 velocity(double t, Vec2 x) override { return mlp_forward2(*params_, t, x, ws_); }

    double divergence(double t, Vec2 x) override { return exact_divergence2(*params_, t, x, ws_); }

    Mat2 jacobian(double t, Vec2 x) override { return input_jacobian2(*params_, t, x, ws_); }

    DivEstimate2 hutchinson(double t, Vec2 x, RandomSource& probe_rng, int n_h) override {
        double xin[2] = {x.x, x.y};
        DivergenceEstimate est =
            hutchinson_divergence(*params_, t, std::span<const double>(xin, 2), probe_rng, n_h, ws_);
        return {est.value, Vec2(est.velocity[0], est.velocity[1])};
    }

    std::uint64_t passes() const override { return ws_.passes(); }
    void reset_passes() override { ws_.reset_passes(); }

    const ModelParams& params() const { return *params_; }

private:
    const ModelParams* params_;
    MlpScratch ws_;
};

} // namespace dsrf
