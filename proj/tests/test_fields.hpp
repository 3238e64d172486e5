// Closed-form velocity fields and exactly-representable test models shared
// by the test binaries. The analytic fields implement the solver-facing
// interface with hand-derived Jacobians, so solver behaviour can be checked
// against dynamics whose answers are computable on paper. Pass accounting
// mirrors the model adapter (forward = 1, each derivative sweep = 1).

#pragma once

#include <cmath>
#include <cstdint>

#include "dsrf/field.hpp"
#include "dsrf/mlp.hpp"
#include "dsrf/vec2.hpp"

namespace dsrf::testing {

class AnalyticField : public VelocityField {
public:
    double divergence(double t, Vec2 x) override {
        passes_ += 1 + 2; // forward + d sweeps, as the model adapter counts
        return jacobian_impl(t, x).trace();
    }

    DivEstimate2 hutchinson(double t, Vec2 x, RandomSource& probe_rng, int n_h) override {
        const Mat2 jac = jacobian_impl(t, x);
        const Vec2 v = velocity_impl(t, x);
        double sum = 0.0;
        for (int s = 0; s < n_h; ++s) {
            const double e0 = (probe_rng.next_u64() >> 63) ? 1.0 : -1.0;
            const double e1 = (probe_rng.next_u64() >> 63) ? 1.0 : -1.0;
            sum += e0 * (jac.xx * e0 + jac.xy * e1) + e1 * (jac.yx * e0 + jac.yy * e1);
        }
        passes_ += 1 + n_h;
        return {sum / (2.0 * n_h), v};
    }

    Vec2 velocity(double t, Vec2 x) override {
        passes_ += 1;
        return velocity_impl(t, x);
    }

    Mat2 jacobian(double t, Vec2 x) override {
        passes_ += 3;
        return jacobian_impl(t, x);
    }

    std::uint64_t passes() const override { return passes_; }
    void reset_passes() override { passes_ = 0; }

protected:
    virtual Vec2 velocity_impl(double t, Vec2 x) const = 0;
    virtual Mat2 jacobian_impl(double t, Vec2 x) const = 0;

private:
    std::uint64_t passes_ = 0;
};

/// v(x) = A x + b.
class LinearField final : public AnalyticField {
public:
    LinearField(Mat2 a, Vec2 b = {}) : a_(a), b_(b) {}

protected:
    Vec2 velocity_impl(double, Vec2 x) const override {
        return {a_.xx * x.x + a_.xy * x.y + b_.x, a_.yx * x.x + a_.yy * x.y + b_.y};
    }
    Mat2 jacobian_impl(double, Vec2) const override { return a_; }

private:
    Mat2 a_;
    Vec2 b_;
};

/// v(x) = (x^2, 0): div = 2x, grad div = (2, 0).
class SquareField final : public AnalyticField {
protected:
    Vec2 velocity_impl(double, Vec2 x) const override { return {x.x * x.x, 0.0}; }
    Mat2 jacobian_impl(double, Vec2 x) const override { return {2.0 * x.x, 0.0, 0.0, 0.0}; }
};

/// v(x) = (x^3/3, 0): div = x^2, minimised on the x = 0 axis.
class CubicField final : public AnalyticField {
protected:
    Vec2 velocity_impl(double, Vec2 x) const override { return {x.x * x.x * x.x / 3.0, 0.0}; }
    Mat2 jacobian_impl(double, Vec2 x) const override { return {x.x * x.x, 0.0, 0.0, 0.0}; }
};

/// ReLU model computing v(x) = A x + c exactly on |x_i| < shift: the hidden
/// layer is the identity via relu(x + shift) - shift, which stays strictly
/// on the active side of the kink for the whole test region.
inline ModelParams make_linear_model(Mat2 a, Vec2 c = {}, double shift = 100.0) {
    ModelSpec spec;
    spec.input_dim = 3;
    spec.hidden_widths = {2};
    spec.output_dim = 2;
    ModelParams p = zero_params(spec);
    p.weights[0](0, 0) = 1.0; // x -> h0
    p.weights[0](1, 1) = 1.0; // y -> h1
    p.biases[0] = {shift, shift};
    p.weights[1](0, 0) = a.xx;
    p.weights[1](0, 1) = a.yx;
    p.weights[1](1, 0) = a.xy;
    p.weights[1](1, 1) = a.yy;
    p.biases[1] = {c.x - shift * (a.xx + a.xy), c.y - shift * (a.yx + a.yy)};
    return p;
}

/// Model with constant output c (zero weights, output bias c).
inline ModelParams make_constant_model(Vec2 c, std::vector<int> hidden = {4}) {
    ModelSpec spec;
    spec.input_dim = 3;
    spec.hidden_widths = std::move(hidden);
    spec.output_dim = 2;
    ModelParams p = zero_params(spec);
    p.biases.back() = {c.x, c.y};
    return p;
}

} // namespace dsrf::testing
