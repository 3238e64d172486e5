#include "dsrf/mlp.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dsrf {

int ModelSpec::layer_in(int l) const {
    return l == 0 ? input_dim : hidden_widths[l - 1];
}

int ModelSpec::layer_out(int l) const {
    return l == n_layers() - 1 ? output_dim : hidden_widths[l];
}

void ModelSpec::validate() const {
    if (hidden_widths.empty()) throw std::invalid_argument("ModelSpec: hidden_widths must be nonempty");
    if (output_dim < 1 || input_dim != output_dim + 1)
        throw std::invalid_argument("ModelSpec: input_dim must equal output_dim + 1");
    for (int w : hidden_widths)
        if (w < 1) throw std::invalid_argument("ModelSpec: hidden widths must be >= 1");
}

std::size_t ModelParams::total_params() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
}

bool ModelParams::all_finite() const {
    for (const auto& w : weights)
        for (std::size_t i = 0; i < w.size(); ++i)
            if (!std::isfinite(w.data()[i])) return false;
    for (const auto& b : biases)
        for (double v : b)
            if (!std::isfinite(v)) return false;
    return true;
}

ModelParams zero_params(const ModelSpec& spec) {
    spec.validate();
    ModelParams p;
    p.spec = spec;
    for (int l = 0; l < spec.n_layers(); ++l) {
        p.weights.emplace_back(spec.layer_in(l), spec.layer_out(l));
        p.biases.emplace_back(spec.layer_out(l), 0.0);
    }
    return p;
}

ModelParams init_params(const ModelSpec& spec, RandomSource rng) {
    ModelParams p = zero_params(spec);
    for (int l = 0; l < spec.n_layers(); ++l) {
        const double limit = std::sqrt(6.0 / (spec.layer_in(l) + spec.layer_out(l)));
        Matrix& w = p.weights[l];
        for (std::size_t i = 0; i < w.size(); ++i)
            w.data()[i] = (2.0 * rng.next_unit() - 1.0) * limit;
    }
    return p;
}

void MlpScratch::resize(const ModelSpec& spec) {
    sized_for = spec;
    const int L = spec.n_layers();
    act.assign(L + 1, {});
    pre.assign(L, {});
    tan.assign(L + 1, {});
    cot.assign(L + 1, {});
    act[0].resize(spec.input_dim);
    tan[0].resize(spec.input_dim);
    cot[0].resize(spec.input_dim);
    for (int l = 0; l < L; ++l) {
        pre[l].resize(spec.layer_out(l));
        act[l + 1].resize(spec.layer_out(l));
        tan[l + 1].resize(spec.layer_out(l));
        cot[l + 1].resize(spec.layer_out(l));
    }
}

namespace {

// Forward through all layers; ws.act[0] holds the assembled input.
void forward_from_input(const ModelParams& p, MlpScratch& ws) {
    const int L = p.spec.n_layers();
    for (int l = 0; l < L; ++l) {
        const int nin = p.spec.layer_in(l);
        const int nout = p.spec.layer_out(l);
        double* z = ws.pre[l].data();
        std::copy(p.biases[l].begin(), p.biases[l].end(), z);
        const double* h = ws.act[l].data();
        for (int k = 0; k < nin; ++k) axpy(h[k], p.weights[l].row(k), z, nout);
        double* a = ws.act[l + 1].data();
        if (l < L - 1) {
            for (int j = 0; j < nout; ++j) a[j] = z[j] > 0.0 ? z[j] : 0.0;
        } else {
            std::copy(z, z + nout, a);
        }
    }
    ws.passes_ += 1;
}

void check_ws(const ModelSpec& spec, MlpScratch& ws) {
    if (!(ws.sized_for == spec)) ws.resize(spec);
}

void assemble_input(const ModelSpec& spec, double t, std::span<const double> x, MlpScratch& ws) {
    if (static_cast<int>(x.size()) != spec.state_dim())
        throw std::invalid_argument("mlp: state has wrong dimension");
    if (!std::isfinite(t)) throw std::invalid_argument("mlp: non-finite time");
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("mlp: non-finite state");
    std::copy(x.begin(), x.end(), ws.act[0].begin());
    ws.act[0][spec.state_dim()] = t;
}

// Tangent sweep through stored pre-activations; ws.tan[0] holds the input
// tangent ([dx; 0] for spatial directions).
void jvp_from_state(const ModelParams& p, MlpScratch& ws) {
    const int L = p.spec.n_layers();
    for (int l = 0; l < L; ++l) {
        const int nin = p.spec.layer_in(l);
        const int nout = p.spec.layer_out(l);
        double* tz = ws.tan[l + 1].data();
        std::fill(tz, tz + nout, 0.0);
        const double* th = ws.tan[l].data();
        for (int k = 0; k < nin; ++k) axpy(th[k], p.weights[l].row(k), tz, nout);
        if (l < L - 1) {
            const double* z = ws.pre[l].data();
            for (int j = 0; j < nout; ++j)
                if (!(z[j] > 0.0)) tz[j] = 0.0;
        }
    }
    ws.passes_ += 1;
}

// Reverse sweep; ws.cot[L] holds the output cotangent, result lands in cot[0].
void vjp_from_state(const ModelParams& p, MlpScratch& ws) {
    const int L = p.spec.n_layers();
    for (int l = L - 1; l >= 0; --l) {
        const int nin = p.spec.layer_in(l);
        const int nout = p.spec.layer_out(l);
        double* dz = ws.cot[l + 1].data();
        if (l < L - 1) {
            const double* z = ws.pre[l].data();
            for (int j = 0; j < nout; ++j)
                if (!(z[j] > 0.0)) dz[j] = 0.0;
        }
        double* dh = ws.cot[l].data();
        for (int k = 0; k < nin; ++k) dh[k] = dot_accum4(p.weights[l].row(k), dz, nout);
    }
    ws.passes_ += 1;
}

} // namespace

void mlp_forward(const ModelParams& p, double t, std::span<const double> x,
                 std::span<double> v_out, MlpScratch& ws) {
    check_ws(p.spec, ws);
    assemble_input(p.spec, t, x, ws);
    forward_from_input(p, ws);
    const auto& out = ws.act[p.spec.n_layers()];
    std::copy(out.begin(), out.end(), v_out.begin());
}

Vec2 mlp_forward2(const ModelParams& p, double t, Vec2 x, MlpScratch& ws) {
    double xin[2] = {x.x, x.y};
    double out[2];
    mlp_forward(p, t, std::span<const double>(xin, 2), std::span<double>(out, 2), ws);
    return {out[0], out[1]};
}

void input_jvp(const ModelParams& p, double t, std::span<const double> x,
               std::span<const double> direction, std::span<double> out, MlpScratch& ws) {
    const int d = p.spec.state_dim();
    if (static_cast<int>(direction.size()) != d)
        throw std::invalid_argument("input_jvp: direction has wrong dimension");
    double n2 = 0.0;
    for (double v : direction) n2 += v * v;
    if (std::abs(n2 - 1.0) > 1e-9)
        throw std::invalid_argument("input_jvp: direction must be unit norm");
    check_ws(p.spec, ws);
    assemble_input(p.spec, t, x, ws);
    forward_from_input(p, ws);
    std::copy(direction.begin(), direction.end(), ws.tan[0].begin());
    ws.tan[0][d] = 0.0;
    jvp_from_state(p, ws);
    const auto& tv = ws.tan[p.spec.n_layers()];
    std::copy(tv.begin(), tv.end(), out.begin());
}

Vec2 input_jvp2(const ModelParams& p, double t, Vec2 x, Vec2 direction, MlpScratch& ws) {
    double xin[2] = {x.x, x.y};
    double dir[2] = {direction.x, direction.y};
    double out[2];
    input_jvp(p, t, std::span<const double>(xin, 2), std::span<const double>(dir, 2),
              std::span<double>(out, 2), ws);
    return {out[0], out[1]};
}

void input_vjp(const ModelParams& p, double t, std::span<const double> x,
               std::span<const double> cotangent, std::span<double> out, MlpScratch& ws) {
    const int d = p.spec.state_dim();
    if (static_cast<int>(cotangent.size()) != d)
        throw std::invalid_argument("input_vjp: cotangent has wrong dimension");
    check_ws(p.spec, ws);
    assemble_input(p.spec, t, x, ws);
    forward_from_input(p, ws);
    std::copy(cotangent.begin(), cotangent.end(), ws.cot[p.spec.n_layers()].begin());
    vjp_from_state(p, ws);
    for (int k = 0; k < d; ++k) out[k] = ws.cot[0][k];
}

namespace {

// d tangent sweeps against the already-computed forward state.
double divergence_from_state(const ModelParams& p, MlpScratch& ws) {
    const int d = p.spec.state_dim();
    double div = 0.0;
    for (int k = 0; k < d; ++k) {
        std::fill(ws.tan[0].begin(), ws.tan[0].end(), 0.0);
        ws.tan[0][k] = 1.0;
        jvp_from_state(p, ws);
        div += ws.tan[p.spec.n_layers()][k];
    }
    return div;
}

} // namespace

double exact_divergence(const ModelParams& p, double t, std::span<const double> x, MlpScratch& ws) {
    if (p.spec.state_dim() > 4)
        throw std::invalid_argument(
            "exact_divergence: supported for d <= 4 only; use hutchinson_divergence for larger d");
    check_ws(p.spec, ws);
    assemble_input(p.spec, t, x, ws);
    forward_from_input(p, ws);
    return divergence_from_state(p, ws);
}

double exact_divergence2(const ModelParams& p, double t, Vec2 x, MlpScratch& ws) {
    double xin[2] = {x.x, x.y};
    return exact_divergence(p, t, std::span<const double>(xin, 2), ws);
}

Mat2 input_jacobian2(const ModelParams& p, double t, Vec2 x, MlpScratch& ws) {
    if (p.spec.state_dim() != 2)
        throw std::invalid_argument("input_jacobian2: model is not 2-dimensional");
    check_ws(p.spec, ws);
    double xin[2] = {x.x, x.y};
    assemble_input(p.spec, t, std::span<const double>(xin, 2), ws);
    forward_from_input(p, ws);
    Mat2 jac;
    const int L = p.spec.n_layers();
    for (int k = 0; k < 2; ++k) {
        std::fill(ws.tan[0].begin(), ws.tan[0].end(), 0.0);
        ws.tan[0][k] = 1.0;
        jvp_from_state(p, ws);
        if (k == 0) {
            jac.xx = ws.tan[L][0];
            jac.yx = ws.tan[L][1];
        } else {
            jac.xy = ws.tan[L][0];
            jac.yy = ws.tan[L][1];
        }
    }
    return jac;
}

DivergenceEstimate hutchinson_divergence_with_probes(const ModelParams& p, double t,
                                                     std::span<const double> x,
                                                     std::span<const double> probes, int n_h,
                                                     MlpScratch& ws) {
    if (n_h < 1) throw std::invalid_argument("hutchinson_divergence: n_h must be >= 1");
    const int d = p.spec.state_dim();
    if (static_cast<int>(probes.size()) != n_h * d)
        throw std::invalid_argument("hutchinson_divergence: probe buffer has wrong size");
    check_ws(p.spec, ws);
    assemble_input(p.spec, t, x, ws);
    forward_from_input(p, ws);
    const int L = p.spec.n_layers();
    double sum = 0.0;
    for (int s = 0; s < n_h; ++s) {
        const double* eps = probes.data() + static_cast<std::size_t>(s) * d;
        std::copy(eps, eps + d, ws.cot[L].begin());
        vjp_from_state(p, ws);
        double q = 0.0;
        for (int k = 0; k < d; ++k) q += ws.cot[0][k] * eps[k];
        sum += q;
    }
    DivergenceEstimate est;
    est.value = sum / (static_cast<double>(n_h) * d);
    est.velocity.assign(ws.act[L].begin(), ws.act[L].end());
    est.n_probes = n_h;
    return est;
}

DivergenceEstimate hutchinson_divergence(const ModelParams& p, double t,
                                         std::span<const double> x,
                                         RandomSource& probe_rng, int n_h, MlpScratch& ws) {
    const int d = p.spec.state_dim();
    std::vector<double> probes(static_cast<std::size_t>(n_h) * d);
    for (auto& v : probes) v = (probe_rng.next_u64() >> 63) ? 1.0 : -1.0;
    return hutchinson_divergence_with_probes(p, t, x, probes, n_h, ws);
}

// --- batched kernels ---------------------------------------------------------

void GradBuffer::init_like(const ModelParams& p) {
    weights.clear();
    biases.clear();
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        weights.emplace_back(p.weights[l].rows(), p.weights[l].cols());
        biases.emplace_back(p.biases[l].size(), 0.0);
    }
}

void GradBuffer::zero() {
    for (auto& w : weights) w.fill(0.0);
    for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

void GradBuffer::add(const GradBuffer& o) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        double* a = weights[l].data();
        const double* b = o.weights[l].data();
        for (std::size_t i = 0; i < weights[l].size(); ++i) a[i] += b[i];
        for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += o.biases[l][i];
    }
}

namespace {

constexpr int kChunk = 64;

struct ChunkScratch {
    std::vector<Matrix> act;  // act[l]: (kChunk x width)
    std::vector<Matrix> pre;
    std::vector<Matrix> dpre;

    explicit ChunkScratch(const ModelSpec& spec) {
        const int L = spec.n_layers();
        act.emplace_back(kChunk, spec.input_dim);
        for (int l = 0; l < L; ++l) {
            pre.emplace_back(kChunk, spec.layer_out(l));
            dpre.emplace_back(kChunk, spec.layer_out(l));
            act.emplace_back(kChunk, spec.layer_out(l));
        }
    }
};

void chunk_forward(const ModelParams& p, ChunkScratch& cs, int count) {
    const int L = p.spec.n_layers();
    for (int l = 0; l < L; ++l) {
        const int nin = p.spec.layer_in(l);
        const int nout = p.spec.layer_out(l);
        for (int i = 0; i < count; ++i) {
            double* z = cs.pre[l].row(i);
            std::copy(p.biases[l].begin(), p.biases[l].end(), z);
            const double* h = cs.act[l].row(i);
            for (int k = 0; k < nin; ++k) axpy(h[k], p.weights[l].row(k), z, nout);
            double* a = cs.act[l + 1].row(i);
            if (l < L - 1) {
                for (int j = 0; j < nout; ++j) a[j] = z[j] > 0.0 ? z[j] : 0.0;
            } else {
                std::copy(z, z + nout, a);
            }
        }
    }
}

// Accumulates d/dtheta of sum_i ||f_i - target_i||^2 into g; returns the
// summed squared residual.
double chunk_backward(const ModelParams& p, ChunkScratch& cs,
                      const double* targets, int count, GradBuffer& g) {
    const int L = p.spec.n_layers();
    const int d = p.spec.output_dim;
    double loss = 0.0;
    for (int i = 0; i < count; ++i) {
        const double* out = cs.act[L].row(i);
        const double* tgt = targets + static_cast<std::size_t>(i) * d;
        double* dz = cs.dpre[L - 1].row(i);
        for (int j = 0; j < d; ++j) {
            const double r = out[j] - tgt[j];
            loss += r * r;
            dz[j] = 2.0 * r;
        }
    }
    for (int l = L - 1; l >= 0; --l) {
        const int nin = p.spec.layer_in(l);
        const int nout = p.spec.layer_out(l);
        for (int i = 0; i < count; ++i) {
            const double* dz = cs.dpre[l].row(i);
            const double* h = cs.act[l].row(i);
            for (int k = 0; k < nin; ++k) axpy(h[k], dz, g.weights[l].row(k), nout);
            axpy(1.0, dz, g.biases[l].data(), nout);
        }
        if (l > 0) {
            for (int i = 0; i < count; ++i) {
                const double* dz = cs.dpre[l].row(i);
                const double* zprev = cs.pre[l - 1].row(i);
                double* dprev = cs.dpre[l - 1].row(i);
                for (int k = 0; k < nin; ++k)
                    dprev[k] = zprev[k] > 0.0
                                   ? dot_accum4(p.weights[l].row(k), dz, nout)
                                   : 0.0;
            }
        }
    }
    return loss;
}

void fill_chunk_input(const ModelSpec& spec, const TrainBatch& batch, int first, int count,
                      ChunkScratch& cs) {
    const int d = spec.state_dim();
    for (int i = 0; i < count; ++i) {
        double* in = cs.act[0].row(i);
        const double* x = batch.x.data() + static_cast<std::size_t>(first + i) * d;
        std::copy(x, x + d, in);
        in[d] = batch.t[first + i];
    }
}

GradBuffer param_gradient_impl(const ModelParams& p, const TrainBatch& batch,
                               double* loss_out, bool parallel) {
    if (batch.n < 1) throw std::invalid_argument("param_gradient: batch must be nonempty");
    if (batch.d != p.spec.state_dim())
        throw std::invalid_argument("param_gradient: batch dimension mismatch");
    const int nc = (batch.n + kChunk - 1) / kChunk;
    std::vector<GradBuffer> bufs(nc);
    std::vector<double> losses(static_cast<std::size_t>(nc), 0.0);
    for (auto& b : bufs) b.init_like(p);

#pragma omp parallel if (parallel)
    {
        ChunkScratch cs(p.spec);
#pragma omp for schedule(static)
        for (int c = 0; c < nc; ++c) {
            const int first = c * kChunk;
            const int count = std::min(kChunk, batch.n - first);
            fill_chunk_input(p.spec, batch, first, count, cs);
            chunk_forward(p, cs, count);
            losses[c] = chunk_backward(p, cs, batch.target.data() + static_cast<std::size_t>(first) * batch.d,
                                       count, bufs[c]);
        }
    }

    // Pairwise tree combine in chunk-index order: the reduction order is a
    // function of the chunk count only, never of the worker count.
    for (int stride = 1; stride < nc; stride *= 2) {
        for (int i = 0; i + stride < nc; i += 2 * stride) {
            bufs[i].add(bufs[i + stride]);
            losses[i] += losses[i + stride];
        }
    }

    const double inv_n = 1.0 / batch.n;
    for (auto& w : bufs[0].weights) {
        double* a = w.data();
        for (std::size_t i = 0; i < w.size(); ++i) a[i] *= inv_n;
    }
    for (auto& b : bufs[0].biases)
        for (auto& v : b) v *= inv_n;
    if (loss_out) *loss_out = losses[0] * inv_n;
    return std::move(bufs[0]);
}

} // namespace

double batch_loss(const ModelParams& p, const TrainBatch& batch) {
    if (batch.n < 1) throw std::invalid_argument("batch_loss: batch must be nonempty");
    MlpScratch ws(p.spec);
    const int d = batch.d;
    std::vector<double> out(d);
    double sum = 0.0;
    for (int i = 0; i < batch.n; ++i) {
        std::span<const double> x(batch.x.data() + static_cast<std::size_t>(i) * d, d);
        mlp_forward(p, batch.t[i], x, out, ws);
        const double* tgt = batch.target.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) {
            const double r = out[j] - tgt[j];
            sum += r * r;
        }
    }
    return sum / batch.n;
}

GradBuffer param_gradient(const ModelParams& p, const TrainBatch& batch, double* loss_out) {
    return param_gradient_impl(p, batch, loss_out, true);
}

GradBuffer param_gradient_serial(const ModelParams& p, const TrainBatch& batch, double* loss_out) {
    return param_gradient_impl(p, batch, loss_out, false);
}

// --- checkpoint io -----------------------------------------------------------

namespace {

constexpr char kMagic[] = "DSRF0001\n";

void write_f64_le(std::ostream& os, double v) {
    const std::uint64_t u = std::bit_cast<std::uint64_t>(v);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((u >> (8 * i)) & 0xFF);
    os.write(b, 8);
}

double read_f64_le(std::istream& is) {
    char b[8];
    is.read(b, 8);
    if (is.gcount() != 8)
        throw CheckpointTruncatedError("checkpoint: unexpected end of file in parameter data");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i)
        u |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return std::bit_cast<double>(u);
}

std::string spec_string(const ModelSpec& s) {
    std::ostringstream os;
    os << "d=" << s.output_dim << " layers=";
    for (std::size_t i = 0; i < s.hidden_widths.size(); ++i) {
        if (i) os << ",";
        os << s.hidden_widths[i];
    }
    return os.str();
}

} // namespace

void save_checkpoint(const ModelParams& p, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    os.write(kMagic, sizeof(kMagic) - 1);
    os << spec_string(p.spec) << "\n";
    for (int l = 0; l < p.spec.n_layers(); ++l) {
        const Matrix& w = p.weights[l];
        // file layout is (out x in) row-major
        for (int r = 0; r < w.cols(); ++r)
            for (int c = 0; c < w.rows(); ++c) write_f64_le(os, w(c, r));
        for (double v : p.biases[l]) write_f64_le(os, v);
    }
    if (!os.good()) throw std::runtime_error("checkpoint: write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);

    char magic[sizeof(kMagic) - 1];
    is.read(magic, sizeof(magic));
    if (is.gcount() != static_cast<std::streamsize>(sizeof(magic)))
        throw CheckpointTruncatedError("checkpoint: file shorter than magic: " + path);
    if (std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw CheckpointMagicError("checkpoint: bad magic in " + path);

    std::string header;
    if (!std::getline(is, header))
        throw CheckpointTruncatedError("checkpoint: missing header line: " + path);

    ModelSpec spec;
    spec.hidden_widths.clear();
    int d = 0;
    std::istringstream hs(header);
    std::string tok;
    bool have_d = false, have_layers = false;
    while (hs >> tok) {
        if (tok.rfind("d=", 0) == 0) {
            d = std::stoi(tok.substr(2));
            have_d = true;
        } else if (tok.rfind("layers=", 0) == 0) {
            std::istringstream ls(tok.substr(7));
            std::string w;
            while (std::getline(ls, w, ',')) spec.hidden_widths.push_back(std::stoi(w));
            have_layers = true;
        }
    }
    if (!have_d || !have_layers || d < 1 || spec.hidden_widths.empty())
        throw CheckpointShapeError("checkpoint: malformed header '" + header + "' in " + path);
    spec.output_dim = d;
    spec.input_dim = d + 1;
    spec.validate();

    ModelParams p = zero_params(spec);
    for (int l = 0; l < spec.n_layers(); ++l) {
        Matrix& w = p.weights[l];
        for (int r = 0; r < w.cols(); ++r)
            for (int c = 0; c < w.rows(); ++c) w(c, r) = read_f64_le(is);
        for (auto& v : p.biases[l]) v = read_f64_le(is);
    }
    return p;
}

ModelParams load_checkpoint(const std::string& path, const ModelSpec& expected) {
    ModelParams p = load_checkpoint(path);
    if (!(p.spec == expected))
        throw CheckpointShapeError("checkpoint: spec mismatch in " + path + ": file has " +
                                   spec_string(p.spec) + ", expected " + spec_string(expected));
    return p;
}

} // namespace dsrf
