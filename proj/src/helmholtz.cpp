#include "dsrf/helmholtz.hpp"

#include <fftw3.h>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace dsrf {

void GridField::validate() const {
    if (nx < 8 || ny < 8) throw std::invalid_argument("GridField: resolution must be >= 8");
    if (lx <= 0.0 || ly <= 0.0) throw std::invalid_argument("GridField: extent must be positive");
    if (values.size() != static_cast<std::size_t>(nx) * ny)
        throw std::invalid_argument("GridField: value count does not match resolution");
    for (const Vec2& v : values)
        if (!v.finite()) throw std::invalid_argument("GridField: non-finite value");
}

GridField grid_sample_field(const ModelParams& params, double t, int nx, int ny, double x0,
                            double y0, double lx, double ly) {
    GridField g;
    g.nx = nx;
    g.ny = ny;
    g.x0 = x0;
    g.y0 = y0;
    g.lx = lx;
    g.ly = ly;
    g.values.resize(static_cast<std::size_t>(nx) * ny);
    g.validate();
    MlpScratch ws(params.spec);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) g.at(i, j) = mlp_forward2(params, t, g.point(i, j), ws);
    return g;
}

namespace {

inline int wrap(int i, int n) { return i >= n ? i - n : (i < 0 ? i + n : i); }

} // namespace

ScalarGrid grid_divergence(const GridField& f) {
    f.validate();
    ScalarGrid out{f.nx, f.ny, std::vector<double>(f.values.size())};
    const double ix = 1.0 / (2.0 * f.hx());
    const double iy = 1.0 / (2.0 * f.hy());
    for (int j = 0; j < f.ny; ++j)
        for (int i = 0; i < f.nx; ++i)
            out.at(i, j) = (f.at(wrap(i + 1, f.nx), j).x - f.at(wrap(i - 1, f.nx), j).x) * ix +
                           (f.at(i, wrap(j + 1, f.ny)).y - f.at(i, wrap(j - 1, f.ny)).y) * iy;
    return out;
}

ScalarGrid grid_curl(const GridField& f) {
    f.validate();
    ScalarGrid out{f.nx, f.ny, std::vector<double>(f.values.size())};
    const double ix = 1.0 / (2.0 * f.hx());
    const double iy = 1.0 / (2.0 * f.hy());
    for (int j = 0; j < f.ny; ++j)
        for (int i = 0; i < f.nx; ++i)
            out.at(i, j) = (f.at(wrap(i + 1, f.nx), j).y - f.at(wrap(i - 1, f.nx), j).y) * ix -
                           (f.at(i, wrap(j + 1, f.ny)).x - f.at(i, wrap(j - 1, f.ny)).x) * iy;
    return out;
}

HelmholtzDecomposition decompose(const GridField& v) {
    v.validate();
    const int nx = v.nx, ny = v.ny;
    const std::size_t n = static_cast<std::size_t>(nx) * ny;

    const ScalarGrid rhs = grid_divergence(v);

    fftw_complex* buf = fftw_alloc_complex(n);
    fftw_plan fwd = fftw_plan_dft_2d(ny, nx, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_plan bwd = fftw_plan_dft_2d(ny, nx, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);

    for (std::size_t k = 0; k < n; ++k) {
        buf[k][0] = rhs.values[k];
        buf[k][1] = 0.0;
    }
    fftw_execute(fwd);

    // The central-difference operator D has symbol i*sin(2 pi k / n)/h, so
    // the discrete Laplacian D_x^2 + D_y^2 is diagonal with eigenvalue
    // -(sx^2 + sy^2). Modes with zero eigenvalue (mean and Nyquist) get
    // phi_hat = 0; the Nyquist sine must be zeroed by index, sin(pi) in
    // floating point is ~1e-16 and would otherwise blow the division up.
    for (int kj = 0; kj < ny; ++kj) {
        const double sy = 2 * kj == ny ? 0.0 : std::sin(2.0 * M_PI * kj / ny) / v.hy();
        for (int ki = 0; ki < nx; ++ki) {
            const double sx = 2 * ki == nx ? 0.0 : std::sin(2.0 * M_PI * ki / nx) / v.hx();
            const double lam = -(sx * sx + sy * sy);
            const std::size_t k = static_cast<std::size_t>(kj) * nx + ki;
            if (lam == 0.0) {
                buf[k][0] = 0.0;
                buf[k][1] = 0.0;
            } else {
                buf[k][0] /= lam;
                buf[k][1] /= lam;
            }
        }
    }
    fftw_execute(bwd);

    HelmholtzDecomposition out;
    out.potential.nx = nx;
    out.potential.ny = ny;
    out.potential.values.resize(n);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) out.potential.values[k] = buf[k][0] * scale;

    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(buf);

    out.dipole = v;
    const double ix = 1.0 / (2.0 * v.hx());
    const double iy = 1.0 / (2.0 * v.hy());
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            out.dipole.at(i, j) = {
                (out.potential.at(wrap(i + 1, nx), j) - out.potential.at(wrap(i - 1, nx), j)) * ix,
                (out.potential.at(i, wrap(j + 1, ny)) - out.potential.at(i, wrap(j - 1, ny))) * iy};

    out.transport = v;
    for (std::size_t k = 0; k < n; ++k) out.transport.values[k] = v.values[k] - out.dipole.values[k];
    return out;
}

void write_grid_csv(const std::string& path, const GridField& v,
                    const HelmholtzDecomposition& parts) {
    const ScalarGrid div = grid_divergence(v);
    const ScalarGrid curl = grid_curl(v);
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "i,j,x,y,vx,vy,ux,uy,gpx,gpy,div,curl\n";
    os.precision(17);
    for (int j = 0; j < v.ny; ++j)
        for (int i = 0; i < v.nx; ++i) {
            const Vec2 c = v.point(i, j);
            const Vec2 vv = v.at(i, j);
            const Vec2 u = parts.transport.at(i, j);
            const Vec2 gp = parts.dipole.at(i, j);
            os << i << "," << j << "," << c.x << "," << c.y << "," << vv.x << "," << vv.y << ","
               << u.x << "," << u.y << "," << gp.x << "," << gp.y << "," << div.at(i, j) << ","
               << curl.at(i, j) << "\n";
        }
    if (!os.good()) throw std::runtime_error("write failed: " + path);
}

} // namespace dsrf
