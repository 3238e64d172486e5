#pragma once

#include <string>
#include <vector>

#include "dsrf/mlp.hpp"
#include "dsrf/vec2.hpp"

namespace dsrf {

enum class GridBoundary { periodic };

/// Velocity samples on a periodic lattice over an axis-aligned box: value
/// (i, j) sits at (x0 + i hx, y0 + j hy), with x0 + lx wrapping back to x0.
/// Doubling the resolution keeps every other lattice point in place.
struct GridField {
    int nx = 0, ny = 0;
    double x0 = 0.0, y0 = 0.0;
    double lx = 0.0, ly = 0.0;
    GridBoundary boundary = GridBoundary::periodic;
    std::vector<Vec2> values; // index i + nx * j

    double hx() const { return lx / nx; }
    double hy() const { return ly / ny; }
    Vec2& at(int i, int j) { return values[static_cast<std::size_t>(j) * nx + i]; }
    const Vec2& at(int i, int j) const { return values[static_cast<std::size_t>(j) * nx + i]; }
    Vec2 point(int i, int j) const { return {x0 + i * hx(), y0 + j * hy()}; }
    void validate() const; // nx, ny >= 8; sizes consistent; finite entries
};

struct ScalarGrid {
    int nx = 0, ny = 0;
    std::vector<double> values;

    double& at(int i, int j) { return values[static_cast<std::size_t>(j) * nx + i]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(j) * nx + i]; }
};

/// v = u + grad(phi) with div(u) = 0 in the discrete (central-difference)
/// sense; phi is gauge-fixed to zero mean.
struct HelmholtzDecomposition {
    GridField transport;  // u, divergence-free
    ScalarGrid potential; // phi
    GridField dipole;     // grad(phi), irrotational
};

/// Evaluates the model on the lattice centers at fixed time.
GridField grid_sample_field(const ModelParams& params, double t, int nx, int ny, double x0,
                            double y0, double lx, double ly);

/// Central-difference divergence / scalar curl with periodic wrap. These are
/// the same difference operators the Poisson solve diagonalises, so
/// decompose() satisfies its invariants to rounding.
ScalarGrid grid_divergence(const GridField& f);
ScalarGrid grid_curl(const GridField& f);

/// Splits v by solving lap(phi) = div(v) in the discrete Fourier basis of
/// the periodic central-difference operators, then u = v - grad(phi).
/// Fourier modes annihilated by the difference operator (mean and Nyquist)
/// carry no divergence and are left in u.
HelmholtzDecomposition decompose(const GridField& v);

/// Grid dump: CSV "i,j,x,y,vx,vy,ux,uy,gpx,gpy,div,curl".
void write_grid_csv(const std::string& path, const GridField& v,
                    const HelmholtzDecomposition& parts);

} // namespace dsrf
