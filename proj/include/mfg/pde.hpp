#pragma once

// Finite-difference oracle for the coupled system
//
//   dPhi/dt + (dPhi/dx)^2 / 2 + delta^2/2 d2Phi/dx2 = -g(x),   Phi(T) = K
//   dm/dt + d/dx(m dPhi/dx) = delta^2/2 d2m/dx2,              m(0) = m0
//
// The HJB equation is linearized exactly by w = exp(Phi / delta^2), which
// satisfies the backward heat equation w_t + delta^2/2 w_xx + g/delta^2 w = 0.
// That is stepped with Strang splitting: the potential factor is applied
// exactly, the diffusion with Crank-Nicolson. The Fokker-Planck equation uses
// a conservative centered-flux Crank-Nicolson scheme.

#include "mfg/gaussian.hpp"
#include "mfg/halfline.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mfg::pde {

enum class Domain {
    FullLine, ///< open boundaries on both ends of a truncated interval
    HalfLine, ///< x_min = 0 with dPhi/dx = m = 0 there
};

struct Grid1D {
    double x_min = -1.0;
    double x_max = 1.0;
    std::size_t nx = 256; ///< space points
    std::size_t nt = 256; ///< time steps on [0, T]

    void validate() const;
    double dx() const { return (x_max - x_min) / static_cast<double>(nx - 1); }
    double x(std::size_t i) const { return x_min + dx() * static_cast<double>(i); }
    std::vector<double> nodes() const;

    /// Covers mean +/- 8 standard deviations of the Riccati density at every
    /// output time (which includes m0 and the terminal density).
    static Grid1D for_gaussian(const gaussian::GaussianSolution& sol, std::size_t nx,
                               std::size_t nt);
    /// [0, max_t(Q(t) + 10 / sqrt(K2(t)))].
    static Grid1D for_halfline(const halfline::HalfLineSolution& sol, std::size_t nx,
                               std::size_t nt);
};

/// Row-major (time level, space point) field.
class Field2D {
public:
    Field2D() = default;
    Field2D(std::size_t levels, std::size_t points)
        : levels_(levels), points_(points), data_(levels * points, 0.0) {}

    std::size_t levels() const { return levels_; }
    std::size_t points() const { return points_; }
    double& at(std::size_t n, std::size_t i) { return data_[n * points_ + i]; }
    double at(std::size_t n, std::size_t i) const { return data_[n * points_ + i]; }
    std::span<double> row(std::size_t n) { return {data_.data() + n * points_, points_}; }
    std::span<const double> row(std::size_t n) const {
        return {data_.data() + n * points_, points_};
    }

private:
    std::size_t levels_ = 0;
    std::size_t points_ = 0;
    std::vector<double> data_;
};

struct PdeOptions {
    /// Below this delta the exponential transform is too steep to resolve.
    double min_delta = 1e-3;
    /// MassLeak is raised once |mass + absorbed - 1| exceeds this. Also bounds
    /// the trapezoid defect of m0, which is normalized away.
    double mass_tolerance = 1e-3;
    /// Points with m below this fraction of the level maximum are excluded
    /// from the log-quadratic fit.
    double fit_floor = 1e-4;
};

struct FpkDiagnostics {
    double clipped_mass = 0.0; ///< total negative mass removed by clipping
    double max_interior_drift = 0.0; ///< max relative interior mass change per step
    double absorbed_mass = 0.0; ///< mass that left through the x = 0 wall (half-line only)
};

struct PdeSolution {
    Grid1D grid;
    Domain domain = Domain::FullLine;
    std::vector<double> times; ///< nt + 1 levels
    Field2D phi;
    Field2D m;
    std::vector<double> mode_curve;
    std::vector<double> mass_curve;
    std::vector<double> gaussian_r2;
    FpkDiagnostics diagnostics;
};

/// Backward HJB solve. `terminal` holds K sampled on the grid nodes.
Field2D solve_hjb_backward(const QuadraticCost& cost, std::span<const double> terminal,
                           const Grid1D& grid, Domain domain = Domain::FullLine,
                           const PdeOptions& options = {});

/// Forward Fokker-Planck solve driven by dPhi/dx.
Field2D solve_fpk_forward(const Field2D& phi, std::span<const double> m0,
                          const QuadraticCost& cost, const Grid1D& grid,
                          Domain domain = Domain::FullLine, const PdeOptions& options = {},
                          FpkDiagnostics* diagnostics = nullptr);

/// Sub-grid argmax of one density row by parabolic interpolation through the
/// discrete maximum and its two neighbours.
double extract_mode(std::span<const double> m, const Grid1D& grid);

/// Trapezoid mass of one row.
double trapezoid_mass(std::span<const double> m, const Grid1D& grid);

/// Coefficient of determination of a least-squares quadratic fit to ln m
/// (ln(m/x) on the half-line) over points with m >= floor * max m.
double log_quadratic_r2(std::span<const double> m, const Grid1D& grid, Domain domain,
                        double floor);

PdeSolution solve(const QuadraticCost& cost, const std::function<double(double)>& terminal,
                  const std::function<double(double)>& initial_density, const Grid1D& grid,
                  Domain domain = Domain::FullLine, const PdeOptions& options = {});

PdeSolution solve_gaussian(const QuadraticCost& cost, const QuadraticTerminal& terminal,
                           const GaussianInitial& initial, const Grid1D& grid,
                           const PdeOptions& options = {});

PdeSolution solve_halfline(const QuadraticCost& cost, const QuadraticTerminal& terminal,
                           const HalfLineInitial& initial, const Grid1D& grid,
                           const PdeOptions& options = {});

/// CSV dump with header "t,x,phi,m", row-major by time level.
void write_fields_csv(const PdeSolution& sol, const std::string& path);

} // namespace mfg::pde
