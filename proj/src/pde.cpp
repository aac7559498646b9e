#include "mfg/pde.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <fmt/os.h>

namespace mfg::pde {

namespace {

// Thomas algorithm; `lower[0]` and `upper[n-1]` are ignored.
void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs) {
    const std::size_t n = diag.size();
    std::vector<double> c(n);
    double den = diag[0];
    c[0] = upper[0] / den;
    rhs[0] /= den;
    for (std::size_t i = 1; i < n; ++i) {
        den = diag[i] - lower[i] * c[i - 1];
        c[i] = i + 1 < n ? upper[i] / den : 0.0;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / den;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

constexpr double kTiny = 1e-300;

// Open boundary for w = exp(Phi / delta^2): ln w extrapolated quadratically
// from the three nearest interior nodes of the previous level, i.e.
// w_edge / w_1 = w_1^2 w_3 / w_2^3.
double edge_ratio(double w1, double w2, double w3) {
    const double l1 = std::log(std::max(w1, kTiny));
    const double l2 = std::log(std::max(w2, kTiny));
    const double l3 = std::log(std::max(w3, kTiny));
    return std::exp(2.0 * l1 - 3.0 * l2 + l3);
}

} // namespace

void Grid1D::validate() const {
    if (!(x_min < x_max)) throw InvalidParameter("grid needs x_min < x_max");
    if (nx < 64 || nt < 64) throw InvalidParameter("grid needs nx >= 64 and nt >= 64");
}

std::vector<double> Grid1D::nodes() const {
    std::vector<double> out(nx);
    for (std::size_t i = 0; i < nx; ++i) out[i] = x(i);
    return out;
}

Grid1D Grid1D::for_gaussian(const gaussian::GaussianSolution& sol, std::size_t nx,
                            std::size_t nt) {
    if (!sol.existence.global()) throw NonGlobalValue(*sol.existence.blowup_time);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const auto& p = sol.path;
    for (std::size_t n = 0; n < p.times.size(); ++n) {
        const double center = gaussian::mode_from_density(p.K1[n], p.K2[n]);
        const double sd = std::sqrt(gaussian::density_variance(p.K2[n]));
        lo = std::min(lo, center - 8.0 * sd);
        hi = std::max(hi, center + 8.0 * sd);
    }
    return Grid1D{lo, hi, nx, nt};
}

Grid1D Grid1D::for_halfline(const halfline::HalfLineSolution& sol, std::size_t nx,
                            std::size_t nt) {
    if (!sol.existence.global()) throw NonGlobalValue(*sol.existence.blowup_time);
    double hi = 0.0;
    for (double k2 : sol.path.K2) {
        const double width = 1.0 / std::sqrt(k2);
        hi = std::max(hi, 11.0 * width);
    }
    return Grid1D{0.0, hi, nx, nt};
}

Field2D solve_hjb_backward(const QuadraticCost& cost, std::span<const double> terminal,
                           const Grid1D& grid, Domain domain, const PdeOptions& options) {
    cost.validate();
    grid.validate();
    if (cost.delta < options.min_delta) {
        throw DegenerateDiffusion("delta below the exponential-transform threshold");
    }
    if (terminal.size() != grid.nx) throw InvalidParameter("terminal data size != nx");

    const std::size_t nx = grid.nx, nt = grid.nt;
    const double d2 = cost.delta * cost.delta;
    const double h = grid.dx();
    const double ds = cost.horizon / static_cast<double>(nt);
    const double mu = 0.5 * d2 * ds / (h * h);
    // th = 1/12 is the fourth-order compact weight. Below mu = 1/6 it is capped
    // at mu/2 so the implicit matrix stays an M-matrix; otherwise ringing
    // drives the far tails of w (often below 1e-150) negative.
    const double th = std::min(1.0 / 12.0, 0.5 * mu);
    const double th_mid = 1.0 - 2.0 * th;

    std::vector<double> half_potential(nx);
    for (std::size_t i = 0; i < nx; ++i) {
        const double x = grid.x(i);
        half_potential[i] = 0.5 * ds * (cost.a * x * x + cost.b * x + cost.c) / d2;
    }
    const double pot_shift = *std::max_element(half_potential.begin(), half_potential.end());

    Field2D phi(nt + 1, nx);
    std::copy(terminal.begin(), terminal.end(), phi.row(nt).begin());

    // w = exp(Phi / delta^2 - log_scale), kept with max(w) = 1.
    const double kmax = *std::max_element(terminal.begin(), terminal.end());
    double log_scale = kmax / d2;
    std::vector<double> w(nx);
    for (std::size_t i = 0; i < nx; ++i) w[i] = std::exp((terminal[i] - kmax) / d2);

    std::vector<double> lower(nx), diag(nx), upper(nx), rhs(nx);
    auto apply_potential = [&] {
        for (std::size_t i = 0; i < nx; ++i) w[i] *= std::exp(half_potential[i] - pot_shift);
        log_scale += pot_shift;
    };

    for (std::size_t n = nt; n-- > 0;) {
        apply_potential();

        // Crank-Nicolson diffusion with a compact stencil:
        // (M - mu/2 D) w_new = (M + mu/2 D) w, M = (th, 1 - 2 th, th).
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            lower[i] = th - 0.5 * mu;
            diag[i] = th_mid + mu;
            upper[i] = th - 0.5 * mu;
            rhs[i] = th * (w[i - 1] + w[i + 1]) + th_mid * w[i] +
                     0.5 * mu * (w[i - 1] - 2.0 * w[i] + w[i + 1]);
        }
        if (domain == Domain::HalfLine) {
            // Mirror node: dPhi/dx = 0 at x = 0.
            diag[0] = th_mid + mu;
            upper[0] = 2.0 * th - mu;
            rhs[0] = 2.0 * th * w[1] + th_mid * w[0] + mu * (w[1] - w[0]);
        } else {
            diag[0] = 1.0;
            upper[0] = -edge_ratio(w[1], w[2], w[3]);
            rhs[0] = 0.0;
        }
        diag[nx - 1] = 1.0;
        lower[nx - 1] = -edge_ratio(w[nx - 2], w[nx - 3], w[nx - 4]);
        rhs[nx - 1] = 0.0;
        solve_tridiagonal(lower, diag, upper, rhs);
        w.swap(rhs);

        apply_potential();

        const double wmax = *std::max_element(w.begin(), w.end());
        if (!(wmax > 0.0) || !std::isfinite(wmax)) {
            throw DegenerateDiffusion("exponential transform lost positivity");
        }
        log_scale += std::log(wmax);
        auto row = phi.row(n);
        for (std::size_t i = 0; i < nx; ++i) {
            w[i] = std::max(w[i] / wmax, kTiny);
            row[i] = d2 * (std::log(w[i]) + log_scale);
        }
    }
    return phi;
}

Field2D solve_fpk_forward(const Field2D& phi, std::span<const double> m0,
                          const QuadraticCost& cost, const Grid1D& grid, Domain domain,
                          const PdeOptions& options, FpkDiagnostics* diagnostics) {
    cost.validate();
    grid.validate();
    const std::size_t nx = grid.nx, nt = grid.nt;
    if (m0.size() != nx || phi.points() != nx || phi.levels() != nt + 1) {
        throw InvalidParameter("field sizes do not match the grid");
    }
    const double h = grid.dx();
    const double dt = cost.horizon / static_cast<double>(nt);
    const double D = 0.5 * cost.delta * cost.delta;

    Field2D m(nt + 1, nx);
    for (std::size_t i = 0; i < nx; ++i) {
        if (m0[i] < 0.0) throw InvalidParameter("initial density must be non-negative");
        m.at(0, i) = m0[i];
    }
    m.at(0, 0) = 0.0;
    m.at(0, nx - 1) = 0.0;
    // A density with nonzero slope at x = 0 (the half-line case) carries an
    // O(dx^2) trapezoid defect; small defects are normalized away.
    const double mass0 = trapezoid_mass(m.row(0), grid);
    if (std::abs(mass0 - 1.0) > options.mass_tolerance) throw MassLeak(0.0, mass0);
    for (std::size_t i = 0; i < nx; ++i) m.at(0, i) /= mass0;
    // On the half-line m = 0 at x = 0 is an absorbing wall: outflow there is
    // part of the model, only the far boundary counts as leakage.
    const bool absorbing_left = domain == Domain::HalfLine;

    // Operator coefficients at one level: (L m)_i = lo_i m_{i-1} + di_i m_i + up_i m_{i+1}.
    struct Op {
        std::vector<double> lo, di, up, v;
    };
    auto build = [&](std::size_t n) {
        Op op{std::vector<double>(nx), std::vector<double>(nx), std::vector<double>(nx),
              std::vector<double>(nx - 1)};
        const auto p = phi.row(n);
        for (std::size_t i = 0; i + 1 < nx; ++i) op.v[i] = (p[i + 1] - p[i]) / h;
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            const double vm = op.v[i - 1], vp = op.v[i];
            op.lo[i] = (0.5 * vm + D / h) / h;
            op.di[i] = -(0.5 * (vp - vm) + 2.0 * D / h) / h;
            op.up[i] = -(0.5 * vp - D / h) / h;
        }
        return op;
    };
    // Net outflow through the two boundary faces (m_0 = m_{nx-1} = 0).
    auto boundary_outflow = [&](const Op& op, std::span<const double> mm) {
        const double f_left = mm[1] * (0.5 * op.v[0] - D / h);
        const double f_right = mm[nx - 2] * (0.5 * op.v[nx - 2] + D / h);
        return f_right - f_left;
    };
    auto left_outflow = [&](const Op& op, std::span<const double> mm) {
        return -mm[1] * (0.5 * op.v[0] - D / h);
    };

    FpkDiagnostics diag_out;
    std::vector<double> lower(nx), diag(nx), upper(nx), rhs(nx);
    Op cur = build(0);
    for (std::size_t n = 0; n < nt; ++n) {
        Op next = build(n + 1);
        const auto old = m.row(n);
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            rhs[i] = old[i] + 0.5 * dt * (cur.lo[i] * old[i - 1] + cur.di[i] * old[i] +
                                          cur.up[i] * old[i + 1]);
            lower[i] = -0.5 * dt * next.lo[i];
            diag[i] = 1.0 - 0.5 * dt * next.di[i];
            upper[i] = -0.5 * dt * next.up[i];
        }
        diag[0] = 1.0;
        upper[0] = 0.0;
        rhs[0] = 0.0;
        diag[nx - 1] = 1.0;
        lower[nx - 1] = 0.0;
        rhs[nx - 1] = 0.0;
        solve_tridiagonal(lower, diag, upper, rhs);

        // Interior conservation: mass change equals the boundary-flux budget.
        double before = 0.0, after = 0.0;
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            before += old[i];
            after += rhs[i];
        }
        const double budget =
            -0.5 * dt * (boundary_outflow(cur, old) + boundary_outflow(next, rhs)) / h;
        const double drift = std::abs(after - before - budget) / std::max(before, kTiny);
        diag_out.max_interior_drift = std::max(diag_out.max_interior_drift, drift);

        auto row = m.row(n + 1);
        for (std::size_t i = 0; i < nx; ++i) {
            if (rhs[i] < 0.0) {
                diag_out.clipped_mass += -rhs[i] * h;
                rhs[i] = 0.0;
            }
            row[i] = rhs[i];
        }
        if (absorbing_left) {
            diag_out.absorbed_mass += 0.5 * dt * (left_outflow(cur, old) + left_outflow(next, row));
        }
        const double mass = trapezoid_mass(row, grid);
        if (std::abs(mass + diag_out.absorbed_mass - 1.0) > options.mass_tolerance) {
            throw MassLeak(static_cast<double>(n + 1) * dt, mass);
        }
        cur = std::move(next);
    }
    if (diagnostics != nullptr) *diagnostics = diag_out;
    return m;
}

double extract_mode(std::span<const double> m, const Grid1D& grid) {
    if (m.size() < 3) throw NoStrictMax("need at least three points");
    const auto it = std::max_element(m.begin(), m.end());
    const std::size_t k = static_cast<std::size_t>(it - m.begin());
    if (k == 0 || k + 1 == m.size()) {
        throw BoundaryMaximum("density maximum on the domain boundary");
    }
    const double left = m[k - 1], mid = m[k], right = m[k + 1];
    const double curvature = left - 2.0 * mid + right;
    if (!(curvature < 0.0)) {
        throw NoStrictMax("density has no strict interior maximum");
    }
    const double offset = 0.5 * (left - right) / curvature;
    return grid.x(k) + offset * grid.dx();
}

double trapezoid_mass(std::span<const double> m, const Grid1D& grid) {
    if (m.empty()) return 0.0;
    double s = 0.5 * (m.front() + m.back());
    for (std::size_t i = 1; i + 1 < m.size(); ++i) s += m[i];
    return s * grid.dx();
}

double log_quadratic_r2(std::span<const double> m, const Grid1D& grid, Domain domain,
                        double floor) {
    const double mmax = *std::max_element(m.begin(), m.end());
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double x = grid.x(i);
        if (m[i] <= floor * mmax || m[i] <= 0.0) continue;
        if (domain == Domain::HalfLine) {
            if (x <= 0.0) continue;
            ys.push_back(std::log(m[i] / x));
        } else {
            ys.push_back(std::log(m[i]));
        }
        xs.push_back(x);
    }
    if (xs.size() < 4) throw DegenerateDensity("too few points for a quadratic fit");

    // Normal equations on centred, scaled abscissae.
    double xc = 0.0;
    for (double x : xs) xc += x;
    xc /= static_cast<double>(xs.size());
    double xs_scale = 0.0;
    for (double x : xs) xs_scale = std::max(xs_scale, std::abs(x - xc));
    double S[5] = {0, 0, 0, 0, 0}, Y[3] = {0, 0, 0}, ymean = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double u = (xs[i] - xc) / xs_scale;
        double p = 1.0;
        for (double& s : S) {
            s += p;
            p *= u;
        }
        Y[0] += ys[i];
        Y[1] += ys[i] * u;
        Y[2] += ys[i] * u * u;
        ymean += ys[i];
    }
    ymean /= static_cast<double>(ys.size());
    double M[3][4] = {{S[0], S[1], S[2], Y[0]}, {S[1], S[2], S[3], Y[1]}, {S[2], S[3], S[4], Y[2]}};
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r) {
            if (std::abs(M[r][c]) > std::abs(M[piv][c])) piv = r;
        }
        std::swap(M[c], M[piv]);
        for (int r = 0; r < 3; ++r) {
            if (r == c) continue;
            const double f = M[r][c] / M[c][c];
            for (int k = c; k < 4; ++k) M[r][k] -= f * M[c][k];
        }
    }
    const double c0 = M[0][3] / M[0][0], c1 = M[1][3] / M[1][1], c2 = M[2][3] / M[2][2];
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double u = (xs[i] - xc) / xs_scale;
        const double fit = c0 + c1 * u + c2 * u * u;
        ss_res += (ys[i] - fit) * (ys[i] - fit);
        ss_tot += (ys[i] - ymean) * (ys[i] - ymean);
    }
    return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
}

PdeSolution solve(const QuadraticCost& cost, const std::function<double(double)>& terminal,
                  const std::function<double(double)>& initial_density, const Grid1D& grid,
                  Domain domain, const PdeOptions& options) {
    grid.validate();
    const auto xs = grid.nodes();
    std::vector<double> k(grid.nx), m0(grid.nx);
    for (std::size_t i = 0; i < grid.nx; ++i) {
        k[i] = terminal(xs[i]);
        m0[i] = initial_density(xs[i]);
    }

    PdeSolution sol;
    sol.grid = grid;
    sol.domain = domain;
    sol.times = ode::uniform_grid(0.0, cost.horizon, grid.nt + 1);
    sol.phi = solve_hjb_backward(cost, k, grid, domain, options);
    sol.m = solve_fpk_forward(sol.phi, m0, cost, grid, domain, options, &sol.diagnostics);
    for (std::size_t n = 0; n <= grid.nt; ++n) {
        const auto row = sol.m.row(n);
        sol.mode_curve.push_back(extract_mode(row, grid));
        sol.mass_curve.push_back(trapezoid_mass(row, grid));
        sol.gaussian_r2.push_back(log_quadratic_r2(row, grid, domain, options.fit_floor));
    }
    return sol;
}

PdeSolution solve_gaussian(const QuadraticCost& cost, const QuadraticTerminal& terminal,
                           const GaussianInitial& initial, const Grid1D& grid,
                           const PdeOptions& options) {
    auto k = [terminal](double x) { return (terminal.a_t * x + terminal.b_t) * x + terminal.c_t; };
    auto m0 = [initial](double x) { return initial.density(x); };
    return solve(cost, k, m0, grid, Domain::FullLine, options);
}

PdeSolution solve_halfline(const QuadraticCost& cost, const QuadraticTerminal& terminal,
                           const HalfLineInitial& initial, const Grid1D& grid,
                           const PdeOptions& options) {
    if (grid.x_min != 0.0) throw InvalidParameter("half-line grid must start at x = 0");
    auto k = [terminal](double x) { return terminal.a_t * x * x + terminal.c_t; };
    auto m0 = [initial](double x) { return initial.density(x); };
    return solve(cost, k, m0, grid, Domain::HalfLine, options);
}

void write_fields_csv(const PdeSolution& sol, const std::string& path) {
    auto out = fmt::output_file(path);
    out.print("t,x,phi,m\n");
    for (std::size_t n = 0; n < sol.times.size(); ++n) {
        for (std::size_t i = 0; i < sol.grid.nx; ++i) {
            out.print("{:.17g},{:.17g},{:.17g},{:.17g}\n", sol.times[n], sol.grid.x(i),
                      sol.phi.at(n, i), sol.m.at(n, i));
        }
    }
}

} // namespace mfg::pde
