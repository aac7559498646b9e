#include "doctest.h"
#include "oracles.hpp"

#include "mfg/pde.hpp"

#include <cmath>
#include <numbers>

using namespace mfg;

namespace {

const QuadraticCost kAudit{-2, 0, 0, 0.2, 2};
const QuadraticTerminal kZero{0, 0, 0};
const GaussianInitial kInit(0.2, 0.5);

// Sup |Phi_pde - (A x^2 + B x + C)| over |x - Q(t)| <= 3 sd(t), all levels.
double phi_error(std::size_t n) {
    const auto ric = gaussian::solve(kAudit, kZero, kInit);
    const auto grid = pde::Grid1D::for_gaussian(ric, n, n);
    const auto sol = pde::solve_gaussian(kAudit, kZero, kInit, grid);
    const auto& val = *ric.path.value_dense;
    const auto& den = *ric.path.density_dense;
    double worst = 0.0;
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
        const double t = sol.times[k];
        const auto abc = val.state(t);
        const auto kk = den.state(t);
        const double q = -kk[1] / (2 * kk[0]), sd = std::sqrt(-1 / (2 * kk[0]));
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const double x = grid.x(i);
            if (std::abs(x - q) > 3 * sd) continue;
            worst = std::max(worst, std::abs(sol.phi.at(k, i) - ((abc[0] * x + abc[1]) * x + abc[2])));
        }
    }
    return worst;
}

std::pair<double, double> row_moments(std::span<const double> m, const pde::Grid1D& g) {
    std::vector<double> xm(m.size()), x2m(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        xm[i] = g.x(i) * m[i];
        x2m[i] = g.x(i) * g.x(i) * m[i];
    }
    const double mass = pde::trapezoid_mass(m, g);
    const double mean = pde::trapezoid_mass(xm, g) / mass;
    return {mean, pde::trapezoid_mass(x2m, g) / mass - mean * mean};
}

} // namespace

TEST_CASE("null problem has a null value function") {
    const pde::Grid1D g{-3, 3, 301, 100};
    auto sol = pde::solve({0, 0, 0, 0.3, 1}, [](double) { return 0.0; },
                          [](double x) { return std::exp(-x * x) / std::sqrt(std::numbers::pi); }, g);
    for (std::size_t k = 0; k <= g.nt; ++k)
        for (std::size_t i = 0; i < g.nx; ++i) CHECK(std::abs(sol.phi.at(k, i)) <= 1e-13);
}

TEST_CASE("value function matches the Riccati quadratic") {
    const double e1024 = phi_error(1024), e2048 = phi_error(2048);
    MESSAGE("phi errors " << e1024 << " " << e2048);
    CHECK(e2048 <= 1e-3);
    CHECK(e1024 / e2048 >= 3.0);
}

TEST_CASE("pure diffusion widens the variance by delta^2 t") {
    const double delta = 0.3, T = 1.0;
    const pde::Grid1D g{-4, 4, 801, 400};
    const GaussianInitial init(0.1, 0.2);
    std::vector<double> m0;
    for (double x : g.nodes()) m0.push_back(init.density(x));
    pde::Field2D phi(g.nt + 1, g.nx);
    auto m = pde::solve_fpk_forward(phi, m0, {0, 0, 0, delta, T}, g);
    for (std::size_t k : {std::size_t{0}, g.nt / 2, g.nt}) {
        const double t = T * static_cast<double>(k) / static_cast<double>(g.nt);
        auto [mean, var] = row_moments(m.row(k), g);
        CHECK(mean == doctest::Approx(0.1).epsilon(1e-6));
        CHECK(var == doctest::Approx(0.1 + delta * delta * t).epsilon(1e-4));
    }
}

TEST_CASE("audit scenario: mode, shape and mass") {
    const auto ric = gaussian::solve(kAudit, kZero, kInit);
    const auto grid = pde::Grid1D::for_gaussian(ric, 512, 512);
    const auto sol = pde::solve_gaussian(kAudit, kZero, kInit, grid);
    const auto& den = *ric.path.density_dense;
    double mode_dev = 0.0;
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
        const auto kk = den.state(sol.times[k]);
        mode_dev = std::max(mode_dev, std::abs(sol.mode_curve[k] + kk[1] / (2 * kk[0])));
        CHECK(sol.gaussian_r2[k] >= 0.999);
        CHECK(std::abs(sol.mass_curve[k] - 1.0) <= 1e-4);
    }
    CHECK(mode_dev <= grid.dx());
    for (std::size_t k = 0; k < sol.m.levels(); ++k)
        for (double v : sol.m.row(k)) CHECK(v >= 0.0);
    // domain covers +/- 8 sd of the initial and terminal densities
    const double sd0 = std::sqrt(kInit.variance());
    CHECK(grid.x_min <= 0.2 - 8 * sd0);
    CHECK(grid.x_max >= 0.2 + 8 * sd0);
}

TEST_CASE("half-line oracle follows the ansatz and its absorption") {
    const QuadraticCost c{-2, 0, 0, 0.5, 4};
    const auto ric = halfline::solve_halfline(c, kZero, HalfLineInitial(4));
    const auto grid = pde::Grid1D::for_halfline(ric, 512, 512);
    CHECK(grid.x_min == 0.0);
    const auto sol = pde::solve_halfline(c, kZero, HalfLineInitial(4), grid);
    const auto& den = *ric.path.density_dense;
    double mode_dev = 0.0;
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
        const auto kk = den.state(sol.times[k]);
        mode_dev = std::max(mode_dev, std::abs(sol.mode_curve[k] - 1 / std::sqrt(kk[0])));
        const double mass = halfline::halfline_mass(kk[0], kk[1]);
        CHECK(sol.mass_curve[k] == doctest::Approx(mass).epsilon(2e-3));
        CHECK(sol.gaussian_r2[k] >= 0.999);
    }
    CHECK(mode_dev <= 2 * grid.dx());
    CHECK(sol.mass_curve.back() + sol.diagnostics.absorbed_mass == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("mode extraction") {
    // 161 points on [-2, 2]: about 12 points per standard deviation, coarser
    // than any oracle grid
    const pde::Grid1D g{-2, 2, 161, 1};
    std::vector<double> at_node, between, flat(g.nx, 1.0), edge;
    for (double x : g.nodes()) {
        at_node.push_back(std::exp(-(x - 0.3) * (x - 0.3) / 0.2));
        between.push_back(std::exp(-(x - 0.317) * (x - 0.317) / 0.2));
        edge.push_back(std::exp(x));
    }
    CHECK(pde::extract_mode(at_node, g) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(std::abs(pde::extract_mode(between, g) - 0.317) <= 1e-3 * g.dx());
    CHECK_THROWS_AS(pde::extract_mode(edge, g), BoundaryMaximum);
    bool rejected = false;
    try {
        pde::extract_mode(flat, g);
    } catch (const BoundaryMaximum&) {
        rejected = true;
    } catch (const NoStrictMax&) {
        rejected = true;
    }
    CHECK(rejected);
}

TEST_CASE("mass diagnostics") {
    const pde::Grid1D g{0, 1, 11, 1};
    std::vector<double> ones(g.nx, 1.0);
    CHECK(pde::trapezoid_mass(ones, g) == doctest::Approx(1.0));
    std::vector<double> quad;
    for (double x : g.nodes()) quad.push_back(std::exp(-3 * x * x + x));
    CHECK(pde::log_quadratic_r2(quad, g, pde::Domain::FullLine, 1e-4) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("truncated domain leaks mass") {
    const pde::Grid1D g{-0.3, 0.7, 101, 200};
    CHECK_THROWS_AS(pde::solve_gaussian({0, 0, 0, 0.5, 2}, kZero, kInit, g), MassLeak);
}

TEST_CASE("input validation") {
    const pde::Grid1D g{-3, 3, 201, 100};
    CHECK_THROWS_AS(pde::solve_gaussian({-2, 0, 0, 1e-4, 1}, kZero, kInit, g), DegenerateDiffusion);
    CHECK_THROWS_AS((pde::Grid1D{1, -1, 100, 100}.validate()), InvalidParameter);
    CHECK_THROWS_AS(pde::solve_halfline({-2, 0, 0, 0.5, 1}, kZero, HalfLineInitial(4), g), InvalidParameter);
}
