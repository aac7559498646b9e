#include "mfg/halfline.hpp"

#include <cmath>
#include <limits>

namespace mfg::halfline {

HalfLineSolution solve_halfline(const QuadraticCost& cost, const QuadraticTerminal& terminal,
                                const HalfLineInitial& initial, std::size_t samples,
                                const ode::StepControl& control) {
    if (cost.b != 0.0 || terminal.b_t != 0.0) {
        throw InvalidParameter("half-line problem needs an even cost: b = 0 and b_t = 0");
    }
    const auto value = gaussian::solve_backward(cost, terminal, samples, control);

    HalfLineSolution sol{cost, terminal, initial, {}, value.existence, {}};
    sol.path.times = value.times;
    sol.path.A = value.A;
    sol.path.C = value.C;
    sol.path.value_dense = value.dense;

    const double q0 = initial.mode();
    if (!value.existence.global()) {
        sol.mode.times = ode::uniform_grid(0.0, cost.horizon, samples);
        // Past a pole of A, Q^2 = 1/K2 follows u' = 4Au + delta^2 through zero:
        // the density collapses onto the wall and no mode is left.
        bool collapsed = false;
        for (double t : sol.mode.times) {
            double q = std::numeric_limits<double>::quiet_NaN();
            if (!collapsed) {
                try {
                    q = mode_first_integral(cost, terminal.a_t, q0, t);
                } catch (const SolverError&) {
                    collapsed = true;
                }
            }
            sol.mode.values.push_back(q);
        }
        return sol;
    }

    const double d2 = cost.delta * cost.delta;
    const auto dense = value.dense;
    ode::Field field = [=](double t, std::span<const double> y, std::span<double> dy) {
        const double A = dense->component(0, t);
        dy[0] = -4.0 * A * y[0] - d2 * y[0] * y[0];
        dy[1] = -4.0 * A - 1.5 * d2 * y[0];
    };
    const std::vector<double> y0{initial.kappa(), std::log(initial.norm())};
    auto traj = std::make_shared<const ode::Trajectory>(
        ode::integrate(field, y0, 0.0, cost.horizon, control));
    sol.path.K2 = traj->sample(0, sol.path.times);
    sol.path.K0 = traj->sample(1, sol.path.times);
    sol.path.density_dense = traj;
    sol.mode = mode_bernoulli(cost, value, q0, samples, control);
    return sol;
}

gaussian::ModeCurve mode_bernoulli(const QuadraticCost& cost,
                                   const gaussian::ValueSolution& value, double q0,
                                   std::size_t samples, const ode::StepControl& control) {
    if (!value.existence.global()) throw NonGlobalValue(*value.existence.blowup_time);
    if (!(q0 > 0.0)) throw InvalidParameter("half-line mode must start positive");
    const double d2 = cost.delta * cost.delta;
    const auto dense = value.dense;
    ode::Field field = [=](double t, std::span<const double> y, std::span<double> dy) {
        dy[0] = 2.0 * dense->component(0, t) * y[0] + 0.5 * d2 / y[0];
    };
    const std::vector<double> y0{q0};
    const auto traj = ode::integrate(field, y0, 0.0, cost.horizon, control);
    gaussian::ModeCurve out;
    out.times = ode::uniform_grid(0.0, cost.horizon, samples);
    out.values = traj.sample(0, out.times);
    return out;
}

double first_integral(double a, double delta, double A, double Q) {
    return (a + 2.0 * A * A) * Q * Q + delta * delta * A;
}

double mode_first_integral(double a, double delta, double A0, double At, double q0) {
    // Past a pole of A the mode is pinned at zero.
    if (std::isinf(At)) return 0.0;
    const double den = a + 2.0 * At * At;
    if (den == 0.0 || std::abs(den) <= 1e-14 * std::max(std::abs(a), 2.0 * At * At)) {
        throw DegenerateDenominator("a + 2A(t)^2 vanishes; first integral cannot fix Q");
    }
    const double num = (a + 2.0 * A0 * A0) * q0 * q0 - delta * delta * (At - A0);
    const double q2 = num / den;
    if (q2 < 0.0) throw DegenerateDensity("first integral gives a negative Q^2");
    return std::sqrt(q2);
}

double mode_first_integral(const QuadraticCost& cost, const gaussian::ValueSolution& value,
                           double q0, double t) {
    if (!value.existence.global()) throw NonGlobalValue(*value.existence.blowup_time);
    return mode_first_integral(cost.a, cost.delta, value.value_A(0.0), value.value_A(t), q0);
}

double mode_first_integral(const QuadraticCost& cost, double a_t, double q0, double t) {
    if (t == 0.0) return q0;
    return mode_first_integral(cost.a, cost.delta, gaussian::continued_A(cost, a_t, 0.0),
                               gaussian::continued_A(cost, a_t, t), q0);
}

double halfline_mass(double k2, double k0) {
    if (!(k2 > 0.0)) throw DegenerateDensity("half-line K2 must be positive");
    return std::exp(k0) / k2;
}

EquilibriumAudit audit_equilibrium(const QuadraticCost& cost, double a_t, double kappa,
                                   double tolerance) {
    if (!(cost.a < 0.0)) throw NotConvergent("half-line mode equilibrium needs a < 0");
    const QuadraticTerminal terminal{a_t, 0.0, 0.0};
    const auto value = gaussian::solve_backward(cost, terminal);
    if (!value.existence.global()) throw NonGlobalValue(*value.existence.blowup_time);
    const auto mode = mode_bernoulli(cost, value, 1.0 / std::sqrt(kappa));

    const double k = std::sqrt(-0.5 * cost.a);
    EquilibriumAudit out;
    out.audited = mode.values[mode.values.size() / 2];
    out.stationary = cost.delta / (2.0 * std::sqrt(k));
    out.quarter_root = cost.delta / (4.0 * std::sqrt(k));
    out.penalty_form = cost.delta / std::sqrt(-8.0 * cost.a);

    std::vector<std::string> hits;
    if (std::abs(out.audited - out.stationary) <= tolerance) hits.push_back("stationary");
    if (std::abs(out.audited - out.quarter_root) <= tolerance) hits.push_back("quarter_root");
    if (std::abs(out.audited - out.penalty_form) <= tolerance) hits.push_back("penalty_form");
    if (hits.empty()) {
        out.winner = "none";
    } else {
        out.winner = hits.front();
        for (std::size_t i = 1; i < hits.size(); ++i) out.winner += "+" + hits[i];
    }
    return out;
}

} // namespace mfg::halfline
