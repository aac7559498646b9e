#include "mfg/gaussian.hpp"

#include <cmath>
#include <numbers>

namespace mfg::gaussian {

namespace {

std::vector<double> covered_samples(const ode::Trajectory& traj, double horizon,
                                    std::size_t samples) {
    std::vector<double> out;
    for (double t : ode::uniform_grid(0.0, horizon, samples)) {
        if (traj.covers(t)) out.push_back(t);
    }
    return out;
}

// C and K0 are quadratures of the other components; leaving them out of the
// step control keeps A, B, K2, K1 independent of the cost offset.
ode::StepControl quadrature_last(ode::StepControl control, std::size_t leading) {
    if (control.controlled == 0) control.controlled = leading;
    return control;
}

} // namespace

ValueSolution solve_backward(const QuadraticCost& cost, const QuadraticTerminal& terminal,
                             std::size_t samples, const ode::StepControl& control) {
    cost.validate(true);
    terminal.validate();

    const double a = cost.a, b = cost.b, c = cost.c, d2 = cost.delta * cost.delta;
    ode::Field field = [=](double, std::span<const double> y, std::span<double> dy) {
        const double A = y[0], B = y[1];
        dy[0] = -a - 2.0 * A * A;
        dy[1] = -b - 2.0 * A * B;
        dy[2] = -c - d2 * A - 0.5 * B * B;
    };
    const std::vector<double> yT{terminal.a_t, terminal.b_t, terminal.c_t};

    ValueSolution out;
    out.existence.regime = classify_regime(cost);
    ode::Trajectory traj;
    try {
        traj = ode::integrate(field, yT, cost.horizon, 0.0, quadrature_last(control, 2));
    } catch (ode::BlowUpDetected& e) {
        out.existence.blowup_time = e.time;
        traj = std::move(e.partial);
    }
    out.dense = std::make_shared<const ode::Trajectory>(std::move(traj));
    out.times = covered_samples(*out.dense, cost.horizon, samples);
    out.A = out.dense->sample(0, out.times);
    out.B = out.dense->sample(1, out.times);
    out.C = out.dense->sample(2, out.times);
    return out;
}

DensitySolution solve_forward(const QuadraticCost& cost, const ValueSolution& value,
                              const GaussianInitial& initial, std::size_t samples,
                              const ode::StepControl& control) {
    cost.validate(true);
    if (!value.existence.global()) throw NonGlobalValue(*value.existence.blowup_time);

    const double d2 = cost.delta * cost.delta;
    const auto dense = value.dense;
    ode::Field field = [=](double t, std::span<const double> y, std::span<double> dy) {
        const auto ab = dense->state(t);
        const double A = ab[0], B = ab[1];
        const double K2 = y[0], K1 = y[1];
        dy[0] = -4.0 * A * K2 + 2.0 * d2 * K2 * K2;
        dy[1] = -2.0 * A * K1 + 2.0 * d2 * K1 * K2 - 2.0 * B * K2;
        dy[2] = -2.0 * A - B * K1 + 0.5 * d2 * (K1 * K1 + 2.0 * K2);
    };
    const double lam = initial.lambda(), x0 = initial.x0();
    const std::vector<double> y0{-1.0 / lam, 2.0 * x0 / lam,
                                 -x0 * x0 / lam + std::log(initial.norm())};

    DensitySolution out;
    out.dense = std::make_shared<const ode::Trajectory>(
        ode::integrate(field, y0, 0.0, cost.horizon, quadrature_last(control, 2)));
    out.times = ode::uniform_grid(0.0, cost.horizon, samples);
    out.K2 = out.dense->sample(0, out.times);
    out.K1 = out.dense->sample(1, out.times);
    out.K0 = out.dense->sample(2, out.times);
    return out;
}

double mode_from_density(double k1, double k2) {
    if (!(k2 < 0.0)) throw DegenerateDensity("K2 must be negative for a normalizable density");
    return -k1 / (2.0 * k2);
}

double density_mass(double k2, double k1, double k0) {
    if (!(k2 < 0.0)) throw DegenerateDensity("K2 must be negative for a normalizable density");
    return std::exp(k0 - k1 * k1 / (4.0 * k2)) * std::sqrt(std::numbers::pi / -k2);
}

double density_variance(double k2) {
    if (!(k2 < 0.0)) throw DegenerateDensity("K2 must be negative for a normalizable density");
    return -0.5 / k2;
}

ModeCurve mode_ode(const QuadraticCost& cost, const ValueSolution& value, double q0,
                   std::size_t samples, const ode::StepControl& control) {
    if (!value.existence.global()) throw NonGlobalValue(*value.existence.blowup_time);
    const auto dense = value.dense;
    ode::Field field = [=](double t, std::span<const double> y, std::span<double> dy) {
        const auto ab = dense->state(t);
        dy[0] = 2.0 * y[0] * ab[0] + ab[1];
    };
    const std::vector<double> y0{q0};
    const auto traj = ode::integrate(field, y0, 0.0, cost.horizon, control);
    ModeCurve out;
    out.times = ode::uniform_grid(0.0, cost.horizon, samples);
    out.values = traj.sample(0, out.times);
    return out;
}

double mode_two_point(const QuadraticCost& cost, const QuadraticTerminal& terminal, double q0,
                      double t) {
    const double a = cost.a, b = cost.b, T = cost.horizon;
    const double at = terminal.a_t, bt = terminal.b_t;
    if (a == 0.0) {
        // Q = -b t^2 / 2 + s t + q0.
        const double den = 1.0 - 2.0 * at * T;
        if (den == 0.0) throw FormulaPole("two-point mode problem is singular (2 A_T T = 1)");
        const double s = (bt + b * T + 2.0 * at * (q0 - 0.5 * b * T * T)) / den;
        return -0.5 * b * t * t + s * t + q0;
    }
    const double center = -b / (2.0 * a);
    const double dev0 = q0 - center;
    if (a > 0.0) {
        const double w = std::sqrt(2.0 * a);
        const double cw = std::cos(w * T), sw = std::sin(w * T);
        const double den = w * cw - 2.0 * at * sw;
        if (den == 0.0) throw FormulaPole("two-point mode problem is singular");
        const double s = (bt + dev0 * w * sw + 2.0 * at * (center + dev0 * cw)) / den;
        return center + dev0 * std::cos(w * t) + s * std::sin(w * t);
    }
    // a < 0: Q = center + u e^{-w t} + v e^{w (t - T)}; both exponentials stay <= 1.
    const double w = std::sqrt(-2.0 * a);
    const double E = std::exp(-w * T);
    const double den = (w - 2.0 * at) + E * E * (w + 2.0 * at);
    if (den == 0.0) throw FormulaPole("two-point mode problem is singular");
    const double v = (bt + 2.0 * at * center + dev0 * E * (w + 2.0 * at)) / den;
    const double u = dev0 - v * E;
    return center + u * std::exp(-w * t) + v * std::exp(w * (t - T));
}

ModeCurve mode_two_point_shooting(const QuadraticCost& cost, const QuadraticTerminal& terminal,
                                  double q0, std::size_t samples,
                                  const ode::StepControl& control) {
    const double a = cost.a, b = cost.b;
    ode::Field field = [=](double, std::span<const double> y, std::span<double> dy) {
        dy[0] = y[1];
        dy[1] = -2.0 * a * y[0] - b;
    };
    auto shoot = [&](double slope) {
        const std::vector<double> y0{q0, slope};
        return ode::integrate(field, y0, 0.0, cost.horizon, control);
    };
    auto miss = [&](const ode::Trajectory& tr) {
        const auto yT = tr.state(cost.horizon);
        return yT[1] - 2.0 * terminal.a_t * yT[0] - terminal.b_t;
    };
    // The terminal miss is affine in the initial slope.
    const double f0 = miss(shoot(0.0));
    const double f1 = miss(shoot(1.0));
    if (f1 == f0) throw FormulaPole("two-point mode problem is singular");
    const auto traj = shoot(-f0 / (f1 - f0));
    ModeCurve out;
    out.times = ode::uniform_grid(0.0, cost.horizon, samples);
    out.values = traj.sample(0, out.times);
    return out;
}

ExistenceReport existence_horizon(const QuadraticCost& cost, double a_t) {
    ExistenceReport rep;
    rep.regime = classify_regime(cost);
    const double T = cost.horizon;
    std::optional<double> backward_span; // T - t* when A has a pole at s = T - t* > 0
    if (const auto* sub = std::get_if<Subcritical>(&rep.regime)) {
        const double k = sub->k_minus;
        if (a_t > k) backward_span = std::log((a_t + k) / (a_t - k)) / (4.0 * k);
    } else if (std::holds_alternative<Critical>(rep.regime)) {
        if (a_t > 0.0) backward_span = 1.0 / (2.0 * a_t);
    } else {
        const double k = std::get<Supercritical>(rep.regime).k_plus;
        backward_span = (0.5 * std::numbers::pi - std::atan(a_t / k)) / (2.0 * k);
    }
    if (backward_span && *backward_span <= T) rep.blowup_time = T - *backward_span;
    return rep;
}

double continued_A(const QuadraticCost& cost, double a_t, double t) {
    const double s = cost.horizon - t;
    const Regime r = classify_regime(cost);
    if (const auto* sub = std::get_if<Subcritical>(&r)) {
        const double k = sub->k_minus;
        const double E = std::exp(-4.0 * k * s);
        return k * ((a_t + k) * E + (a_t - k)) / ((a_t + k) * E - (a_t - k));
    }
    if (std::holds_alternative<Critical>(r)) return a_t / (1.0 - 2.0 * s * a_t);
    const double k = std::get<Supercritical>(r).k_plus;
    return k * std::tan(std::atan(a_t / k) + 2.0 * k * s);
}

double closed_form_A(const QuadraticCost& cost, double a_t, double t) {
    const auto rep = existence_horizon(cost, a_t);
    if (t < 0.0 || t > cost.horizon || (rep.blowup_time && t <= *rep.blowup_time)) {
        throw OutsideExistenceInterval("t=" + std::to_string(t) +
                                       " outside the existence interval of A");
    }
    return continued_A(cost, a_t, t);
}

GaussianSolution solve(const QuadraticCost& cost, const QuadraticTerminal& terminal,
                       const GaussianInitial& initial, std::size_t samples,
                       const ode::StepControl& control) {
    auto value = solve_backward(cost, terminal, samples, control);
    GaussianSolution sol{cost, terminal, initial, {}, value.existence, {}};
    sol.path.value_dense = value.dense;
    if (value.existence.global()) {
        auto density = solve_forward(cost, value, initial, samples, control);
        sol.mode = mode_ode(cost, value, initial.x0(), samples, control);
        sol.path.times = value.times;
        sol.path.A = value.A;
        sol.path.B = value.B;
        sol.path.C = value.C;
        sol.path.K2 = std::move(density.K2);
        sol.path.K1 = std::move(density.K1);
        sol.path.K0 = std::move(density.K0);
        sol.path.density_dense = density.dense;
    } else {
        sol.path.times = value.times;
        sol.path.A = value.A;
        sol.path.B = value.B;
        sol.path.C = value.C;
        sol.mode.times = ode::uniform_grid(0.0, cost.horizon, samples);
        for (double t : sol.mode.times) {
            sol.mode.values.push_back(mode_two_point(cost, terminal, initial.x0(), t));
        }
    }
    return sol;
}

} // namespace mfg::gaussian
