#pragma once

// Full-line Gaussian reduction. With Phi = A x^2 + B x + C and
// m = exp(K2 x^2 + K1 x + K0) the coupled HJB / Fokker-Planck system becomes
//
//   A' + 2A^2 = -a            K2' + 4A K2 - 2 delta^2 K2^2 = 0
//   B' + 2AB  = -b            K1' + 2A K1 - 2 delta^2 K1 K2 + 2B K2 = 0
//   C' + delta^2 A + B^2/2 = -c
//   K0' + 2A + B K1 - delta^2/2 (K1^2 + 2 K2) = 0
//
// with A, B, C fixed at t = T and K2, K1, K0 fixed at t = 0. The value block
// is independent of the density block, so it is solved first, backward.

#include "mfg/scenario.hpp"

#include <vector>

namespace mfg::gaussian {

/// (A, B, C) on the maximal interval (t*, T] reached by the backward solve.
struct ValueSolution {
    std::vector<double> times; ///< output samples inside the covered interval
    std::vector<double> A, B, C;
    std::shared_ptr<const ode::Trajectory> dense;
    ExistenceReport existence;

    double value_A(double t) const { return dense->component(0, t); }
    double value_B(double t) const { return dense->component(1, t); }
};

struct DensitySolution {
    std::vector<double> times;
    std::vector<double> K2, K1, K0;
    std::shared_ptr<const ode::Trajectory> dense;
};

struct ModeCurve {
    std::vector<double> times;
    std::vector<double> values;
};

struct GaussianSolution {
    QuadraticCost cost;
    QuadraticTerminal terminal;
    GaussianInitial initial;
    CoefficientPath path; ///< density columns empty unless existence.global()
    ExistenceReport existence;
    /// Density mode on the full output grid. Integrated from Q' = 2QA + B when
    /// the value function is global, otherwise the two-point closed form.
    ModeCurve mode;
};

/// Backward solve of the (A, B, C) block. A blow-up inside [0, T) is reported
/// through `existence`, never thrown.
ValueSolution solve_backward(const QuadraticCost& cost, const QuadraticTerminal& terminal,
                             std::size_t samples = kDefaultSamples,
                             const ode::StepControl& control = {});

/// Forward solve of the (K2, K1, K0) block. Throws NonGlobalValue when the
/// value block does not cover [0, T].
DensitySolution solve_forward(const QuadraticCost& cost, const ValueSolution& value,
                              const GaussianInitial& initial,
                              std::size_t samples = kDefaultSamples,
                              const ode::StepControl& control = {});

/// Argmax of exp(K2 x^2 + K1 x + K0). Throws DegenerateDensity for K2 >= 0.
double mode_from_density(double k1, double k2);

/// Total mass exp(K0 - K1^2 / (4 K2)) sqrt(pi / -K2).
double density_mass(double k2, double k1, double k0);

/// Variance -1/(2 K2) of the Gaussian density.
double density_variance(double k2);

/// Integrates Q' = 2QA + B forward from q0.
ModeCurve mode_ode(const QuadraticCost& cost, const ValueSolution& value, double q0,
                   std::size_t samples = kDefaultSamples, const ode::StepControl& control = {});

/// The mode also solves Q'' = -2aQ - b with Q(0) = q0 and
/// Q'(T) - 2 A_T Q(T) = B_T; that boundary problem stays well posed when A
/// blows up. Closed-form solution, throws FormulaPole when the problem is
/// singular (blow-up exactly at t = 0).
double mode_two_point(const QuadraticCost& cost, const QuadraticTerminal& terminal, double q0,
                      double t);

/// Same boundary problem solved by linear shooting with the ODE integrator.
ModeCurve mode_two_point_shooting(const QuadraticCost& cost, const QuadraticTerminal& terminal,
                                  double q0, std::size_t samples = kDefaultSamples,
                                  const ode::StepControl& control = {});

/// Closed-form existence analysis of A' = -2A^2 - a, A(T) = a_t.
ExistenceReport existence_horizon(const QuadraticCost& cost, double a_t);

/// Closed-form A(t). Throws OutsideExistenceInterval for t <= blow-up time.
double closed_form_A(const QuadraticCost& cost, double a_t, double t);

/// The same closed form without the interval check: the analytic continuation
/// through poles (used where only A^2 or 1/A matter, e.g. the half-line mode).
double continued_A(const QuadraticCost& cost, double a_t, double t);

GaussianSolution solve(const QuadraticCost& cost, const QuadraticTerminal& terminal,
                       const GaussianInitial& initial, std::size_t samples = kDefaultSamples,
                       const ode::StepControl& control = {});

} // namespace mfg::gaussian
