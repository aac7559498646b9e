#pragma once

// Half-line reduction for even costs g = a x^2 + c. With Phi = A x^2 + C and
// m = x exp(-K2 x^2 / 2 + K0) on [0, inf):
//
//   A' + 2A^2 = -a          K2' + 4A K2 + delta^2 K2^2 = 0
//   C' + delta^2 A = -c     K0' + 4A + (3/2) delta^2 K2 = 0
//
// K2(0) = kappa, K0(0) = ln kappa. The mode Q = 1/sqrt(K2) solves the
// Bernoulli equation Q' = 2AQ + delta^2 / (2Q) and conserves
// (a + 2A^2) Q^2 + delta^2 A.

#include "mfg/gaussian.hpp"

namespace mfg::halfline {

struct HalfLineSolution {
    QuadraticCost cost;
    QuadraticTerminal terminal;
    HalfLineInitial initial;
    CoefficientPath path; ///< B and K1 columns are empty
    ExistenceReport existence;
    /// Bernoulli mode when the value function is global, otherwise the
    /// first-integral expression along the continued closed-form A. In the
    /// second case the entries turn NaN once Q^2 would go negative (the
    /// density has collapsed onto the wall).
    gaussian::ModeCurve mode;
};

/// Requires b = 0 and b_t = 0.
HalfLineSolution solve_halfline(const QuadraticCost& cost, const QuadraticTerminal& terminal,
                                const HalfLineInitial& initial,
                                std::size_t samples = kDefaultSamples,
                                const ode::StepControl& control = {});

/// Integrates Q' = 2AQ + delta^2/(2Q) forward from q0 > 0.
gaussian::ModeCurve mode_bernoulli(const QuadraticCost& cost,
                                   const gaussian::ValueSolution& value, double q0,
                                   std::size_t samples = kDefaultSamples,
                                   const ode::StepControl& control = {});

/// (a + 2A^2) Q^2 + delta^2 A.
double first_integral(double a, double delta, double A, double Q);

/// Q(t) from the first integral anchored at (A(0), q0).
double mode_first_integral(double a, double delta, double A0, double At, double q0);

/// Same, with A taken from a backward solve.
double mode_first_integral(const QuadraticCost& cost, const gaussian::ValueSolution& value,
                           double q0, double t);

/// Same, with A from the closed form continued through its poles; defined
/// even when the value function blows up inside [0, T].
double mode_first_integral(const QuadraticCost& cost, double a_t, double q0, double t);

/// exp(K0) / K2.
double halfline_mass(double k2, double k0);

/// Long-time equilibrium of the half-line mode for a < 0, with the closed-form
/// candidates it is compared against.
struct EquilibriumAudit {
    double audited = 0.0;          ///< Bernoulli mode at t = T/2
    double stationary = 0.0;       ///< delta / (2 sqrt(k_minus)), stationary point of Q'
    double quarter_root = 0.0;     ///< delta / (4 sqrt(k_minus)), as published for the half-line
    double penalty_form = 0.0;     ///< delta / sqrt(-8a), as published for the volatility problem
    std::string winner;            ///< candidate within tolerance of `audited`, or "none"
};

EquilibriumAudit audit_equilibrium(const QuadraticCost& cost, double a_t, double kappa,
                                   double tolerance = 1e-3);

} // namespace mfg::halfline
