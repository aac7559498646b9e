#pragma once

// Merton investors whose beliefs about the asset drift or volatility form a
// mean-field population. Each opinion problem maps onto a quadratic MFG.

#include "mfg/gaussian.hpp"
#include "mfg/halfline.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mfg::merton {

/// HARA utility v^q / q; q = 0 is accepted only with `log_utility` set and
/// stands for ln v.
struct InvestorParams {
    double mu = 0.0;
    double sigma = 1.0;
    double r = 0.0;
    double q = 0.5;
    bool log_utility = false;

    void validate() const;
};

/// (mu - r) / (sigma^2 (1 - q)).
double optimal_fraction(const InvestorParams& p);

/// Long-run capital growth r + (1 - 2q)(mu - r)^2 / (2 sigma^2 (q - 1)^2).
double growth_rate(const InvestorParams& p);

/// (1 - 2q) / (2 sigma^2 (q - 1)^2).
double risk_coefficient_R(double sigma, double q);

/// (1 - 2q)(mu - r)^2 / (2 (q - 1)^2).
double risk_coefficient_P(double mu, double r, double q);

/// Investors disagree on the drift; the true drift is mu_bar.
struct DriftOpinionScenario {
    double mu_bar = 0.5;
    double sigma = 0.5;
    double r = 0.1;
    double q = -10.0;
    double beta = 1.0;   ///< growth-reward weight
    double gamma = 0.0;  ///< penalty weight on (mu - mu_bar)^2
    double delta = 0.2;  ///< opinion diffusivity
    double horizon = 40.0;
    double mu0 = 0.2;    ///< initial opinion mode
    double lambda = 0.1; ///< initial opinion width
    bool log_utility = false;

    void validate() const;
    double R() const { return risk_coefficient_R(sigma, q); }
};

/// Investors disagree on the volatility; the state is xi = 1 / sigma.
struct VolOpinionScenario {
    double mu = 0.5;
    double r = 0.1;
    double q = 0.75;
    double beta = 1.0;
    double gamma = 0.0;
    double delta = 0.2;
    double horizon = 30.0;
    double xi0 = 0.5; ///< initial mode of xi
    bool log_utility = false;

    void validate() const;
    double P() const { return risk_coefficient_P(mu, r, q); }
};

struct DriftProblem {
    QuadraticCost cost;
    QuadraticTerminal terminal;
    GaussianInitial initial;
};

struct VolProblem {
    QuadraticCost cost; ///< b = 0
    QuadraticTerminal terminal; ///< b_t = 0
    HalfLineInitial initial;
};

DriftProblem build_drift_problem(const DriftOpinionScenario& s);
VolProblem build_vol_problem(const VolOpinionScenario& s);

/// (r beta R - gamma mu_bar) / (beta R - gamma); NotConvergent unless beta R < gamma.
double drift_opinion_limit(const DriftOpinionScenario& s);

enum class OutcomeKind {
    OpinionForms, ///< a < 0: the mode settles at `limit`
    Oscillates,   ///< a > 0: the mode oscillates about `center`
    Drifts,       ///< a = 0: the mode moves polynomially, no limit
};

std::string to_string(OutcomeKind kind);

enum class Line { Full, Half };

struct OutcomeReport {
    OutcomeKind kind = OutcomeKind::Drifts;
    double limit = 0.0;             ///< OpinionForms only
    double angular_frequency = 0.0; ///< Oscillates only: sqrt(2a)
    double center = 0.0;            ///< Oscillates only
    /// The value function may blow up even though the mode stays computable.
    ExistenceReport existence;
    /// Mode at T'/2 from an independent long-horizon solve, T' chosen with
    /// exp(-k_minus T') <= 1e-6 (OpinionForms only).
    std::optional<double> audited_limit;

    bool no_global_value() const { return !existence.global(); }
};

/// Qualitative outcome of the mode dynamics. On the half-line the limit is
/// the stationary point delta / (2 sqrt(k_minus)) of the Bernoulli equation.
/// `q0` seeds the audit solve.
OutcomeReport classify_outcome(const QuadraticCost& cost, const QuadraticTerminal& terminal,
                               double q0, Line line = Line::Full);

/// Times of the strict local maxima of a sampled curve, each refined by a
/// parabola through its neighbours.
std::vector<double> peak_times(const gaussian::ModeCurve& curve);

} // namespace mfg::merton
