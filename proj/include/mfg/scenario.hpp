#pragma once

// Shared data model for linear-quadratic MFG instances: running cost
// g(x) = a x^2 + b x + c, diffusion delta, horizon T, terminal value
// K(x) = A_T x^2 + B_T x + C_T and the two families of initial densities.

#include "mfg/errors.hpp"
#include "mfg/ode.hpp"

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mfg {

struct QuadraticCost {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double delta = 1.0;   ///< diffusion amplitude, > 0
    double horizon = 1.0; ///< terminal time T, > 0

    /// delta = 0 is the deterministic limit; only the ODE-level solvers and
    /// the particle simulation accept it.
    void validate(bool allow_zero_delta = false) const;
};

struct QuadraticTerminal {
    double a_t = 0.0;
    double b_t = 0.0;
    double c_t = 0.0;

    void validate() const;
};

/// m0(x) = M exp(-(x - x0)^2 / lambda), M = 1/sqrt(pi lambda).
class GaussianInitial {
public:
    GaussianInitial(double x0, double lambda);

    double x0() const { return x0_; }
    double lambda() const { return lambda_; }
    double norm() const { return norm_; }
    double variance() const { return 0.5 * lambda_; }
    double density(double x) const;

private:
    double x0_;
    double lambda_;
    double norm_;
};

/// m0(x) = kappa x exp(-kappa x^2 / 2) on [0, inf).
class HalfLineInitial {
public:
    explicit HalfLineInitial(double kappa);

    double kappa() const { return kappa_; }
    double norm() const { return kappa_; }
    double mode() const;
    double density(double x) const;

private:
    double kappa_;
};

struct Subcritical {
    double k_minus; ///< sqrt(-a/2)
};
struct Critical {};
struct Supercritical {
    double k_plus; ///< sqrt(a/2)
};
using Regime = std::variant<Subcritical, Critical, Supercritical>;

Regime classify_regime(const QuadraticCost& cost);
std::string regime_name(const Regime& r);

struct ExistenceReport {
    Regime regime;
    std::optional<double> blowup_time; ///< in [0, T) when present

    bool global() const { return !blowup_time.has_value(); }
};

/// Column names of a CoefficientPath.
enum class Coef { A = 0, B, C, K2, K1, K0 };

/// Time-sampled value coefficients (A, B, C) and log-density coefficients
/// (K2, K1, K0). Columns that a variant does not use (B and K1 on the
/// half-line) are left empty. The dense trajectories the samples were taken
/// from are kept for evaluation between grid points.
struct CoefficientPath {
    std::vector<double> times;
    std::vector<double> A, B, C, K2, K1, K0;

    std::shared_ptr<const ode::Trajectory> value_dense;   ///< (A, B, C) or (A, C)
    std::shared_ptr<const ode::Trajectory> density_dense; ///< (K2, K1, K0) or (K2, K0)

    const std::vector<double>& column(Coef c) const;
    bool has(Coef c) const { return !column(c).empty(); }
};

/// Default number of output samples on [0, T].
inline constexpr std::size_t kDefaultSamples = 1001;

} // namespace mfg
