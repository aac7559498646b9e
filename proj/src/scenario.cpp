#include "mfg/scenario.hpp"

#include <cmath>
#include <numbers>

namespace mfg {

void QuadraticCost::validate(bool allow_zero_delta) const {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
        throw InvalidParameter("cost coefficients must be finite");
    }
    const bool delta_ok = allow_zero_delta ? delta >= 0.0 : delta > 0.0;
    if (!delta_ok || !std::isfinite(delta)) throw InvalidParameter("delta must be > 0");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw InvalidParameter("horizon must be > 0");
    }
}

void QuadraticTerminal::validate() const {
    if (!std::isfinite(a_t) || !std::isfinite(b_t) || !std::isfinite(c_t)) {
        throw InvalidParameter("terminal coefficients must be finite");
    }
}

GaussianInitial::GaussianInitial(double x0, double lambda) : x0_(x0), lambda_(lambda) {
    if (!std::isfinite(x0)) throw InvalidParameter("x0 must be finite");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidParameter("lambda must be > 0");
    norm_ = 1.0 / std::sqrt(std::numbers::pi * lambda);
}

double GaussianInitial::density(double x) const {
    const double d = x - x0_;
    return norm_ * std::exp(-d * d / lambda_);
}

HalfLineInitial::HalfLineInitial(double kappa) : kappa_(kappa) {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw InvalidParameter("kappa must be > 0");
}

double HalfLineInitial::mode() const { return 1.0 / std::sqrt(kappa_); }

double HalfLineInitial::density(double x) const {
    if (x <= 0.0) return 0.0;
    return kappa_ * x * std::exp(-0.5 * kappa_ * x * x);
}

Regime classify_regime(const QuadraticCost& cost) {
    if (cost.a < 0.0) return Subcritical{std::sqrt(-0.5 * cost.a)};
    if (cost.a > 0.0) return Supercritical{std::sqrt(0.5 * cost.a)};
    return Critical{};
}

std::string regime_name(const Regime& r) {
    if (std::holds_alternative<Subcritical>(r)) return "subcritical";
    if (std::holds_alternative<Supercritical>(r)) return "supercritical";
    return "critical";
}

const std::vector<double>& CoefficientPath::column(Coef c) const {
    switch (c) {
    case Coef::A: return A;
    case Coef::B: return B;
    case Coef::C: return C;
    case Coef::K2: return K2;
    case Coef::K1: return K1;
    case Coef::K0: return K0;
    }
    return A;
}

} // namespace mfg
