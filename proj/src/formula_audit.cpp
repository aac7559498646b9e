#include "mfg/formula_audit.hpp"

#include "mfg/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace mfg::audit {

std::string to_string(FormulaId id) {
    switch (id) {
    case FormulaId::SubcriticalA: return "subcritical_A";
    case FormulaId::CriticalA: return "critical_A";
    case FormulaId::SupercriticalA: return "supercritical_A";
    case FormulaId::CriticalMode: return "critical_mode";
    case FormulaId::SupercriticalMode: return "supercritical_mode";
    case FormulaId::SubcriticalMode: return "subcritical_mode";
    }
    return "unknown";
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Matches: return "matches";
    case Verdict::MatchesAfterCorrection: return "matches_after_correction";
    case Verdict::Disagrees: return "disagrees";
    }
    return "unknown";
}

double published_subcritical_A(const QuadraticCost& cost, double a_t, double t) {
    const double k = std::sqrt(-0.5 * cost.a);
    const double e = std::exp(2.0 * std::sqrt(-2.0 * cost.a) * (cost.horizon - t));
    return -k * ((a_t - k) * e + (a_t + k)) / ((a_t - k) * e - (a_t + k));
}

double published_critical_A(const QuadraticCost& cost, double a_t, double t) {
    return a_t / (1.0 - (cost.horizon - t) * a_t);
}

double published_supercritical_A(const QuadraticCost& cost, double a_t, double t) {
    const double k = std::sqrt(0.5 * cost.a);
    return std::tan(std::atan(k * a_t) + std::sqrt(2.0 * cost.a) * (cost.horizon - t)) / k;
}

double published_critical_mode(const QuadraticCost& cost, const QuadraticTerminal& term,
                               double q0, double t) {
    const double b = cost.b, T = cost.horizon, at = term.a_t;
    const double den = 2.0 * at * T - 1.0;
    if (den == 0.0) throw FormulaPole("critical mode formula: A_T = 1/(2T)");
    return -0.5 * b * t * t + (T * (at * T - 1.0) * b - term.b_t) / den * t +
           (2.0 * at * (T - t) - 1.0) / den * q0;
}

double published_supercritical_mode(const QuadraticCost& cost, const QuadraticTerminal& term,
                                    double q0, double t) {
    const double a = cost.a, b = cost.b;
    const double k = std::sqrt(0.5 * a);
    const double w = std::sqrt(2.0 * a);
    const double theta = std::atan(term.a_t / k) + w * cost.horizon;
    const double ct = std::cos(theta);
    if (ct == 0.0) throw FormulaPole("supercritical mode formula: cos(theta) = 0");
    const double sgn = ct > 0.0 ? 1.0 : -1.0;
    const double c1 = ((b + 2.0 * a * q0) * std::sin(theta) +
                       (b - a * term.b_t) / std::sqrt(term.a_t * term.a_t + k * k) * sgn) /
                      (2.0 * std::sqrt(a) * ct);
    return -b / (2.0 * a) + (q0 + b / (2.0 * a)) * std::cos(w * t) + c1 * std::sin(w * t);
}

double published_subcritical_mode(const QuadraticCost& cost, const QuadraticTerminal& term,
                                  double q0, double t) {
    const double k = std::sqrt(-0.5 * cost.a);
    const double T = cost.horizon, at = term.a_t, b = cost.b;
    const double den = (at - k) * std::exp(4.0 * k * T) - (at + k);
    if (den == 0.0) throw FormulaPole("subcritical mode formula: vanishing denominator");
    const double F1 = (at + k) + (at - k) * std::exp(4.0 * k * (T - t));
    const double F2 = (std::exp(-4.0 * k * t) - 1.0) * std::exp(2.0 * k * T);
    const double em = std::exp(-2.0 * k * t);
    const double F3 = (1.0 - em) * ((1.0 + em) * ((at - k) + (at + k) * std::exp(2.0 * k * T)) -
                                    2.0 * (std::exp(2.0 * k * (T - t)) * (at - k) + (at + k)));
    return std::exp(2.0 * k * t) / den *
           (q0 * F1 + 0.5 * term.b_t * F2 + b / (8.0 * k * k) * F3);
}

Regime formula_regime(FormulaId id) {
    switch (id) {
    case FormulaId::SubcriticalA:
    case FormulaId::SubcriticalMode: return Subcritical{1.0};
    case FormulaId::CriticalA:
    case FormulaId::CriticalMode: return Critical{};
    case FormulaId::SupercriticalA:
    case FormulaId::SupercriticalMode: return Supercritical{1.0};
    }
    return Critical{};
}

std::vector<AuditCase> randomized_suite(std::uint64_t seed, std::size_t per_regime) {
    std::mt19937_64 rng(seed);
    auto uni = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    std::vector<AuditCase> cases;
    for (std::size_t i = 0; i < per_regime; ++i) {
        // a < 0 with A_T below k_minus: global for every T.
        AuditCase c;
        c.cost = {uni(-3.0, -0.2), uni(-2.0, 2.0), uni(-1.0, 1.0), uni(0.1, 0.6), uni(0.5, 3.0)};
        const double k = std::sqrt(-0.5 * c.cost.a);
        c.terminal = {uni(-1.0, 0.9 * k), uni(-1.0, 1.0), uni(-1.0, 1.0)};
        c.q0 = uni(-1.0, 1.0);
        cases.push_back(c);
    }
    for (std::size_t i = 0; i < per_regime; ++i) {
        AuditCase c;
        c.cost = {0.0, uni(-2.0, 2.0), uni(-1.0, 1.0), uni(0.1, 0.6), uni(0.5, 3.0)};
        // 2 A_T T < 0.9 keeps A finite on [0, T].
        c.terminal = {uni(-1.0, 0.45 / c.cost.horizon), uni(-1.0, 1.0), uni(-1.0, 1.0)};
        c.q0 = uni(-1.0, 1.0);
        cases.push_back(c);
    }
    for (std::size_t i = 0; i < per_regime; ++i) {
        AuditCase c;
        const double a = uni(0.2, 3.0);
        const double k = std::sqrt(0.5 * a);
        const double at = uni(-1.0, 1.0);
        const double span = (0.5 * std::numbers::pi - std::atan(at / k)) / (2.0 * k);
        c.cost = {a, uni(-2.0, 2.0), uni(-1.0, 1.0), uni(0.1, 0.6), uni(0.2, 0.8) * span};
        c.terminal = {at, uni(-1.0, 1.0), uni(-1.0, 1.0)};
        c.q0 = uni(-1.0, 1.0);
        cases.push_back(c);
    }
    return cases;
}

FormulaAudit audit_formula(FormulaId id, const std::vector<AuditCase>& cases, double tolerance,
                           std::size_t samples) {
    FormulaAudit out{id};
    const Regime want = formula_regime(id);
    const bool is_mode = id == FormulaId::CriticalMode || id == FormulaId::SupercriticalMode ||
                         id == FormulaId::SubcriticalMode;
    for (const auto& c : cases) {
        if (classify_regime(c.cost).index() != want.index()) continue;
        const auto value = gaussian::solve_backward(c.cost, c.terminal, samples);
        if (!value.existence.global()) continue;
        ++out.scenarios;
        gaussian::ModeCurve mode;
        if (is_mode) mode = gaussian::mode_ode(c.cost, value, c.q0, samples);

        for (std::size_t i = 0; i < value.times.size(); ++i) {
            const double t = value.times[i];
            double oracle = 0.0, published = 0.0, corrected = 0.0;
            if (is_mode) {
                oracle = mode.values[i];
                corrected = gaussian::mode_two_point(c.cost, c.terminal, c.q0, t);
                switch (id) {
                case FormulaId::CriticalMode:
                    published = published_critical_mode(c.cost, c.terminal, c.q0, t);
                    break;
                case FormulaId::SupercriticalMode:
                    published = published_supercritical_mode(c.cost, c.terminal, c.q0, t);
                    break;
                default:
                    published = published_subcritical_mode(c.cost, c.terminal, c.q0, t);
                    break;
                }
            } else {
                oracle = value.A[i];
                corrected = gaussian::closed_form_A(c.cost, c.terminal.a_t, t);
                switch (id) {
                case FormulaId::SubcriticalA:
                    published = published_subcritical_A(c.cost, c.terminal.a_t, t);
                    break;
                case FormulaId::CriticalA:
                    published = published_critical_A(c.cost, c.terminal.a_t, t);
                    break;
                default:
                    published = published_supercritical_A(c.cost, c.terminal.a_t, t);
                    break;
                }
            }
            // A non-finite published value (a spurious pole) counts as infinite deviation.
            const double dev = std::isfinite(published)
                                   ? std::abs(published - oracle)
                                   : std::numeric_limits<double>::infinity();
            out.max_abs_deviation = std::max(out.max_abs_deviation, dev);
            out.corrected_max_deviation =
                std::max(out.corrected_max_deviation, std::abs(corrected - oracle));
        }
    }
    if (out.scenarios == 0) {
        out.verdict = Verdict::Disagrees;
        out.max_abs_deviation = std::numeric_limits<double>::quiet_NaN();
    } else if (out.max_abs_deviation <= tolerance) {
        out.verdict = Verdict::Matches;
    } else if (out.corrected_max_deviation <= tolerance) {
        out.verdict = Verdict::MatchesAfterCorrection;
    } else {
        out.verdict = Verdict::Disagrees;
    }
    return out;
}

std::vector<FormulaAudit> audit_all(const std::vector<AuditCase>& cases, double tolerance,
                                    std::size_t samples) {
    std::vector<FormulaAudit> out;
    for (FormulaId id : kAllFormulas) out.push_back(audit_formula(id, cases, tolerance, samples));
    return out;
}

} // namespace mfg::audit
