#pragma once

// Audit of the published closed-form expressions for A(t) and the density
// mode Q(t) against the ODE oracle. Each formula is evaluated as published
// and in its re-derived form; the verdict records which of the two agrees
// with the integrated solution.

#include "mfg/scenario.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mfg::audit {

enum class FormulaId {
    SubcriticalA,     ///< A(t) for a < 0 (exponential ratio form)
    CriticalA,        ///< A(t) for a = 0
    SupercriticalA,   ///< A(t) for a > 0 (tangent form)
    CriticalMode,     ///< Q(t) for a = 0 (quadratic polynomial)
    SupercriticalMode,///< Q(t) for a > 0 (sinusoid with constant c1 and phase theta)
    SubcriticalMode,  ///< Q(t) for a < 0 (F1, F2, F3 form)
};

inline constexpr FormulaId kAllFormulas[] = {
    FormulaId::SubcriticalA,  FormulaId::CriticalA,         FormulaId::SupercriticalA,
    FormulaId::CriticalMode,  FormulaId::SupercriticalMode, FormulaId::SubcriticalMode,
};

enum class Verdict { Matches, MatchesAfterCorrection, Disagrees };

std::string to_string(FormulaId id);
std::string to_string(Verdict v);

struct FormulaAudit {
    FormulaId formula_id;
    double max_abs_deviation = 0.0;       ///< published form vs oracle
    double corrected_max_deviation = 0.0; ///< re-derived form vs oracle
    std::size_t scenarios = 0;
    Verdict verdict = Verdict::Disagrees;
};

/// One scenario of the audit suite.
struct AuditCase {
    QuadraticCost cost;
    QuadraticTerminal terminal;
    double q0 = 0.0;
};

// Published expressions, evaluated literally.
double published_subcritical_A(const QuadraticCost& cost, double a_t, double t);
double published_critical_A(const QuadraticCost& cost, double a_t, double t);
double published_supercritical_A(const QuadraticCost& cost, double a_t, double t);
double published_critical_mode(const QuadraticCost& cost, const QuadraticTerminal& term,
                               double q0, double t);
double published_supercritical_mode(const QuadraticCost& cost, const QuadraticTerminal& term,
                                    double q0, double t);
double published_subcritical_mode(const QuadraticCost& cost, const QuadraticTerminal& term,
                                  double q0, double t);

/// Regime the formula applies to.
Regime formula_regime(FormulaId id);

/// Seeded suite of globally solvable scenarios; `per_regime` cases for each of
/// a < 0, a = 0 and a > 0.
std::vector<AuditCase> randomized_suite(std::uint64_t seed, std::size_t per_regime = 5);

/// Audits one formula over the cases of its regime.
FormulaAudit audit_formula(FormulaId id, const std::vector<AuditCase>& cases,
                           double tolerance = 1e-6, std::size_t samples = 201);

std::vector<FormulaAudit> audit_all(const std::vector<AuditCase>& cases,
                                    double tolerance = 1e-6, std::size_t samples = 201);

} // namespace mfg::audit
