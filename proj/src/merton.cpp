#include "mfg/merton.hpp"

#include <algorithm>
#include <cmath>

namespace mfg::merton {

namespace {

void check_utility(double q, bool log_utility) {
    if (!(q < 1.0)) throw InvalidParameter("HARA exponent q must be below 1");
    if (q == 0.0 && !log_utility) {
        throw InvalidParameter("q = 0 needs the log-utility flag");
    }
    if (log_utility && q != 0.0) throw InvalidParameter("log utility requires q = 0");
}

} // namespace

void InvestorParams::validate() const {
    if (!(sigma > 0.0)) throw InvalidParameter("sigma must be positive");
    check_utility(q, log_utility);
}

double optimal_fraction(const InvestorParams& p) {
    p.validate();
    return (p.mu - p.r) / (p.sigma * p.sigma * (1.0 - p.q));
}

double growth_rate(const InvestorParams& p) {
    p.validate();
    const double excess = p.mu - p.r;
    return p.r + risk_coefficient_R(p.sigma, p.q) * excess * excess;
}

double risk_coefficient_R(double sigma, double q) {
    if (!(sigma > 0.0)) throw InvalidParameter("sigma must be positive");
    if (!(q < 1.0)) throw InvalidParameter("HARA exponent q must be below 1");
    return (1.0 - 2.0 * q) / (2.0 * sigma * sigma * (q - 1.0) * (q - 1.0));
}

double risk_coefficient_P(double mu, double r, double q) {
    if (!(q < 1.0)) throw InvalidParameter("HARA exponent q must be below 1");
    return (1.0 - 2.0 * q) * (mu - r) * (mu - r) / (2.0 * (q - 1.0) * (q - 1.0));
}

void DriftOpinionScenario::validate() const {
    if (!(sigma > 0.0)) throw InvalidParameter("sigma must be positive");
    check_utility(q, log_utility);
    if (!(beta >= 0.0) || !(gamma >= 0.0)) throw InvalidParameter("beta, gamma must be >= 0");
    if (!(delta > 0.0)) throw InvalidParameter("delta must be positive");
    if (!(horizon > 0.0)) throw InvalidParameter("horizon must be positive");
    if (!(lambda > 0.0)) throw InvalidParameter("lambda must be positive");
}

void VolOpinionScenario::validate() const {
    check_utility(q, log_utility);
    if (!(beta >= 0.0) || !(gamma >= 0.0)) throw InvalidParameter("beta, gamma must be >= 0");
    if (!(delta > 0.0)) throw InvalidParameter("delta must be positive");
    if (!(horizon > 0.0)) throw InvalidParameter("horizon must be positive");
    if (!(xi0 > 0.0)) throw InvalidParameter("xi0 must be positive");
}

DriftProblem build_drift_problem(const DriftOpinionScenario& s) {
    s.validate();
    const double R = s.R(), r = s.r, mb = s.mu_bar;
    QuadraticCost cost{s.beta * R - s.gamma, 2.0 * (s.gamma * mb - s.beta * R * r),
                       s.beta * r + s.beta * R * r * r - s.gamma * mb * mb, s.delta, s.horizon};
    QuadraticTerminal terminal{R, -2.0 * R * r, r + R * r * r};
    return {cost, terminal, GaussianInitial(s.mu0, s.lambda)};
}

VolProblem build_vol_problem(const VolOpinionScenario& s) {
    s.validate();
    const double P = s.P();
    QuadraticCost cost{s.beta * P - s.gamma, 0.0, s.beta * s.r, s.delta, s.horizon};
    QuadraticTerminal terminal{P, 0.0, s.r};
    return {cost, terminal, HalfLineInitial(1.0 / (s.xi0 * s.xi0))};
}

double drift_opinion_limit(const DriftOpinionScenario& s) {
    s.validate();
    const double bR = s.beta * s.R();
    if (!(bR - s.gamma < 0.0)) throw NotConvergent("opinion limit needs beta R - gamma < 0");
    return (s.r * bR - s.gamma * s.mu_bar) / (bR - s.gamma);
}

std::string to_string(OutcomeKind kind) {
    switch (kind) {
    case OutcomeKind::OpinionForms: return "opinion_forms";
    case OutcomeKind::Oscillates: return "oscillates";
    case OutcomeKind::Drifts: return "drifts";
    }
    return "unknown";
}

OutcomeReport classify_outcome(const QuadraticCost& cost, const QuadraticTerminal& terminal,
                               double q0, Line line) {
    cost.validate(true);
    OutcomeReport rep;
    rep.existence = gaussian::existence_horizon(cost, terminal.a_t);
    const double a = cost.a;
    if (a > 0.0) {
        rep.kind = OutcomeKind::Oscillates;
        rep.angular_frequency = std::sqrt(2.0 * a);
        rep.center = line == Line::Full ? -cost.b / (2.0 * a) : 0.0;
        return rep;
    }
    if (a == 0.0) {
        rep.kind = OutcomeKind::Drifts;
        return rep;
    }

    rep.kind = OutcomeKind::OpinionForms;
    const double k = std::sqrt(-0.5 * a);
    rep.limit = line == Line::Full ? -cost.b / (2.0 * a) : cost.delta / (2.0 * std::sqrt(k));

    QuadraticCost longer = cost;
    // Both boundary layers decay at least like exp(-2k t), so at T'/2 the
    // residue is below exp(-k T') = 1e-6.
    longer.horizon = std::max(cost.horizon, std::log(1e6) / k);
    if (line == Line::Full) {
        rep.audited_limit = gaussian::mode_two_point(longer, terminal, q0, 0.5 * longer.horizon);
    } else {
        const auto value = gaussian::solve_backward(longer, terminal);
        if (value.existence.global() && q0 > 0.0) {
            const auto mode = halfline::mode_bernoulli(longer, value, q0, 3);
            rep.audited_limit = mode.values[1];
        }
    }
    return rep;
}

std::vector<double> peak_times(const gaussian::ModeCurve& curve) {
    std::vector<double> out;
    const auto& t = curve.times;
    const auto& v = curve.values;
    if (v.size() < 3) return out;
    // Round-off wiggles on a plateau are not peaks.
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double floor = 1e-9 * std::max(1.0, *hi - *lo);
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (v[i] - v[i - 1] > floor && v[i] - v[i + 1] > floor) {
            const double curv = v[i - 1] - 2.0 * v[i] + v[i + 1];
            const double offset = curv < 0.0 ? 0.5 * (v[i - 1] - v[i + 1]) / curv : 0.0;
            out.push_back(t[i] + offset * (t[i + 1] - t[i]));
        }
    }
    return out;
}

} // namespace mfg::merton
