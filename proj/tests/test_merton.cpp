#include "doctest.h"
#include "oracles.hpp"

#include "mfg/merton.hpp"

#include <cmath>
#include <numbers>

using namespace mfg;
using namespace mfg::merton;

namespace {

DriftOpinionScenario figure1(double gamma) {
    DriftOpinionScenario s;
    s.gamma = gamma;
    return s;
}

double plateau(const DriftOpinionScenario& s) {
    auto p = build_drift_problem(s);
    auto sol = gaussian::solve(p.cost, p.terminal, p.initial);
    return sol.mode.values[sol.mode.values.size() / 2];
}

} // namespace

TEST_CASE("optimal fraction") {
    CHECK(optimal_fraction({0.3, 0.5, 0.3, -10}) == 0.0);
    CHECK(optimal_fraction({0.5, 0.5, 0.1, -10}) == doctest::Approx(0.4 / (0.25 * 11)).epsilon(1e-15));
    CHECK(optimal_fraction({0.5, 0.5, 0.1, -10}) == doctest::Approx(0.1454545).epsilon(1e-6));
    CHECK(optimal_fraction({0.5, 1.0, 0.1, -10}) ==
          doctest::Approx(optimal_fraction({0.5, 0.5, 0.1, -10}) / 4).epsilon(1e-15));
}

TEST_CASE("growth rate") {
    CHECK(growth_rate({0.9, 0.4, 0.07, 0.5}) == 0.07);
    CHECK(growth_rate({0.5, 0.5, 0.1, -10}) == doctest::Approx(0.1 + 21 * 0.16 / (0.5 * 121)).epsilon(1e-15));
    CHECK(growth_rate({0.5, 0.5, 0.1, -10}) == doctest::Approx(0.1555372).epsilon(1e-6));
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 20; ++i) {
        const double r = 0.1 * u(gen), mu = r + (u(gen) - 0.5) + 1e-3;
        const double q = 0.5 + 0.499 * u(gen) + 1e-4;
        CHECK(growth_rate({mu, 0.1 + u(gen), r, q}) < r);
    }
}

TEST_CASE("risk coefficients") {
    CHECK(risk_coefficient_R(0.5, -10) == doctest::Approx(21 / 60.5).epsilon(1e-15));
    CHECK(risk_coefficient_R(0.5, -10) == doctest::Approx(0.3471074).epsilon(1e-7));
    CHECK(risk_coefficient_R(0.7, 0.5) == 0.0);
    CHECK(risk_coefficient_P(0.5, 0.1, 0.5) == 0.0);
    double prev = risk_coefficient_R(0.1, -10);
    for (double sigma = 0.2; sigma < 1e4; sigma *= 2) {
        const double R = risk_coefficient_R(sigma, -10);
        CHECK(R < prev);
        CHECK(R > 0.0);
        prev = R;
    }
    CHECK(prev < 1e-7);
}

TEST_CASE("utility validation") {
    CHECK_THROWS_AS(optimal_fraction({0.5, 0.5, 0.1, 0.0}), InvalidParameter);
    CHECK(optimal_fraction({0.5, 0.5, 0.1, 0.0, true}) == doctest::Approx(1.6));
    CHECK_THROWS_AS(optimal_fraction({0.5, 0.5, 0.1, 1.0}), InvalidParameter);
    CHECK_THROWS_AS(optimal_fraction({0.5, 0.0, 0.1, -1.0}), InvalidParameter);
}

TEST_CASE("drift opinion mapping") {
    DriftOpinionScenario s;
    s.beta = 0;
    s.gamma = 1;
    auto p = build_drift_problem(s);
    CHECK(p.cost.a == -1.0);
    CHECK(p.cost.b == 1.0);
    CHECK(p.cost.c == -0.25);
    CHECK(-p.cost.b / (2 * p.cost.a) == 0.5);
    CHECK(drift_opinion_limit(s) == 0.5);

    auto f1 = build_drift_problem(figure1(1));
    CHECK(f1.cost.a == doctest::Approx(0.3471074 - 1).epsilon(1e-7));
    CHECK(f1.terminal.a_t == doctest::Approx(0.3471074).epsilon(1e-7));
    CHECK(f1.initial.x0() == 0.2);
}

TEST_CASE("opinion limits") {
    CHECK(drift_opinion_limit(figure1(1)) == doctest::Approx(0.712659).epsilon(1e-6));
    CHECK(drift_opinion_limit(figure1(2)) == doctest::Approx(0.583999).epsilon(1e-6));
    CHECK(std::abs(plateau(figure1(1)) - 0.712659) <= 1e-3);
    CHECK(std::abs(plateau(figure1(2)) - 0.583999) <= 1e-3);

    DriftOpinionScenario risky;
    risky.q = 0.75; // R < 0
    CHECK(drift_opinion_limit(risky) == doctest::Approx(risky.r).epsilon(1e-15));

    double prev = 1.0;
    for (double gamma : {1.0, 10.0, 100.0, 1000.0}) {
        const double gap = std::abs(drift_opinion_limit(figure1(gamma)) - 0.5);
        CHECK(gap < prev);
        prev = gap;
    }
    CHECK(prev < 1e-3);
    CHECK_THROWS_AS(drift_opinion_limit(figure1(0)), NotConvergent);
}

TEST_CASE("cautious investors without penalty oscillate") {
    auto p = build_drift_problem(figure1(0));
    auto rep = classify_outcome(p.cost, p.terminal, 0.2);
    REQUIRE(rep.kind == OutcomeKind::Oscillates);
    CHECK(rep.angular_frequency == doctest::Approx(std::sqrt(2 * 0.3471074)).epsilon(1e-7));
    CHECK(rep.center == doctest::Approx(-p.cost.b / (2 * p.cost.a)));
    auto sol = gaussian::solve(p.cost, p.terminal, p.initial);
    auto peaks = peak_times(sol.mode);
    REQUIRE(peaks.size() >= 2);
    const double period = 2 * std::numbers::pi / rep.angular_frequency;
    for (std::size_t i = 1; i < peaks.size(); ++i)
        CHECK(std::abs(peaks[i] - peaks[i - 1] - period) <= 0.01 * period);
}

TEST_CASE("outcome classification") {
    auto forms = classify_outcome({-1, 1, 0, 0.2, 10}, {0, 0, 0}, 0.0);
    CHECK(forms.kind == OutcomeKind::OpinionForms);
    CHECK(forms.limit == 0.5);
    REQUIRE(forms.audited_limit);
    CHECK(*forms.audited_limit == doctest::Approx(0.5).epsilon(1e-5));
    CHECK_FALSE(forms.no_global_value());

    // A_T above k_minus: the value blows up but the mode is still reported
    auto blow = classify_outcome({-2, 1, 0, 0.2, 5}, {3, 0, 0}, 0.0);
    CHECK(blow.kind == OutcomeKind::OpinionForms);
    CHECK(blow.no_global_value());
    REQUIRE(blow.existence.blowup_time);
    CHECK(*blow.existence.blowup_time < 5.0);
    REQUIRE(blow.audited_limit);
    CHECK(*blow.audited_limit == doctest::Approx(0.25).epsilon(1e-5));

    CHECK(classify_outcome({0, 1, 0, 0.2, 1}, {0, 0, 0}, 0.0).kind == OutcomeKind::Drifts);
    CHECK(to_string(OutcomeKind::OpinionForms) == "opinion_forms");

    // sign laws on randomized costs
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 20; ++i) {
        const double a = u(gen);
        auto rep = classify_outcome({a, u(gen), 0, 0.2, 1}, {0, 0, 0}, 0.1);
        CHECK((rep.kind == OutcomeKind::Oscillates) == (a > 0));
        CHECK((rep.kind == OutcomeKind::OpinionForms) == (a < 0));
    }
}

TEST_CASE("volatility opinions") {
    VolOpinionScenario s; // q = 0.75 > 1/2, so P < 0
    auto p = build_vol_problem(s);
    CHECK(s.P() < 0.0);
    CHECK(p.cost.a == s.P());
    CHECK(p.initial.kappa() == doctest::Approx(4.0));
    CHECK(p.initial.mode() == doctest::Approx(0.5));
    auto rep = classify_outcome(p.cost, p.terminal, p.initial.mode(), Line::Half);
    CHECK(rep.kind == OutcomeKind::OpinionForms);
    const double k = std::sqrt(-p.cost.a / 2);
    CHECK(rep.limit == doctest::Approx(s.delta / (2 * std::sqrt(k))));
    REQUIRE(rep.audited_limit);
    CHECK(*rep.audited_limit == doctest::Approx(rep.limit).epsilon(1e-3));

    s.q = 0.2; // P > 0
    auto q = build_vol_problem(s);
    CHECK(classify_outcome(q.cost, q.terminal, 0.5, Line::Half).kind == OutcomeKind::Oscillates);
}

TEST_CASE("peak detection") {
    gaussian::ModeCurve c;
    c.times = ode::uniform_grid(0, 20, 2001);
    for (double t : c.times) c.values.push_back(std::cos(1.3 * t - 0.4));
    auto peaks = peak_times(c);
    REQUIRE(peaks.size() == 5);
    for (std::size_t i = 0; i < peaks.size(); ++i)
        CHECK(peaks[i] == doctest::Approx((0.4 + 2 * std::numbers::pi * double(i)) / 1.3).epsilon(1e-6));
    gaussian::ModeCurve flat{c.times, std::vector<double>(c.times.size(), 0.7)};
    CHECK(peak_times(flat).empty());
}
