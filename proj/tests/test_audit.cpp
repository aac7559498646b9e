#include "doctest.h"
#include "oracles.hpp"

#include "mfg/formula_audit.hpp"
#include "mfg/gaussian.hpp"

#include <cmath>

using namespace mfg;
using namespace mfg::audit;

TEST_CASE("published subcritical A holds the equilibrium") {
    const QuadraticCost c{-2, 0, 0, 0.2, 3};
    for (double t : {0.0, 1.0, 2.5}) CHECK(published_subcritical_A(c, -1.0, t) == doctest::Approx(-1.0));
}

TEST_CASE("published subcritical A agrees with RK4") {
    const QuadraticCost c{-2, 0, 0, 0.2, 2};
    auto rk = oracle::rk4<1>([&](double, const std::array<double, 1>& y) {
        return std::array<double, 1>{-c.a - 2 * y[0] * y[0]};
    }, {0.0}, 2.0, 0.0, 20000);
    CHECK(std::abs(published_subcritical_A(c, 0.0, 0.0) - rk[0]) <= 1e-10);
}

TEST_CASE("published critical A differs from the ODE") {
    // Exact backward solution of A' = -2A^2 is A_T / (1 + 2 A_T (T - t)); the
    // printed form drops the factor 2.
    const QuadraticCost c{0, 0, 0, 0.2, 1};
    CHECK(gaussian::closed_form_A(c, 0.25, 0.0) == doctest::Approx(0.5));
    CHECK(std::abs(published_critical_A(c, 0.25, 0.0) - 0.5) > 1e-3);
}

TEST_CASE("subcritical mode formula at selected times") {
    const QuadraticCost c{-2, 4, 0, 0.2, 3};
    const QuadraticTerminal t{0, 0, 0};
    auto v = gaussian::solve_backward(c, t);
    auto m = gaussian::mode_ode(c, v, 0.0, 7);
    // times 0.5, 1.5, 2.5 are samples 1, 3, 5 of a 7-point grid
    double printed_dev = 0, corrected_dev = 0;
    for (std::size_t i : {1u, 3u, 5u}) {
        printed_dev = std::max(printed_dev, std::abs(published_subcritical_mode(c, t, 0.0, m.times[i]) - m.values[i]));
        corrected_dev = std::max(corrected_dev, std::abs(gaussian::mode_two_point(c, t, 0.0, m.times[i]) - m.values[i]));
    }
    CHECK(corrected_dev <= 1e-8);
    MESSAGE("printed subcritical mode deviation " << printed_dev);
}

TEST_CASE("symmetric mode formulas vanish") {
    const QuadraticTerminal t{0, 0, 0};
    CHECK(published_critical_mode({0, 0, 0, 0.2, 1}, t, 0.0, 0.3) == doctest::Approx(0.0));
    CHECK(published_supercritical_mode({0.5, 0, 0, 0.2, 1}, t, 0.0, 0.3) == doctest::Approx(0.0));
    CHECK(published_subcritical_mode({-2, 0, 0, 0.2, 1}, t, 0.0, 0.3) == doctest::Approx(0.0));
}

TEST_CASE("audit records a verdict for every formula") {
    auto suite = randomized_suite(7, 5);
    CHECK(suite.size() == 15);
    for (const auto& c : suite) CHECK(gaussian::existence_horizon(c.cost, c.terminal.a_t).global());
    auto table = audit_all(suite);
    REQUIRE(table.size() == std::size(kAllFormulas));
    for (const auto& row : table) {
        CHECK(row.scenarios == 5);
        CHECK(row.corrected_max_deviation <= 1e-6);
        CHECK((row.verdict == Verdict::Matches) == (row.max_abs_deviation <= 1e-6));
    }
    CHECK(table[0].formula_id == FormulaId::SubcriticalA);
    CHECK(table[0].verdict == Verdict::Matches);
    CHECK(table[1].verdict == Verdict::MatchesAfterCorrection);
    CHECK(table[2].verdict == Verdict::MatchesAfterCorrection);
    CHECK(table[3].verdict == Verdict::Matches);
}

TEST_CASE("suite is reproducible from its seed") {
    auto a = randomized_suite(42, 3), b = randomized_suite(42, 3);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].cost.a == b[i].cost.a);
        CHECK(a[i].q0 == b[i].q0);
    }
    CHECK(to_string(FormulaId::SubcriticalMode) == "subcritical_mode");
    CHECK(to_string(Verdict::MatchesAfterCorrection) == "matches_after_correction");
}
