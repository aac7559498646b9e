#include "doctest.h"
#include "oracles.hpp"

#include "mfg/halfline.hpp"
#include "mfg/mc.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace mfg;

namespace {

const QuadraticCost kAudit{-2, 0, 0, 0.2, 2};
const QuadraticTerminal kZero{0, 0, 0};
const GaussianInitial kInit(0.2, 0.5);

// Asymptotic standard deviation of the KDE argmax for Gaussian data with the
// normal-reference bandwidth, in units of the data standard deviation:
// sqrt(R(K') f(0) / (n h^3 f''(0)^2)) with R(K') = 1 / (4 sqrt(pi)); the
// leading bias vanishes for symmetric data.
double kde_mode_sd(double n) {
    const double h = 1.06 * std::pow(n, -0.2);
    const double f0 = 1 / std::sqrt(2 * std::numbers::pi);
    const double rk1 = 1 / (4 * std::sqrt(std::numbers::pi));
    return std::sqrt(rk1 * f0 / (n * std::pow(h, 3) * f0 * f0));
}

} // namespace

TEST_CASE("counter generator") {
    const std::size_t n = 200000;
    double s = 0, s2 = 0, umin = 1, umax = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = mc::counter_normal(99, i % 1000, i / 1000);
        s += z;
        s2 += z * z;
        const double u = mc::counter_uniform(99, i, 0, 2);
        umin = std::min(umin, u);
        umax = std::max(umax, u);
    }
    CHECK(std::abs(s / n) <= 3 / std::sqrt(double(n)));
    CHECK(std::abs(s2 / n - 1) <= 3 * std::sqrt(2.0 / n));
    CHECK(umin > 0.0);
    CHECK(umax < 1.0);
    CHECK(mc::counter_bits(1, 2, 3, 0) == mc::counter_bits(1, 2, 3, 0));
    CHECK(mc::counter_bits(1, 2, 3, 0) != mc::counter_bits(1, 2, 3, 1));
    CHECK(mc::counter_bits(1, 2, 3, 0) != mc::counter_bits(2, 2, 3, 0));
}

TEST_CASE("frozen dynamics keep every path") {
    const QuadraticCost c{0, 0, 0, 0.0, 1};
    auto v = gaussian::solve_backward(c, kZero);
    auto e = mc::simulate_ensemble(v, c, kInit, {10000, 0.0, 5, 11, 2});
    for (std::size_t k = 1; k < e.positions.size(); ++k) CHECK(e.positions[k] == e.positions[0]);
    for (std::size_t k = 1; k < e.stats.times.size(); ++k) {
        CHECK(e.stats.mean[k] == e.stats.mean[0]);
        CHECK(e.stats.variance[k] == e.stats.variance[0]);
    }
    const double n = 10000;
    CHECK(std::abs(e.stats.mean[0] - 0.2) <= 3 * std::sqrt(0.25 / n));
    CHECK(std::abs(e.stats.variance[0] / 0.25 - 1) <= 3 * std::sqrt(2 / n));
    CHECK(e.stats.stderr_mean[0] == doctest::Approx(std::sqrt(e.stats.variance[0] / n)));
}

TEST_CASE("results do not depend on the worker count") {
    auto v = gaussian::solve_backward(kAudit, kZero);
    auto one = mc::simulate_ensemble(v, kAudit, kInit, {20000, 0.0, 3, 21, 1});
    auto many = mc::simulate_ensemble(v, kAudit, kInit, {20000, 0.0, 3, 21, 5});
    CHECK(one.positions == many.positions);
    CHECK(one.stats.mean == many.stats.mean);
    CHECK(one.stats.variance == many.stats.variance);
    CHECK(one.stats.mode_kde == many.stats.mode_kde);
    auto other = mc::simulate_ensemble(v, kAudit, kInit, {20000, 0.0, 4, 21, 1});
    CHECK(other.positions != one.positions);
}

TEST_CASE("audit scenario ensemble follows the Riccati density") {
    auto sol = gaussian::solve(kAudit, kZero, kInit);
    auto v = gaussian::solve_backward(kAudit, kZero);
    auto e = mc::simulate_ensemble(v, kAudit, kInit, {100000, 0.002, 1, 101, 0});
    CHECK(e.stats.dt == doctest::Approx(0.002));
    const auto& den = *sol.path.density_dense;
    for (std::size_t k = 0; k < e.stats.times.size(); ++k) {
        const auto kk = den.state(e.stats.times[k]);
        const double q = -kk[1] / (2 * kk[0]), var = -1 / (2 * kk[0]);
        CHECK(std::abs(e.stats.mean[k] - q) <= 3 * e.stats.stderr_mean[k]);
        CHECK(std::abs(e.stats.variance[k] / var - 1) <= 0.05);
        CHECK(std::abs(e.stats.skewness[k]) <= 3 * std::sqrt(6 / 1e5));
        CHECK(e.stats.alive[k] == 1.0);
    }
    // KDE mode at T, within three estimator standard deviations
    const auto kk = den.state(kAudit.horizon);
    const double sd = std::sqrt(-1 / (2 * kk[0]));
    CHECK(std::abs(e.stats.mode_kde.back() + kk[1] / (2 * kk[0])) <= 3 * kde_mode_sd(1e5) * sd);
}

TEST_CASE("kernel density mode") {
    std::vector<double> z;
    for (std::uint64_t i = 0; i < 100000; ++i) z.push_back(mc::counter_normal(2024, i, 0));
    const double bound = 3 * kde_mode_sd(1e5);
    CHECK(bound == doctest::Approx(0.165).epsilon(0.02));
    CHECK(std::abs(mc::kde_mode(z)) <= bound);

    double m = 0, s = 0;
    for (double x : z) m += x;
    m /= double(z.size());
    for (double x : z) s += (x - m) * (x - m);
    CHECK(mc::kde_bandwidth(z) == doctest::Approx(1.06 * std::sqrt(s / double(z.size())) * std::pow(1e5, -0.2)).epsilon(1e-3));

    std::vector<double> same(5000, 1.25);
    CHECK(mc::kde_mode(same) == 1.25);
    std::vector<double> few(999, 0.0);
    CHECK_THROWS_AS(mc::kde_mode(few), TooFewSamples);
}

TEST_CASE("half-line survivors follow the ansatz") {
    const QuadraticCost c{-2, 0, 0, 0.5, 1};
    auto sol = halfline::solve_halfline(c, kZero, HalfLineInitial(4));
    auto v = gaussian::solve_backward(c, kZero);
    const std::size_t n = 100000;
    auto e = mc::simulate_halfline(v, c, HalfLineInitial(4), {n, 0.0, 9, 11, 0});
    const auto& den = *sol.path.density_dense;
    for (std::size_t k = 0; k < e.stats.times.size(); ++k) {
        const auto kk = den.state(e.stats.times[k]);
        const double p = halfline::halfline_mass(kk[0], kk[1]);
        CHECK(std::abs(e.stats.alive[k] - p) <= 4 * std::sqrt(p * (1 - p) / n) + 1e-12);
        const double mean = std::sqrt(std::numbers::pi / (2 * kk[0]));
        CHECK(std::abs(e.stats.mean[k] - mean) <= 4 * e.stats.stderr_mean[k]);
        CHECK(std::all_of(e.positions[k].begin(), e.positions[k].end(),
                          [](double x) { return std::isnan(x) || x > 0.0; }));
    }
}

TEST_CASE("invalid ensembles") {
    auto v = gaussian::solve_backward(kAudit, kZero);
    CHECK_THROWS_AS(mc::simulate_ensemble(v, kAudit, kInit, {9999}), InvalidParameter);
    CHECK_THROWS_AS(mc::simulate_ensemble(v, kAudit, kInit, {10000, 0.02}), InvalidParameter);
    const QuadraticCost blow{2, 0, 0, 0.2, 1};
    auto vb = gaussian::solve_backward(blow, kZero);
    CHECK_THROWS_AS(mc::simulate_ensemble(vb, blow, kInit), NonGlobalValue);
}

TEST_CASE("sample dump") {
    const QuadraticCost c{-2, 0, 0, 0.2, 0.5};
    auto v = gaussian::solve_backward(c, kZero);
    auto e = mc::simulate_ensemble(v, c, kInit, {10000, 0.0, 1, 3, 1});
    const auto path = std::filesystem::temp_directory_path() / "mfg_mc_samples.csv";
    mc::write_samples_csv(e, path.string());
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,agent_id,x");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 3 * 10000);
    std::filesystem::remove(path);
}
