#pragma once

// Monte Carlo oracle: agents follow dX = (2A(t)X + B(t)) dt + delta dW under
// Euler-Maruyama. Every random number is a pure function of
// (seed, agent, step, lane), so results do not depend on the worker count.

#include "mfg/gaussian.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mfg::mc {

/// Counter-based generator: splitmix64 finalizer chained over
/// (seed, agent), then step, then lane. Lanes 0 and 1 feed the normals,
/// lane 2 the uniforms used by the half-line ensemble.
std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t agent, std::uint64_t step,
                           std::uint64_t lane);
/// Uniform in (0, 1), never exactly 0 or 1.
double counter_uniform(std::uint64_t seed, std::uint64_t agent, std::uint64_t step,
                       std::uint64_t lane);
/// Standard normal number `index` of one agent: Box-Muller on lanes 0 and 1
/// of step index / 2, cosine branch for even indices, sine for odd.
double counter_normal(std::uint64_t seed, std::uint64_t agent, std::uint64_t index);

struct EnsembleOptions {
    std::size_t n_agents = 10000;
    double dt = 0.0;          ///< 0 selects T/1000; the used step is T / n_steps <= dt
    std::uint64_t seed = 1;
    std::size_t outputs = 101; ///< output times, uniform on [0, T] including both ends
    unsigned workers = 0;      ///< 0 selects hardware concurrency; never changes results
};

struct EnsembleStats {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> variance;    ///< population variance of live agents
    std::vector<double> stderr_mean; ///< sqrt(variance / live)
    std::vector<double> mode_kde;    ///< NaN when fewer than 1000 agents are alive
    std::vector<double> bandwidth;   ///< KDE bandwidth used for mode_kde
    std::vector<double> skewness;
    std::vector<double> alive;       ///< fraction of agents not absorbed (1 on the full line)
    std::size_t n_agents = 0;
    std::uint64_t seed = 0;
    double dt = 0.0;                 ///< step actually used
};

struct Ensemble {
    EnsembleStats stats;
    /// positions[k][agent] at stats.times[k]; NaN once an agent is absorbed.
    std::vector<std::vector<double>> positions;
};

/// Full-line ensemble started from the Gaussian m0.
Ensemble simulate_ensemble(const gaussian::ValueSolution& value, const QuadraticCost& cost,
                           const GaussianInitial& initial, const EnsembleOptions& options = {});

/// Half-line ensemble started from kappa x exp(-kappa x^2 / 2). The wall at
/// x = 0 is absorbing, as m = 0 there in the ansatz; crossings between steps
/// are caught with the Brownian-bridge probability exp(-2 x_n x_{n+1} / (delta^2 dt)).
Ensemble simulate_halfline(const gaussian::ValueSolution& value, const QuadraticCost& cost,
                           const HalfLineInitial& initial, const EnsembleOptions& options = {});

/// Normal-reference bandwidth 1.06 sigma n^(-1/5).
double kde_bandwidth(std::span<const double> samples);

/// Argmax of a Gaussian-kernel density estimate on a 512-point grid, from
/// linearly binned samples, refined by a parabola through the top three
/// points. Needs at least 1000 samples.
double kde_mode(std::span<const double> samples);

/// Sample dump with header "t,agent_id,x"; absorbed agents are skipped.
void write_samples_csv(const Ensemble& ensemble, const std::string& path);

} // namespace mfg::mc
