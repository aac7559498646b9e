#include "mfg/mc.hpp"

#include <fmt/os.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <thread>

namespace mfg::mc {

namespace {

constexpr std::size_t kMinAgents = 10000;
constexpr std::size_t kMinKdeSamples = 1000;
constexpr std::size_t kKdePoints = 512;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t agent_key(std::uint64_t seed, std::uint64_t agent) {
    return splitmix(splitmix(seed) ^ agent);
}

double to_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Normal number `index` of one agent: Box-Muller on pair index / 2, cosine
// branch for even indices and sine for odd ones. Caches the last pair.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t agent) : key_(agent_key(seed, agent)) {}

    double operator()(std::uint64_t index) {
        const std::uint64_t pair = index / 2;
        if (pair != pair_) {
            const std::uint64_t h = splitmix(key_ ^ pair);
            const double r = std::sqrt(-2.0 * std::log(to_unit(splitmix(h ^ 0))));
            const double angle = 2.0 * std::numbers::pi * to_unit(splitmix(h ^ 1));
            cos_ = r * std::cos(angle);
            sin_ = r * std::sin(angle);
            pair_ = pair;
        }
        return index % 2 == 0 ? cos_ : sin_;
    }

private:
    std::uint64_t key_;
    std::uint64_t pair_ = ~std::uint64_t{0};
    double cos_ = 0.0, sin_ = 0.0;
};

// Path dynamics shared by both variants.
struct Plan {
    std::size_t n_steps = 0;
    std::size_t stride = 0;
    double dt = 0.0;
    std::vector<double> drift_a; ///< 2A at step starts
    std::vector<double> drift_b; ///< B at step starts
};

Plan make_plan(const gaussian::ValueSolution& value, const QuadraticCost& cost,
               const EnsembleOptions& options) {
    cost.validate(true);
    if (!value.existence.global()) throw NonGlobalValue(*value.existence.blowup_time);
    if (options.n_agents < kMinAgents) {
        throw InvalidParameter("ensemble needs at least 10^4 agents");
    }
    if (options.outputs < 2) throw InvalidParameter("ensemble needs at least two output times");
    const double T = cost.horizon;
    const double dt = options.dt > 0.0 ? options.dt : T / 1000.0;
    if (dt > T / 200.0 * (1.0 + 1e-12)) throw InvalidParameter("dt must not exceed T/200");

    Plan plan;
    const std::size_t intervals = options.outputs - 1;
    plan.stride = static_cast<std::size_t>(std::ceil(T / dt / static_cast<double>(intervals) - 1e-9));
    plan.stride = std::max<std::size_t>(plan.stride, 1);
    plan.n_steps = plan.stride * intervals;
    plan.dt = T / static_cast<double>(plan.n_steps);
    plan.drift_a.resize(plan.n_steps);
    plan.drift_b.resize(plan.n_steps);
    for (std::size_t n = 0; n < plan.n_steps; ++n) {
        const auto ab = value.dense->state(static_cast<double>(n) * plan.dt);
        plan.drift_a[n] = 2.0 * ab[0];
        plan.drift_b[n] = ab[1];
    }
    return plan;
}

// Runs `agent_path(agent)` over all agents on a pool of workers. Each agent
// writes only its own column, so the split does not affect results.
void for_each_agent(std::size_t n_agents, unsigned workers,
                    const std::function<void(std::size_t)>& agent_path) {
    unsigned count = workers != 0 ? workers : std::max(1u, std::thread::hardware_concurrency());
    count = static_cast<unsigned>(std::min<std::size_t>(count, n_agents));
    if (count <= 1) {
        for (std::size_t i = 0; i < n_agents; ++i) agent_path(i);
        return;
    }
    std::vector<std::jthread> pool;
    const std::size_t block = (n_agents + count - 1) / count;
    for (unsigned w = 0; w < count; ++w) {
        const std::size_t lo = w * block, hi = std::min(n_agents, lo + block);
        pool.emplace_back([lo, hi, &agent_path] {
            for (std::size_t i = lo; i < hi; ++i) agent_path(i);
        });
    }
}

// Fixed-order reductions over the live agents of one output time.
void fill_stats(EnsembleStats& st, std::span<const double> xs) {
    std::vector<double> live;
    live.reserve(xs.size());
    for (double x : xs) {
        if (!std::isnan(x)) live.push_back(x);
    }
    const double n = static_cast<double>(live.size());
    st.alive.push_back(n / static_cast<double>(xs.size()));
    if (live.empty()) {
        for (auto* v : {&st.mean, &st.variance, &st.stderr_mean, &st.mode_kde, &st.bandwidth,
                        &st.skewness}) {
            v->push_back(kNaN);
        }
        return;
    }
    double sum = 0.0;
    for (double x : live) sum += x;
    const double mean = sum / n;
    double m2 = 0.0, m3 = 0.0;
    for (double x : live) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    st.mean.push_back(mean);
    st.variance.push_back(m2);
    st.stderr_mean.push_back(std::sqrt(m2 / n));
    st.skewness.push_back(m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0);
    if (live.size() >= kMinKdeSamples) {
        st.mode_kde.push_back(kde_mode(live));
        st.bandwidth.push_back(kde_bandwidth(live));
    } else {
        st.mode_kde.push_back(kNaN);
        st.bandwidth.push_back(kNaN);
    }
}

Ensemble finish(const Plan& plan, const QuadraticCost& cost, const EnsembleOptions& options,
                std::vector<std::vector<double>> positions) {
    Ensemble out;
    out.stats.n_agents = options.n_agents;
    out.stats.seed = options.seed;
    out.stats.dt = plan.dt;
    out.stats.times = ode::uniform_grid(0.0, cost.horizon, options.outputs);
    for (const auto& row : positions) fill_stats(out.stats, row);
    out.positions = std::move(positions);
    return out;
}

} // namespace

std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t agent, std::uint64_t step,
                           std::uint64_t lane) {
    return splitmix(splitmix(agent_key(seed, agent) ^ step) ^ lane);
}

double counter_uniform(std::uint64_t seed, std::uint64_t agent, std::uint64_t step,
                       std::uint64_t lane) {
    return to_unit(counter_bits(seed, agent, step, lane));
}

double counter_normal(std::uint64_t seed, std::uint64_t agent, std::uint64_t index) {
    NormalStream stream(seed, agent);
    return stream(index);
}

Ensemble simulate_ensemble(const gaussian::ValueSolution& value, const QuadraticCost& cost,
                           const GaussianInitial& initial, const EnsembleOptions& options) {
    const Plan plan = make_plan(value, cost, options);
    const std::size_t n_out = options.outputs;
    std::vector<std::vector<double>> pos(n_out, std::vector<double>(options.n_agents));
    const double sd0 = std::sqrt(initial.variance());
    const double noise = cost.delta * std::sqrt(plan.dt);

    for_each_agent(options.n_agents, options.workers, [&](std::size_t i) {
        // Normal 0 draws the initial position; normal n + 1 drives step n.
        NormalStream normal(options.seed, i);
        double x = initial.x0() + sd0 * normal(0);
        pos[0][i] = x;
        for (std::size_t n = 0; n < plan.n_steps; ++n) {
            const double z = noise != 0.0 ? normal(n + 1) : 0.0;
            x += (plan.drift_a[n] * x + plan.drift_b[n]) * plan.dt + noise * z;
            if ((n + 1) % plan.stride == 0) pos[(n + 1) / plan.stride][i] = x;
        }
    });
    return finish(plan, cost, options, std::move(pos));
}

Ensemble simulate_halfline(const gaussian::ValueSolution& value, const QuadraticCost& cost,
                           const HalfLineInitial& initial, const EnsembleOptions& options) {
    if (cost.b != 0.0) throw InvalidParameter("half-line ensemble needs b = 0");
    const Plan plan = make_plan(value, cost, options);
    const std::size_t n_out = options.outputs;
    std::vector<std::vector<double>> pos(n_out, std::vector<double>(options.n_agents, kNaN));
    const double noise = cost.delta * std::sqrt(plan.dt);
    const double bridge = cost.delta * cost.delta * plan.dt;

    for_each_agent(options.n_agents, options.workers, [&](std::size_t i) {
        // Rayleigh draw for kappa x exp(-kappa x^2 / 2) on lane 2 of step 0;
        // lane 2 of step n + 1 decides bridge crossings during step n.
        NormalStream normal(options.seed, i);
        const double u = counter_uniform(options.seed, i, 0, 2);
        double x = std::sqrt(-2.0 * std::log(u) / initial.kappa());
        pos[0][i] = x;
        for (std::size_t n = 0; n < plan.n_steps; ++n) {
            const double z = noise != 0.0 ? normal(n + 1) : 0.0;
            const double next = x + plan.drift_a[n] * x * plan.dt + noise * z;
            if (next <= 0.0) return;
            if (bridge > 0.0 &&
                counter_uniform(options.seed, i, n + 1, 2) < std::exp(-2.0 * x * next / bridge)) {
                return;
            }
            x = next;
            if ((n + 1) % plan.stride == 0) pos[(n + 1) / plan.stride][i] = x;
        }
    });
    return finish(plan, cost, options, std::move(pos));
}

double kde_bandwidth(std::span<const double> samples) {
    const double n = static_cast<double>(samples.size());
    double sum = 0.0;
    for (double x : samples) sum += x;
    const double mean = sum / n;
    double m2 = 0.0;
    for (double x : samples) m2 += (x - mean) * (x - mean);
    return 1.06 * std::sqrt(m2 / n) * std::pow(n, -0.2);
}

double kde_mode(std::span<const double> samples) {
    if (samples.size() < kMinKdeSamples) {
        throw TooFewSamples("kde_mode needs at least 1000 samples");
    }
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double h = kde_bandwidth(samples);
    if (!(h > 0.0)) return *lo_it; // point mass

    const double lo = *lo_it - 3.0 * h, hi = *hi_it + 3.0 * h;
    const double step = (hi - lo) / static_cast<double>(kKdePoints - 1);
    std::vector<double> bins(kKdePoints, 0.0);
    for (double x : samples) {
        const double u = (x - lo) / step;
        const auto k = std::min(static_cast<std::size_t>(u), kKdePoints - 2);
        const double frac = u - static_cast<double>(k);
        bins[k] += 1.0 - frac;
        bins[k + 1] += frac;
    }
    const auto reach = static_cast<std::ptrdiff_t>(std::ceil(5.0 * h / step));
    std::vector<double> kernel(static_cast<std::size_t>(reach) + 1);
    for (std::ptrdiff_t j = 0; j <= reach; ++j) {
        const double r = static_cast<double>(j) * step / h;
        kernel[static_cast<std::size_t>(j)] = std::exp(-0.5 * r * r);
    }
    const auto n_pts = static_cast<std::ptrdiff_t>(kKdePoints);
    std::vector<double> density(kKdePoints, 0.0);
    for (std::ptrdiff_t i = 0; i < n_pts; ++i) {
        double acc = 0.0;
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - reach);
             j <= std::min(n_pts - 1, i + reach); ++j) {
            acc += bins[static_cast<std::size_t>(j)] *
                   kernel[static_cast<std::size_t>(std::abs(i - j))];
        }
        density[static_cast<std::size_t>(i)] = acc;
    }
    const auto top = static_cast<std::size_t>(
        std::max_element(density.begin(), density.end()) - density.begin());
    double x = lo + step * static_cast<double>(top);
    if (top > 0 && top + 1 < kKdePoints) {
        const double l = density[top - 1], m = density[top], r = density[top + 1];
        const double curv = l - 2.0 * m + r;
        if (curv < 0.0) x += 0.5 * (l - r) / curv * step;
    }
    return x;
}

void write_samples_csv(const Ensemble& ensemble, const std::string& path) {
    auto out = fmt::output_file(path);
    out.print("t,agent_id,x\n");
    for (std::size_t k = 0; k < ensemble.positions.size(); ++k) {
        const auto& row = ensemble.positions[k];
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (std::isnan(row[i])) continue;
            out.print("{:.17g},{},{:.17g}\n", ensemble.stats.times[k], i, row[i]);
        }
    }
}

} // namespace mfg::mc
