#include "mfg/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace mfg::ode {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension (Hairer & Wanner, DOPRI5 dense output).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

double max_abs(std::span<const double> y) {
    double m = 0.0;
    for (double v : y) {
        if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
        m = std::max(m, std::abs(v));
    }
    return m;
}

struct Crossing {
    double t_old;
    double h;
    std::vector<double> y_old;
};

// Runs the adaptive loop. Returns the step that carried the state past `guard`
// if that happened, nullopt on completion.
std::optional<Crossing> run(const Field& field, std::span<const double> y0, double t0,
                            double t1, const StepControl& ctl, double guard, Trajectory& out) {
    const std::size_t n = y0.size();
    const std::size_t nc = (ctl.controlled == 0) ? n : std::min(ctl.controlled, n);
    const double span = t1 - t0;
    const double dir = span > 0 ? 1.0 : -1.0;
    const double min_step = 1e-14 * std::abs(span);

    std::vector<double> y(y0.begin(), y0.end()), ynew(n), ytmp(n), err(n);
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);

    double t = t0;
    field(t, y, k1);

    double h = ctl.initial_step;
    if (h <= 0.0) {
        // Hairer's starting-step heuristic, simplified.
        double d0 = 0.0, d1n = 0.0;
        for (std::size_t i = 0; i < nc; ++i) {
            const double sc = ctl.atol + ctl.rtol * std::abs(y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1n += (k1[i] / sc) * (k1[i] / sc);
        }
        d0 = std::sqrt(d0 / nc);
        d1n = std::sqrt(d1n / nc);
        h = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
        h = std::min(h, std::abs(span));
    }
    h = std::min(std::abs(h), std::abs(span)) * dir;

    std::size_t steps = 0;
    while (dir * (t1 - t) > 0.0) {
        if (++steps > ctl.max_steps) throw StepUnderflow(t);
        bool last = false;
        if (dir * (t + h - t1) >= 0.0) {
            h = t1 - t;
            last = true;
        }

        auto stage = [&](std::vector<double>& dst, double ct,
                         std::initializer_list<std::pair<double, const std::vector<double>*>> terms) {
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (const auto& [coef, k] : terms) acc += coef * (*k)[i];
                ytmp[i] = y[i] + h * acc;
            }
            field(t + ct * h, ytmp, dst);
        };
        stage(k2, c2, {{a21, &k1}});
        stage(k3, c3, {{a31, &k1}, {a32, &k2}});
        stage(k4, c4, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
        stage(k5, c5, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
        stage(k6, 1.0, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
        for (std::size_t i = 0; i < n; ++i) {
            ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] +
                                  a76 * k6[i]);
        }
        field(t + h, ynew, k7);

        double enorm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                          e7 * k7[i]);
            const double sc =
                ctl.atol + ctl.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            if (i < nc) enorm += (err[i] / sc) * (err[i] / sc);
        }
        enorm = std::sqrt(enorm / nc);
        const bool finite = std::isfinite(enorm) && max_abs(ynew) < std::numeric_limits<double>::infinity();

        if (finite && enorm <= 1.0) {
            if (max_abs(ynew) >= guard) return Crossing{t, h, y};

            std::vector<double> coeffs(5 * n);
            for (std::size_t i = 0; i < n; ++i) {
                const double ydiff = ynew[i] - y[i];
                const double bspl = h * k1[i] - ydiff;
                coeffs[i] = y[i];
                coeffs[n + i] = ydiff;
                coeffs[2 * n + i] = bspl;
                coeffs[3 * n + i] = ydiff - h * k7[i] - bspl;
                coeffs[4 * n + i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                         d6 * k6[i] + d7 * k7[i]);
            }
            out.push_step(t, h, std::move(coeffs));

            t = last ? t1 : t + h;
            y.swap(ynew);
            k1.swap(k7);
            const double fac =
                enorm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 5.0);
            h *= fac;
        } else {
            const double fac = finite ? std::clamp(0.9 * std::pow(enorm, -0.2), 0.1, 0.9) : 0.25;
            h *= fac;
            if (std::abs(h) < min_step) {
                // A non-finite trial state this close to t signals a pole.
                if (!finite) return Crossing{t, h / fac, y};
                throw StepUnderflow(t);
            }
        }
    }
    return std::nullopt;
}

} // namespace

Trajectory::Trajectory(std::size_t dim, double t_start)
    : dim_(dim), t_start_(t_start), t_reached_(t_start) {}

void Trajectory::set_initial(std::span<const double> y0) { y0_.assign(y0.begin(), y0.end()); }

void Trajectory::push_step(double t_old, double h, std::vector<double> coeffs) {
    steps_.push_back(Step{t_old, h, std::move(coeffs)});
    t_reached_ = t_old + h;
}

bool Trajectory::covers(double t) const {
    const double lo = std::min(t_start_, t_reached_);
    const double hi = std::max(t_start_, t_reached_);
    const double slack = 1e-12 * std::max(1.0, std::abs(hi - lo));
    return t >= lo - slack && t <= hi + slack;
}

const Trajectory::Step* Trajectory::find(double t) const {
    if (steps_.empty()) return nullptr;
    const bool forward = steps_.front().h > 0;
    // Steps are ordered by integration direction; find the first whose end passes t.
    auto it = std::lower_bound(steps_.begin(), steps_.end(), t, [forward](const Step& s, double v) {
        const double end = s.t_old + s.h;
        return forward ? end < v : end > v;
    });
    if (it == steps_.end()) --it;
    return &*it;
}

std::vector<double> Trajectory::state(double t) const {
    if (!covers(t)) {
        throw OutsideExistenceInterval("time " + std::to_string(t) + " outside trajectory [" +
                                       std::to_string(t_start_) + ", " +
                                       std::to_string(t_reached_) + "]");
    }
    const Step* s = find(t);
    if (s == nullptr) return y0_;
    const double theta = (t - s->t_old) / s->h;
    const double theta1 = 1.0 - theta;
    std::vector<double> y(dim_);
    const auto& c = s->coeffs;
    for (std::size_t i = 0; i < dim_; ++i) {
        y[i] = c[i] + theta * (c[dim_ + i] +
                               theta1 * (c[2 * dim_ + i] +
                                         theta * (c[3 * dim_ + i] + theta1 * c[4 * dim_ + i])));
    }
    return y;
}

double Trajectory::component(std::size_t i, double t) const { return state(t).at(i); }

std::vector<double> Trajectory::sample(std::size_t i, std::span<const double> times) const {
    std::vector<double> out;
    out.reserve(times.size());
    for (double t : times) out.push_back(component(i, t));
    return out;
}

BlowUpDetected::BlowUpDetected(double t, Trajectory p)
    : SolverError("state exceeded blow-up guard near t=" + std::to_string(t)), time(t),
      partial(std::move(p)) {}

Trajectory integrate(const Field& field, std::span<const double> y0, double t_start,
                     double t_end, const StepControl& control) {
    if (t_start == t_end) throw InvalidParameter("integrate: empty time interval");
    Trajectory traj(y0.size(), t_start);
    traj.set_initial(y0);

    auto crossing = run(field, y0, t_start, t_end, control, control.blowup_guard, traj);
    if (!crossing) return traj;

    // Bisect the crossing time inside the offending step by re-integrating the
    // sub-interval without a guard.
    double lo = 0.0;
    double hi = crossing->h;
    while (std::abs(hi - lo) > control.crossing_tol) {
        const double mid = 0.5 * (lo + hi);
        bool crossed = false;
        if (mid == 0.0) break;
        try {
            Trajectory scratch(y0.size(), crossing->t_old);
            auto inner = run(field, crossing->y_old, crossing->t_old, crossing->t_old + mid,
                             control, std::numeric_limits<double>::infinity(), scratch);
            crossed = inner.has_value() ||
                      max_abs(scratch.state(crossing->t_old + mid)) >= control.blowup_guard;
        } catch (const StepUnderflow&) {
            crossed = true;
        }
        (crossed ? hi : lo) = mid;
    }
    throw BlowUpDetected(crossing->t_old + 0.5 * (lo + hi), std::move(traj));
}

std::vector<double> uniform_grid(double t0, double t1, std::size_t n) {
    if (n < 2) throw InvalidParameter("uniform_grid needs at least two points");
    std::vector<double> g(n);
    const double h = (t1 - t0) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g[i] = t0 + h * static_cast<double>(i);
    g.back() = t1;
    return g;
}

} // namespace mfg::ode
