#pragma once

// Explicit adaptive Dormand-Prince 5(4) integrator with continuous output and
// a finite-time blow-up guard.

#include "mfg/errors.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mfg::ode {

/// dy/dt = f(t, y), written into `dydt`.
using Field = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

struct StepControl {
    double rtol = 1e-12;
    double atol = 1e-13;
    /// Integration stops with BlowUpDetected once max|y_i| reaches this value.
    double blowup_guard = 1e8;
    /// Absolute accuracy of the bisected guard-crossing time.
    double crossing_tol = 1e-6;
    /// First trial step; 0 selects one automatically.
    double initial_step = 0.0;
    std::size_t max_steps = 5'000'000;
    /// Only the first `controlled` components enter the error norm (0: all).
    /// Components that are pure quadratures of the others can be left out so
    /// that they never change the step sequence.
    std::size_t controlled = 0;
};

/// Dense solution of one integration run. Accepted steps are stored with their
/// fifth-order continuous extension, so the state can be evaluated anywhere in
/// the covered interval, in either integration direction.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(std::size_t dim, double t_start);

    std::size_t dim() const { return dim_; }
    double t_start() const { return t_start_; }
    /// Last time reached (equals t_end for a completed run).
    double t_reached() const { return t_reached_; }
    std::size_t steps() const { return steps_.size(); }

    bool covers(double t) const;
    std::vector<double> state(double t) const;
    double component(std::size_t i, double t) const;

    /// Samples component `i` on the given times.
    std::vector<double> sample(std::size_t i, std::span<const double> times) const;

    // Used by the integrator.
    void set_initial(std::span<const double> y0);
    void push_step(double t_old, double h, std::vector<double> coeffs);

private:
    struct Step {
        double t_old;
        double h;
        // 5 blocks of `dim` coefficients of the continuous extension.
        std::vector<double> coeffs;
    };
    const Step* find(double t) const;

    std::size_t dim_ = 0;
    double t_start_ = 0.0;
    double t_reached_ = 0.0;
    std::vector<double> y0_;
    std::vector<Step> steps_;
};

/// Raised when the state norm crosses StepControl::blowup_guard. `partial`
/// covers [t_start, last accepted step before the crossing].
class BlowUpDetected : public SolverError {
public:
    BlowUpDetected(double t, Trajectory partial);
    double time;
    Trajectory partial;
};

/// Integrates from t_start to t_end (either direction). Throws BlowUpDetected
/// or StepUnderflow.
Trajectory integrate(const Field& field, std::span<const double> y0, double t_start,
                     double t_end, const StepControl& control = {});

/// n points uniformly covering [t0, t1] inclusive.
std::vector<double> uniform_grid(double t0, double t1, std::size_t n);

} // namespace mfg::ode
