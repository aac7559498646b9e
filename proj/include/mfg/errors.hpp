#pragma once

#include <stdexcept>
#include <string>

namespace mfg {

/// Base of every error raised by the solver library.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public SolverError {
public:
    using SolverError::SolverError;
};

/// Adaptive step fell below 1e-14 of the integration span.
class StepUnderflow : public SolverError {
public:
    explicit StepUnderflow(double t)
        : SolverError("adaptive step underflow at t=" + std::to_string(t)), time(t) {}
    double time;
};

/// A quantity that requires the value function on all of [0,T] was requested
/// for a scenario whose Riccati solution blows up.
class NonGlobalValue : public SolverError {
public:
    explicit NonGlobalValue(double blowup)
        : SolverError("value function blows up at t=" + std::to_string(blowup)),
          blowup_time(blowup) {}
    double blowup_time;
};

class DegenerateDensity : public SolverError {
public:
    using SolverError::SolverError;
};

class DegenerateDenominator : public SolverError {
public:
    using SolverError::SolverError;
};

class OutsideExistenceInterval : public SolverError {
public:
    using SolverError::SolverError;
};

class FormulaPole : public SolverError {
public:
    using SolverError::SolverError;
};

class NotConvergent : public SolverError {
public:
    using SolverError::SolverError;
};

class DegenerateDiffusion : public SolverError {
public:
    using SolverError::SolverError;
};

class MassLeak : public SolverError {
public:
    MassLeak(double t, double mass)
        : SolverError("density mass " + std::to_string(mass) + " at t=" + std::to_string(t) +
                      " (domain too small?)"),
          time(t), mass(mass) {}
    double time;
    double mass;
};

class BoundaryMaximum : public SolverError {
public:
    using SolverError::SolverError;
};

class NoStrictMax : public SolverError {
public:
    using SolverError::SolverError;
};

class TooFewSamples : public SolverError {
public:
    using SolverError::SolverError;
};

} // namespace mfg
