#pragma once

#include <stdexcept>
#include <string>

namespace sgest {

/// Invalid configuration (bad parameter value, malformed file, infeasible
/// operating point). Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Ground-truth simulation produced a non-finite or non-physical state.
class SimulationFault : public std::runtime_error {
public:
    SimulationFault(const std::string& msg, double t)
        : std::runtime_error(msg), t_fault(t) {}
    double t_fault;
};

/// Estimator state became non-finite. Maps to CLI exit code 2.
class EstimatorDivergence : public std::runtime_error {
public:
    EstimatorDivergence(const std::string& msg, double t)
        : std::runtime_error(msg), t_fault(t) {}
    double t_fault;
};

/// The measurement phasor collapsed below the degeneracy threshold, its
/// argument is undefined.
class DegenerateOperatingPoint : public std::runtime_error {
public:
    explicit DegenerateOperatingPoint(const std::string& msg)
        : std::runtime_error(msg) {}
};

/// Filesystem failure while writing run artifacts. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace sgest
