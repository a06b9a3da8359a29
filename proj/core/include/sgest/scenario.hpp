#pragma once

#include "sgest/adaptive_observer.hpp"
#include "sgest/excitation.hpp"
#include "sgest/generator.hpp"
#include "sgest/pmu.hpp"

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sgest {

/// Network section of a scenario: a single machine against an infinite bus,
/// or a small Kron-reduced multi-machine system in which every machine
/// shares the scenario's generator/exciter design and machine 0 carries
/// the PMU.
struct NetworkConfig {
    enum class Kind { Smib, Kron };
    Kind kind = Kind::Smib;

    // smib
    double x_e = 0.3;
    double V_inf = 1.0;
    double theta_inf0 = 0.0;
    double P_target = 0.7;
    double V_target = 1.02;

    // kron
    std::size_t n = 0;
    std::vector<std::complex<double>> Y;
    std::vector<double> P_targets;
    std::vector<double> V_targets;

    void validate() const;
};

/// Load-variation excitation: one signal on the infinite-bus angle and one
/// on the mechanical torque, both derived from the excitation seed.
struct ExcitationConfig {
    std::uint64_t seed = 1;
    SignalSpec theta_inf;
    SignalSpec tm;

    void validate() const;
};

struct SimConfig {
    double dt = 1e-3;       ///< integrator step [s]
    double duration = 60.0; ///< [s]
    double pmu_rate = 50.0; ///< [Hz]; must divide 1/dt exactly

    void validate() const;
};

struct OutputsConfig {
    std::string dir = "out";
    bool timeseries = true;
    bool bounds_report = true;
    bool pe_report = true;
};

/// Complete description of one run. (config, seeds) determines every output
/// byte of the run artifacts.
struct ScenarioConfig {
    GeneratorParams generator;
    ExciterParams exciter;
    NetworkConfig network;
    ExcitationConfig excitation;
    NoiseSpec noise;
    EstimatorConfig estimator;
    SimConfig sim;
    OutputsConfig outputs;

    /// Cross-field and per-section invariants; throws ConfigError listing
    /// every violation with its config key path.
    void validate() const;
};

/// Parses a scenario from JSON text. Unknown keys are errors (they are
/// almost always misspelled tuning parameters); parse failures report line
/// and column.
ScenarioConfig parse_scenario(const std::string& text);

/// Reads and parses a scenario file.
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Canonical serialization; parse_scenario(serialize_scenario(c)) == c.
std::string serialize_scenario(const ScenarioConfig& config);

/// FNV-1a hash of the canonical serialization, for run manifests.
std::uint64_t config_hash(const ScenarioConfig& config);

} // namespace sgest
