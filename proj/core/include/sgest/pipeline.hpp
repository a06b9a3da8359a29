#pragma once

#include "sgest/analysis.hpp"
#include "sgest/network.hpp"
#include "sgest/scenario.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace sgest {

/// Frequency band the default excitation is tuned to respect (criterion:
/// |f - 60 Hz| within this for regular operation).
inline constexpr double kFreqBandHz = 0.05;
/// Fraction of a run discarded before computing post-settling statistics.
inline constexpr double kSettlingFraction = 0.5;
/// Default persistence-of-excitation window (clipped to a third of the run
/// so short runs still produce a sliding minimum).
inline constexpr double kPeWindowSeconds = 20.0;

/// In-memory result of one scenario execution. `primary` is the estimation
/// pass on the configured samples; `nominal` is the estimation pass on the
/// exact samples of the same trajectory (measurement noise never feeds back
/// into the plant, so both passes share one simulation).
struct RunOutcome {
    RunLog primary;
    RunLog nominal;
    OperatingEnvelope envelope;
    NoiseBounds noise_bounds;
    BoundReport bounds;
    PeReport pe;
    std::array<double, 2> theta_true{};
    double freq_in_band_fraction = 1.0;
    bool diverged = false;
    double fault_time = std::numeric_limits<double>::quiet_NaN();
};

/// Runs the full simulate -> measure -> estimate -> analyze pipeline.
RunOutcome execute(const ScenarioConfig& config);

/// Paths and identity of the on-disk artifacts of one run.
struct RunArtifacts {
    std::filesystem::path dir;
    std::filesystem::path timeseries;
    std::filesystem::path bounds_report;
    std::filesystem::path pe_report;
    std::filesystem::path manifest;
    std::uint64_t config_hash = 0;
    bool diverged = false;
    double fault_time = std::numeric_limits<double>::quiet_NaN();
};

/// Executes the scenario and writes timeseries.csv, bounds_report.json,
/// pe_report.json and manifest.json into the configured output directory.
RunArtifacts run(const ScenarioConfig& config, bool quiet = true);

/// One cell of a noise-scale sweep.
struct SweepCell {
    double scale = 1.0;
    int replica = 0;
    std::uint64_t seed = 0;
    bool diverged = false;
    double fault_time = std::numeric_limits<double>::quiet_NaN();
    std::array<double, 5> sup_err{};
    double w_x1_max = 0.0;
    double w_x3_max = 0.0;
    bool pe_satisfied = false;
};

struct SweepResult {
    std::vector<double> scales;
    int replicas = 0;
    std::vector<SweepCell> cells; ///< scale-major order
    std::string csv;              ///< summary table
};

/// Runs the (scale x replica) grid with per-cell derived seeds. Cell results
/// do not depend on `threads`; any cell divergence is recorded in the table
/// and the sweep continues.
SweepResult sweep(const ScenarioConfig& config, const std::vector<double>& scales,
                  int replicas, unsigned threads = 1);

/// Deterministically reseeds noise and excitation from one master seed
/// (the CLI --seed override).
ScenarioConfig with_master_seed(ScenarioConfig config, std::uint64_t master);

/// Scales every noise bound by `multiplier`; 0 turns noise off entirely.
ScenarioConfig with_noise_scale(ScenarioConfig config, double multiplier);

/// The timeseries.csv schema, in order.
const std::vector<std::string>& timeseries_columns();

/// Renders the run log as timeseries.csv content.
std::string timeseries_csv(const RunLog& log, const std::array<double, 2>& theta_true);

} // namespace sgest
