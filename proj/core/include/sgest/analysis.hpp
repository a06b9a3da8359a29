#pragma once

#include "sgest/adaptive_observer.hpp"
#include "sgest/generator.hpp"
#include "sgest/pmu.hpp"

#include <array>
#include <cstddef>
#include <limits>
#include <vector>

namespace sgest {

/// Operating envelope of a run, measured on the noiseless truth stream.
struct OperatingEnvelope {
    double V_t_max = 0.0;
    double I_t_max = 0.0;
    double x3_max = 0.0;
    double psi_nom_min = 0.0; ///< min |psi_nom| over the calibration run
};

/// Analytic first-order error bounds plus the empirical statistics of one
/// run. The five error channels are ordered (x1, x2, x3, theta1, theta2).
struct BoundReport {
    double w_x1_max = 0.0;
    double w_psi_max = 0.0;
    double w_x3_max = 0.0;
    double w_Te_max = 0.0;
    double w_Delta_max = 0.0;
    double rho = 0.0;  ///< sup of ||Lambda(t)||_2 (paired runs only)
    double zeta = 0.0; ///< sup of ||d(t)||_2 (paired runs only)
    std::array<double, 5> sup_err{};
    std::array<double, 5> rms_err{};
    double settling_time = 0.0;
    bool finite = true;
    double fault_time = std::numeric_limits<double>::quiet_NaN();
};

/// Sliding-window persistence-of-excitation measurement of the mixed
/// regressor Delta.
struct PeReport {
    double window_T = 0.0;
    double min_integral = 0.0;   ///< min over t of int_t^{t+T} Delta^2
    double mean_integral = 0.0;
    double epsilon = 0.0;        ///< threshold actually applied
    bool pe_satisfied = false;
};

/// Everything logged at the PMU rate during one run; the unit the analysis
/// operations consume. Truth rows and estimate rows share indices.
struct RunLog {
    double dt = 0.0; ///< PMU period
    std::vector<double> t;
    std::vector<double> delta, domega, eqp;  ///< true states
    std::vector<double> x1_hat, x2_hat, x3_hat, theta1_hat, theta2_hat, Te_hat;
    std::vector<PmuSample> samples;
    std::vector<TerminalQuantities> terms;   ///< true terminal quantities
    std::vector<RegressionRecord> records;
    bool diverged = false;
    double fault_time = std::numeric_limits<double>::quiet_NaN();
    std::size_t x3_warnings = 0;

    std::size_t size() const { return t.size(); }
};

/// First-order propagation of the channel noise bounds through the
/// algebraic observer. All outputs scale exactly linearly with a uniform
/// scaling of the input bounds. Throws DegenerateOperatingPoint when the
/// perturbed phasor magnitude can fall below the degeneracy threshold.
BoundReport algebraic_bounds(const NoiseBounds& noise, const OperatingEnvelope& env,
                             const GeneratorParams& p);

/// Sliding trapezoidal integral of Delta^2 over windows of length window_T.
/// epsilon_pe <= 0 selects the default threshold, 1% of the mean windowed
/// integral. Throws ConfigError when the series is shorter than the window.
PeReport pe_metric(const std::vector<double>& delta_series, double dt, double window_T,
                   double epsilon_pe);

/// Spectral norm (largest singular value) of a row-major 2x2 matrix.
double spectral_norm_2x2(const std::array<double, 4>& m);

/// Determinant perturbation inequality
///   |det(Xi) - det(Xi_nom)| <= 2 ||Xi - Xi_nom||_2 max(||Xi_nom||_2, ||Xi||_2).
struct DetPerturbationCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = false;
};
DetPerturbationCheck determinant_perturbation_check(const std::array<double, 4>& Xi_nom,
                                                    const std::array<double, 4>& Xi);

/// Completes `base` with the empirical statistics of a run: per-channel sup
/// and RMS errors over the post-settling window, and, when the paired
/// noiseless run is supplied, the realized perturbation magnitudes rho,
/// zeta and the determinant-perturbation envelope. Detects non-finite
/// samples and reports the first fault time.
BoundReport run_statistics(const RunLog& run, const std::array<double, 2>& theta_true,
                           const EstimatorConfig& cfg, double settling_fraction,
                           const RunLog* nominal = nullptr, BoundReport base = {});

} // namespace sgest
