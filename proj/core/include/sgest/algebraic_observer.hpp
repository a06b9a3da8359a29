#pragma once

#include "sgest/generator.hpp"
#include "sgest/pmu.hpp"

#include <complex>
#include <optional>

namespace sgest {

using Phasor = std::complex<double>;

/// Memoryless estimate of rotor angle and internal voltage from a single
/// PMU sample, plus the reconstructed air-gap torque.
struct AlgebraicEstimate {
    double t = 0.0;
    double x1_hat = 0.0;   ///< rotor angle estimate, unwrapped [rad]
    double x3_hat = 0.0;   ///< internal voltage estimate [pu]
    double Te_hat = 0.0;   ///< reconstructed electrical torque [pu]
    Phasor psi{};
    bool x3_nonpositive = false; ///< warning flag; the estimate is still usable
};

/// Measurement phasor psi = (R_s + j x_q) y3 e^{j y4} + y1 e^{j y2}.
/// Throws DegenerateOperatingPoint when |psi| < 1e-6 (argument undefined).
Phasor compute_psi(const PmuSample& sample, const GeneratorParams& p);

/// The same phasor evaluated on true terminal quantities (noise-free).
Phasor nominal_psi(const TerminalQuantities& term, const GeneratorParams& p);

/// Inverts the stator algebra on one sample:
///   x1_hat = arg(psi)  (branch nearest `prev`, principal branch otherwise)
///   x3_hat = |psi| - (x_q - x_d') cos(pi/2 - x1_hat + y4) y3
/// and reconstructs Te_hat from (x1_hat, x3_hat, y3, y4).
AlgebraicEstimate estimate(const PmuSample& sample, const GeneratorParams& p,
                           const std::optional<AlgebraicEstimate>& prev = std::nullopt);

/// Realized disturbances of one sample against ground truth (analysis use):
/// the argument and magnitude perturbations of psi and the resulting state
/// and torque errors.
struct RealizedErrors {
    double w_x1 = 0.0;
    double w_psi = 0.0;
    double w_x3 = 0.0;
    double w_Te = 0.0;
};
RealizedErrors error_decomposition(const PmuSample& sample, const TerminalQuantities& truth,
                                   double true_x1, double true_x3,
                                   const GeneratorParams& p);

} // namespace sgest
