#include "sgest/algebraic_observer.hpp"

#include "sgest/errors.hpp"

#include <cmath>

namespace sgest {

namespace {

constexpr double kHalfPi = 1.5707963267948966192;
constexpr double kTwoPi = 6.283185307179586477;
constexpr double kDegeneracyThreshold = 1e-6;

Phasor psi_of(double v_mag, double v_ang, double i_mag, double i_ang,
              const GeneratorParams& p) {
    const Phasor j(0.0, 1.0);
    return (p.R_s + j * p.x_q) * i_mag * std::exp(j * i_ang) +
           v_mag * std::exp(j * v_ang);
}

double unwrap_towards(double principal, double reference) {
    return principal + kTwoPi * std::round((reference - principal) / kTwoPi);
}

} // namespace

Phasor compute_psi(const PmuSample& sample, const GeneratorParams& p) {
    const Phasor psi = psi_of(sample.y1, sample.y2, sample.y3, sample.y4, p);
    if (std::abs(psi) < kDegeneracyThreshold)
        throw DegenerateOperatingPoint(
            "algebraic observer: |psi| below degeneracy threshold, argument undefined");
    return psi;
}

Phasor nominal_psi(const TerminalQuantities& term, const GeneratorParams& p) {
    return psi_of(term.V_t, term.theta_t, term.I_t, term.phi_t, p);
}

AlgebraicEstimate estimate(const PmuSample& sample, const GeneratorParams& p,
                           const std::optional<AlgebraicEstimate>& prev) {
    AlgebraicEstimate est;
    est.t = sample.t;
    est.psi = compute_psi(sample, p);

    const double principal = std::arg(est.psi);
    est.x1_hat = prev ? unwrap_towards(principal, prev->x1_hat) : principal;

    const double g = kHalfPi - est.x1_hat + sample.y4;
    const double cg = std::cos(g);
    const double sg = std::sin(g);
    est.x3_hat = std::abs(est.psi) - (p.x_q - p.x_dp) * cg * sample.y3;
    est.x3_nonpositive = !(est.x3_hat > 0.0);
    est.Te_hat = (p.x_q - p.x_dp) * cg * sg * sample.y3 * sample.y3 +
                 est.x3_hat * sg * sample.y3;
    return est;
}

RealizedErrors error_decomposition(const PmuSample& sample, const TerminalQuantities& truth,
                                   double true_x1, double true_x3,
                                   const GeneratorParams& p) {
    const Phasor psi = compute_psi(sample, p);
    const Phasor psi_nom =
        psi_of(truth.V_t, truth.theta_t, truth.I_t, truth.phi_t, p);

    RealizedErrors err;
    // Argument difference on the principal branch; the estimates themselves
    // are unwrapped, so the sample-level perturbation is the wrapped one.
    err.w_x1 = wrap_angle(std::arg(psi) - std::arg(psi_nom));
    err.w_psi = std::abs(psi) - std::abs(psi_nom);

    AlgebraicEstimate seed;
    seed.x1_hat = true_x1;
    const auto est = estimate(sample, p, seed);
    err.w_x3 = est.x3_hat - true_x3;
    err.w_Te = est.Te_hat - electrical_torque(true_x1, true_x3, truth.I_t, truth.phi_t, p);
    return err;
}

} // namespace sgest
