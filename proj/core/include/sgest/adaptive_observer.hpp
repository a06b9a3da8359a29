#pragma once

#include <array>
#include <optional>

namespace sgest {

/// Tuning of the adaptive speed/parameter estimator.
struct EstimatorConfig {
    double k = 5.0;        ///< observer gain (> 0)
    double gamma1 = 2e8;   ///< adaptation gain for theta_1 (> 0)
    double gamma2 = 2e8;   ///< adaptation gain for theta_2 (> 0)
    double lambda = 3.0;   ///< regression filter pole [rad/s] (> 0)
    double alpha_H = 1.5;  ///< extension lag pole [rad/s] (> 0)
    std::array<double, 2> theta_init{0.0, 0.0};
    /// Integrator initial value; when unset, -k * x1_hat(0) so the initial
    /// speed estimate is exactly zero.
    std::optional<double> x2I_init;

    void validate(const char* key_prefix = "estimator.") const;
};

/// Mutable estimator state advanced once per PMU sample.
struct EstimatorState {
    double x2I = 0.0;
    std::array<double, 2> theta{0.0, 0.0};
};

/// One snapshot of the regression pipeline at a PMU step: the filtered
/// regression (z, xi), its extension (Z, Xi) and the mixed scalar
/// regressions (Delta, calZ). By construction calZ = adj(Xi) Z and
/// Delta = det(Xi) hold exactly.
struct RegressionRecord {
    double t = 0.0;
    double z = 0.0;
    std::array<double, 2> xi{};
    std::array<double, 2> Z{};
    std::array<double, 4> Xi{};  ///< row-major 2x2
    double Delta = 0.0;
    std::array<double, 2> calZ{};
};

/// The three second-order regression filters F, F s, F s^2 with
/// F = lambda^2 / (s + lambda)^2, realized in controllable canonical form
/// on a shared pole pair and discretized bilinearly at the PMU period.
/// No numerical differentiation of the angle estimate is performed; the
/// s-powers live in the output maps. Under the bilinear map the sampled
/// regression identity z = theta1 xi1 + theta2 xi2 holds to second order
/// in the period for smooth signals; a hold-based map leaves a first-order
/// residual through the s^2 feedthrough.
class DremFilterBank {
public:
    DremFilterBank(double lambda, double dt);

    struct Output {
        double z = 0.0;    ///< F[s^2 [x1_hat]]
        double xi1 = 0.0;  ///< -F[s [x1_hat]]
        double xi2 = 0.0;  ///< F[u]
    };

    /// Emits the outputs at the current step, then advances the states.
    Output step(double x1_hat, double u);

    /// Sets the branch states to their DC fixed points for the given
    /// inputs, so a run entered at quasi-steady conditions starts without
    /// the large feedthrough transient of zero-initialized states.
    void prime(double x1_hat, double u);

private:
    std::array<double, 4> ad_{};
    std::array<double, 2> bd_{};
    std::array<double, 2> c_f_{}, c_fs_{}, c_fs2_{};
    double d_f_ = 0.0, d_fs_ = 0.0, d_fs2_ = 0.0;
    double dc_state_gain_ = 0.0;
    std::array<double, 2> s_d2_{}; ///< branch filtering x1_hat for z
    std::array<double, 2> s_d1_{}; ///< branch filtering x1_hat for xi1
    std::array<double, 2> s_u_{};  ///< branch filtering u for xi2
};

/// Regressor extension H = [identity; alpha_H/(s + alpha_H)]: row one of
/// (Z, Xi) is the instantaneous regression, row two its lag-filtered copy.
class RegressorExtension {
public:
    RegressorExtension(double alpha_H, double dt);

    struct Output {
        std::array<double, 2> Z{};
        std::array<double, 4> Xi{};
    };

    Output step(double z, double xi1, double xi2);

    /// Seeds the lag row with the given regression values (DC fixed point).
    void prime(double z, double xi1, double xi2);

private:
    double decay_ = 0.0;
    double gain_ = 0.0;
    std::array<double, 3> lag_{}; ///< lagged z, xi1, xi2
};

/// Mixing step: Delta = det(Xi), calZ = adj(Xi) Z.
struct MixResult {
    double Delta = 0.0;
    std::array<double, 2> calZ{};
};
MixResult mix(const std::array<double, 2>& Z, const std::array<double, 4>& Xi);

/// One RK4 step of the estimator ODEs
///   d x2I     = -(theta1 + k)(x2I + k x1_hat) + theta2 u
///   d theta_i = -gamma_i Delta (Delta theta_i - calZ_i)
/// with the regression quantities held constant over the step. Throws
/// EstimatorDivergence when the result is non-finite.
EstimatorState update(const EstimatorState& st, const RegressionRecord& rec,
                      double x1_hat, double u, const EstimatorConfig& cfg, double dt);

/// Speed estimate read-out: x2_hat = x2I + k x1_hat.
double x2_estimate(const EstimatorState& st, double x1_hat, double k);

/// Full estimator: filter bank, extension, mixing and the adaptive update,
/// advanced once per PMU sample. The continuous-time update ODEs are
/// integrated over each sample interval with the driving quantities frozen
/// at their midpoint averages (the two enclosing samples), which keeps the
/// sampled observer second-order accurate against its continuous ideal.
/// Outputs are the estimates valid at the step's own timestamp.
class AdaptiveObserver {
public:
    AdaptiveObserver(const EstimatorConfig& cfg, double dt);

    struct Output {
        RegressionRecord record;
        double x2_hat = 0.0;
        std::array<double, 2> theta_hat{};
    };

    Output step(double t, double x1_hat, double u);

    const EstimatorState& state() const { return state_; }
    const EstimatorConfig& config() const { return cfg_; }

private:
    EstimatorConfig cfg_;
    double dt_;
    bool started_ = false;
    EstimatorState state_;
    DremFilterBank filters_;
    RegressorExtension extension_;
    RegressionRecord prev_record_;
    double prev_x1_ = 0.0;
    double prev_u_ = 0.0;
};

} // namespace sgest
