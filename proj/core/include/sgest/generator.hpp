#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <utility>

namespace sgest {

/// Machine constants of the third-order flux-decay model, generator MVA
/// base per-unit. The lumped swing constants a1 = omega_s*D/(2H) and
/// a2 = omega_s/(2H) are always recomputed from the fields, never stored.
struct GeneratorParams {
    double x_d = 1.8;     ///< direct-axis reactance [pu]
    double x_dp = 0.3;    ///< direct-axis transient reactance [pu]
    double x_q = 1.7;     ///< quadrature-axis reactance [pu]
    double R_s = 0.0;     ///< stator resistance [pu]
    double H = 5.0;       ///< inertia constant [s]
    double D = 0.02;      ///< damping factor [pu torque / (rad/s)]
    double T_d0p = 8.0;   ///< d-axis transient open-circuit time constant [s]
    double omega_s = 2.0 * 3.14159265358979323846 * 60.0; ///< nominal speed [rad/s]

    double a1() const { return omega_s * D / (2.0 * H); }
    double a2() const { return omega_s / (2.0 * H); }

    /// Throws ConfigError naming every violated constraint, prefixed with
    /// `key_prefix` (e.g. "generator.").
    void validate(const char* key_prefix = "generator.") const;
};

/// Dynamic state: the three machine states plus the excitation-system
/// states integrated alongside them.
struct GeneratorState {
    double delta = 0.0;   ///< rotor angle x1 [rad]
    double domega = 0.0;  ///< speed deviation x2 = omega - omega_s [rad/s]
    double eqp = 1.0;     ///< quadrature-axis internal voltage x3 [pu]
    double avr_state = 0.0;               ///< exciter lag state (= unclamped E_f) [pu]
    std::array<double, 2> pss_states{};   ///< washout state, lead-lag state
};

/// Everything observable at the terminal bus for one machine at one
/// instant, plus the torques and field voltage acting on it.
struct TerminalQuantities {
    double V_t = 0.0;     ///< terminal voltage magnitude [pu]
    double theta_t = 0.0; ///< terminal voltage angle [rad]
    double I_t = 0.0;     ///< terminal current magnitude [pu]
    double phi_t = 0.0;   ///< terminal current angle [rad]
    double P_t = 0.0;     ///< active power [pu]
    double Q_t = 0.0;     ///< reactive power [pu]
    double T_e = 0.0;     ///< electrical air-gap torque [pu]
    double E_f = 0.0;     ///< field voltage [pu]
    double T_m = 0.0;     ///< mechanical torque [pu]
};

/// First-order static exciter with field limits plus an optional
/// washout + lead-lag stabilizer acting on the speed deviation.
struct ExciterParams {
    double K_A = 100.0;   ///< AVR gain
    double T_A = 0.05;    ///< AVR time constant [s]
    double E_f_min = 0.0; ///< field voltage floor [pu]
    double E_f_max = 5.0; ///< field voltage ceiling [pu]
    double V_ref = 0.0;   ///< voltage setpoint [pu]; back-solved at init when 0
    bool pss_enabled = true;
    double K_pss = 1.0;   ///< stabilizer gain [pu / (rad/s)]
    double T_w = 2.0;     ///< washout time constant [s]
    double T_1 = 0.25;    ///< lead time constant [s]
    double T_2 = 0.05;    ///< lag time constant [s]

    void validate(const char* key_prefix = "exciter.") const;
};

/// Time derivative of the three machine states.
struct StateDerivative {
    double d_delta = 0.0;
    double d_domega = 0.0;
    double d_eqp = 0.0;
};

/// Right-hand side of the flux-decay model:
///   d delta  = x2
///   d domega = -a1 x2 + a2 (T_m - T_e)
///   d eqp    = (1/T_d0')(-x3 - (x_d - x_d') I_t sin(x1 - phi_t) + E_f)
/// `term` must be consistent with `state` (stator residual small) and must
/// carry T_e, T_m, E_f. Pure function; throws SimulationFault on
/// non-finite inputs.
StateDerivative derivatives(const GeneratorState& state,
                            const TerminalQuantities& term,
                            const GeneratorParams& p);

/// Air-gap torque from rotor angle, internal voltage and the terminal
/// current phasor:
///   T_e = (x_q - x_d') cos(g) sin(g) I_t^2 + x3 sin(g) I_t,  g = pi/2 - x1 + phi_t.
double electrical_torque(double x1, double x3, double I_t, double phi_t,
                         const GeneratorParams& p);

/// Residual magnitude of the stator algebraic equation in the form
///   [x3 + (x_q - x_d') cos(pi/2 - x1 + phi_t) I_t] e^{j x1}
///     - (R_s + j x_q) I_t e^{j phi_t} - V_t e^{j theta_t}.
/// Zero for any consistent (state, terminal) pair.
double stator_residual(double delta, double eqp, const TerminalQuantities& term,
                       const GeneratorParams& p);

/// Field voltage seen by the machine: exciter lag state clamped to the
/// configured limits.
double field_voltage(const GeneratorState& state, const ExciterParams& ep);

/// Stabilizer contribution added to the voltage setpoint. Exactly zero
/// when the PSS is disabled.
double pss_output(const GeneratorState& state, double domega, const ExciterParams& ep);

/// Exciter-state time derivatives (AVR lag, washout, lead-lag) for frozen
/// terminal voltage and speed deviation.
struct ExciterRates {
    double d_avr = 0.0;
    double d_washout = 0.0;
    double d_leadlag = 0.0;
};
ExciterRates exciter_rates(const GeneratorState& state, double V_t, double domega,
                           const ExciterParams& ep);

/// Advances only the exciter states by one RK4 step with (V_t, domega)
/// held constant, clamps the lag state, and returns the new states plus
/// the resulting field voltage.
std::pair<GeneratorState, double> exciter_step(const GeneratorState& state,
                                               double V_t, double domega,
                                               const ExciterParams& ep, double dt);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

} // namespace sgest
