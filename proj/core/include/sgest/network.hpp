#pragma once

#include "sgest/excitation.hpp"
#include "sgest/generator.hpp"

#include <complex>
#include <cstddef>
#include <variant>
#include <vector>

namespace sgest {

/// Single machine behind a tie reactance to an infinite bus. The bus angle
/// carries the load-variation excitation: theta_inf(t) = theta_inf0 + signal.
struct SmibNetwork {
    double x_e = 0.3;       ///< tie reactance [pu]
    double V_inf = 1.0;     ///< infinite-bus voltage magnitude [pu]
    double theta_inf0 = 0.0;
    Signal theta_inf;       ///< excitation component of the bus angle

    double bus_angle(double t) const { return theta_inf0 + theta_inf.eval(t); }
    void validate(const char* key_prefix = "network.") const;
};

/// Reduced admittance matrix over the machine terminal buses of a small
/// multi-machine system (loads folded into the diagonal). Row-major n x n.
struct KronNetwork {
    std::size_t n = 0;
    std::vector<std::complex<double>> Y;

    std::complex<double> at(std::size_t i, std::size_t j) const { return Y[i * n + j]; }
    void validate(const char* key_prefix = "network.") const;
};

using NetworkModel = std::variant<SmibNetwork, KronNetwork>;

/// Solves the coupled stator + network algebra for one machine (SMIB, or a
/// Kron-reduced network with n == 1). E_f and T_m are stamped into the
/// result for downstream consumers. Throws ConfigError on singular network
/// algebra and for multi-machine Kron models, which need solve_terminal_kron.
TerminalQuantities solve_terminal(const GeneratorState& state, const NetworkModel& net,
                                  const GeneratorParams& p, double t,
                                  double E_f = 0.0, double T_m = 0.0);

/// Coupled terminal solve for all machines of a Kron-reduced network.
std::vector<TerminalQuantities> solve_terminal_kron(
    const std::vector<GeneratorState>& states, const KronNetwork& net,
    const std::vector<GeneratorParams>& params);

/// Mechanical torque input: base setpoint plus an optional excitation signal.
struct TorqueSchedule {
    double base = 0.0;
    const Signal* deviation = nullptr;

    double at(double t) const { return base + (deviation ? deviation->eval(t) : 0.0); }
};

/// Advances one machine by a fixed classical RK4 step, re-solving the
/// terminal algebra at every stage and integrating the exciter states
/// alongside the machine states. dt must lie in (0, 10 ms].
GeneratorState integrate_step(const GeneratorState& state, const NetworkModel& net,
                              const GeneratorParams& p, const ExciterParams& ep,
                              const TorqueSchedule& tm, double t, double dt);

/// Convenience overload with a constant mechanical torque.
GeneratorState integrate_step(const GeneratorState& state, const NetworkModel& net,
                              const GeneratorParams& p, const ExciterParams& ep,
                              double T_m, double t, double dt);

/// Equilibrium operating point: machine state, the torque setpoint that
/// holds it, the back-solved voltage reference, and the terminal solution.
struct Equilibrium {
    GeneratorState state;
    double T_m = 0.0;
    double V_ref = 0.0;
    TerminalQuantities term;
};

/// Computes the SMIB equilibrium hitting (P_target, V_target) at t = 0 by a
/// 1-D Newton iteration on the rotor angle with the internal voltage
/// back-solved from the terminal-voltage constraint. The exciter reference
/// is chosen so the AVR holds the point. Tolerance 1e-12, at most 50
/// iterations; throws ConfigError when the point is infeasible.
Equilibrium init_equilibrium(const SmibNetwork& net, const GeneratorParams& p,
                             const ExciterParams& ep, double P_target, double V_target);

/// Multi-machine Kron-reduced system sharing one machine/exciter design.
/// Machine 0 is the angle reference; its active power balances the system.
struct KronSystem {
    KronNetwork net;
    std::vector<GeneratorParams> params;
    std::vector<ExciterParams> exciters;

    std::size_t size() const { return net.n; }
};

struct KronEquilibrium {
    std::vector<GeneratorState> states;
    std::vector<double> T_m;
    std::vector<double> V_ref;
    std::vector<TerminalQuantities> terms;
};

/// Newton solve for the multi-machine equilibrium: matches the given active
/// powers on machines 1..n-1 and the voltage magnitudes everywhere.
KronEquilibrium init_equilibrium_kron(const KronSystem& sys,
                                      const std::vector<double>& P_target,
                                      const std::vector<double>& V_target);

/// RK4 step of the whole Kron-reduced system (all machine + exciter states).
std::vector<GeneratorState> integrate_step_kron(const std::vector<GeneratorState>& states,
                                                const KronSystem& sys,
                                                const std::vector<TorqueSchedule>& tm,
                                                double t, double dt);

} // namespace sgest
