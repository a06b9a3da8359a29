#include "sgest/generator.hpp"

#include "sgest/errors.hpp"

#include <algorithm>
#include <sstream>

namespace sgest {

namespace {

void require(bool ok, std::ostringstream& out, const char* prefix, const char* msg) {
    if (!ok) out << prefix << msg << "\n";
}

} // namespace

void GeneratorParams::validate(const char* key_prefix) const {
    std::ostringstream bad;
    require(x_d > x_dp, bad, key_prefix, "x_d: must satisfy x_d > x_dp");
    require(x_dp > 0.0, bad, key_prefix, "x_dp: must be > 0");
    require(x_q > 0.0, bad, key_prefix, "x_q: must be > 0");
    require(R_s >= 0.0, bad, key_prefix, "R_s: must be >= 0");
    require(H > 0.0, bad, key_prefix, "H: must be > 0");
    require(D >= 0.0, bad, key_prefix, "D: must be >= 0");
    require(T_d0p > 0.0, bad, key_prefix, "T_d0p: must be > 0");
    require(omega_s > 0.0, bad, key_prefix, "omega_s: must be > 0");
    const std::string msg = bad.str();
    if (!msg.empty()) throw ConfigError(msg);
}

void ExciterParams::validate(const char* key_prefix) const {
    std::ostringstream bad;
    require(T_A > 0.0, bad, key_prefix, "T_A: must be > 0");
    require(T_w > 0.0, bad, key_prefix, "T_w: must be > 0");
    require(T_2 > 0.0, bad, key_prefix, "T_2: must be > 0");
    require(E_f_min < E_f_max, bad, key_prefix, "E_f_min: must be < E_f_max");
    const std::string msg = bad.str();
    if (!msg.empty()) throw ConfigError(msg);
}

double wrap_angle(double a) {
    constexpr double two_pi = 6.283185307179586477;
    double w = std::remainder(a, two_pi);
    if (w <= -3.14159265358979323846) w += two_pi;
    return w;
}

StateDerivative derivatives(const GeneratorState& state,
                            const TerminalQuantities& term,
                            const GeneratorParams& p) {
    if (!std::isfinite(state.delta) || !std::isfinite(state.domega) ||
        !std::isfinite(state.eqp) || !std::isfinite(term.T_e) ||
        !std::isfinite(term.T_m) || !std::isfinite(term.E_f)) {
        throw SimulationFault("derivatives: non-finite input", 0.0);
    }
    StateDerivative d;
    d.d_delta = state.domega;
    d.d_domega = -p.a1() * state.domega + p.a2() * (term.T_m - term.T_e);
    d.d_eqp = (-state.eqp -
               (p.x_d - p.x_dp) * term.I_t * std::sin(state.delta - term.phi_t) +
               term.E_f) / p.T_d0p;
    return d;
}

double electrical_torque(double x1, double x3, double I_t, double phi_t,
                         const GeneratorParams& p) {
    const double g = 1.5707963267948966192 - x1 + phi_t;
    const double cg = std::cos(g);
    const double sg = std::sin(g);
    return (p.x_q - p.x_dp) * cg * sg * I_t * I_t + x3 * sg * I_t;
}

double stator_residual(double delta, double eqp, const TerminalQuantities& term,
                       const GeneratorParams& p) {
    const std::complex<double> j(0.0, 1.0);
    const double g = 1.5707963267948966192 - delta + term.phi_t;
    const std::complex<double> lhs =
        (eqp + (p.x_q - p.x_dp) * std::cos(g) * term.I_t) * std::exp(j * delta);
    const std::complex<double> rhs =
        (p.R_s + j * p.x_q) * term.I_t * std::exp(j * term.phi_t) +
        term.V_t * std::exp(j * term.theta_t);
    return std::abs(lhs - rhs);
}

double field_voltage(const GeneratorState& state, const ExciterParams& ep) {
    return std::clamp(state.avr_state, ep.E_f_min, ep.E_f_max);
}

double pss_output(const GeneratorState& state, double domega, const ExciterParams& ep) {
    if (!ep.pss_enabled) return 0.0;
    const double washed = ep.K_pss * (domega - state.pss_states[0]);
    return state.pss_states[1] + (ep.T_1 / ep.T_2) * (washed - state.pss_states[1]);
}

ExciterRates exciter_rates(const GeneratorState& state, double V_t, double domega,
                           const ExciterParams& ep) {
    ExciterRates r;
    const double v_pss = pss_output(state, domega, ep);
    r.d_avr = (-state.avr_state + ep.K_A * (ep.V_ref - V_t + v_pss)) / ep.T_A;
    if (ep.pss_enabled) {
        const double washed = ep.K_pss * (domega - state.pss_states[0]);
        r.d_washout = (domega - state.pss_states[0]) / ep.T_w;
        r.d_leadlag = (washed - state.pss_states[1]) / ep.T_2;
    }
    return r;
}

std::pair<GeneratorState, double> exciter_step(const GeneratorState& state,
                                               double V_t, double domega,
                                               const ExciterParams& ep, double dt) {
    if (!(dt > 0.0)) throw ConfigError("exciter_step: dt must be > 0");

    auto plus = [&](const GeneratorState& s, const ExciterRates& r, double h) {
        GeneratorState out = s;
        out.avr_state += h * r.d_avr;
        out.pss_states[0] += h * r.d_washout;
        out.pss_states[1] += h * r.d_leadlag;
        return out;
    };

    const ExciterRates k1 = exciter_rates(state, V_t, domega, ep);
    const ExciterRates k2 = exciter_rates(plus(state, k1, dt / 2.0), V_t, domega, ep);
    const ExciterRates k3 = exciter_rates(plus(state, k2, dt / 2.0), V_t, domega, ep);
    const ExciterRates k4 = exciter_rates(plus(state, k3, dt), V_t, domega, ep);

    GeneratorState out = state;
    out.avr_state += dt / 6.0 * (k1.d_avr + 2.0 * k2.d_avr + 2.0 * k3.d_avr + k4.d_avr);
    out.pss_states[0] += dt / 6.0 * (k1.d_washout + 2.0 * k2.d_washout +
                                     2.0 * k3.d_washout + k4.d_washout);
    out.pss_states[1] += dt / 6.0 * (k1.d_leadlag + 2.0 * k2.d_leadlag +
                                     2.0 * k3.d_leadlag + k4.d_leadlag);
    out.avr_state = std::clamp(out.avr_state, ep.E_f_min, ep.E_f_max);
    return {out, field_voltage(out, ep)};
}

} // namespace sgest
