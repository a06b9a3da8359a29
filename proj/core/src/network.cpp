#include "sgest/network.hpp"

#include "sgest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sgest {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = 1.5707963267948966192;

// Dense Gaussian elimination with partial pivoting, in place. A is n x n
// row-major, b length n; solution overwrites b. Systems here are tiny
// (2n x 2n for a handful of machines).
void solve_dense(std::vector<double>& A, std::vector<double>& b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(A[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(A[r * n + col]);
            if (v > best) { best = v; piv = r; }
        }
        if (best < 1e-12)
            throw ConfigError("network: singular network algebra");
        if (piv != col) {
            for (std::size_t c = col; c < n; ++c)
                std::swap(A[piv * n + c], A[col * n + c]);
            std::swap(b[piv], b[col]);
        }
        const double inv = 1.0 / A[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = A[r * n + col] * inv;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c)
                A[r * n + c] -= f * A[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t rr = n; rr-- > 0;) {
        double s = b[rr];
        for (std::size_t c = rr + 1; c < n; ++c) s -= A[rr * n + c] * b[c];
        b[rr] = s / A[rr * n + rr];
    }
}

// Assembles the observable terminal quantities from the dq solution of one
// machine. Angles are reported in the network frame, wrapped to (-pi, pi].
TerminalQuantities assemble_terminal(double delta, double eqp, double I_d, double I_q,
                                     double V_d, double V_q, const GeneratorParams& p) {
    TerminalQuantities q;
    const double rot = delta - kHalfPi;
    q.I_t = std::hypot(I_d, I_q);
    q.V_t = std::hypot(V_d, V_q);
    q.theta_t = wrap_angle(rot + std::atan2(V_q, V_d));
    q.phi_t = (q.I_t > 1e-12) ? wrap_angle(rot + std::atan2(I_q, I_d)) : q.theta_t;
    q.P_t = V_d * I_d + V_q * I_q;
    q.Q_t = V_q * I_d - V_d * I_q;
    q.T_e = (p.x_q - p.x_dp) * I_d * I_q + eqp * I_q;
    return q;
}

struct DqSolution {
    double I_d, I_q, V_d, V_q;
};

// Closed-form dq solve of the SMIB algebra for a given machine state.
DqSolution solve_smib_dq(double delta, double eqp, const SmibNetwork& net,
                         const GeneratorParams& p, double bus_angle) {
    const double E_bd = net.V_inf * std::sin(delta - bus_angle);
    const double E_bq = net.V_inf * std::cos(delta - bus_angle);
    const double a = p.R_s, b = -(p.x_q + net.x_e);
    const double c = p.x_dp + net.x_e, d = p.R_s;
    const double det = a * d - b * c;
    if (std::abs(det) < 1e-12)
        throw ConfigError("network: singular network algebra (x_e + machine reactance ~ 0)");
    const double e = -E_bd;
    const double f = eqp - E_bq;
    DqSolution s;
    s.I_d = (e * d - b * f) / det;
    s.I_q = (a * f - c * e) / det;
    s.V_d = E_bd - net.x_e * s.I_q;
    s.V_q = E_bq + net.x_e * s.I_d;
    return s;
}

} // namespace

void SmibNetwork::validate(const char* key_prefix) const {
    std::ostringstream bad;
    if (!(x_e > 0.0)) bad << key_prefix << "x_e: must be > 0\n";
    if (!(V_inf > 0.0)) bad << key_prefix << "V_inf: must be > 0\n";
    const std::string msg = bad.str();
    if (!msg.empty()) throw ConfigError(msg);
}

void KronNetwork::validate(const char* key_prefix) const {
    std::ostringstream bad;
    if (n == 0) bad << key_prefix << "n: must be >= 1\n";
    if (Y.size() != n * n) bad << key_prefix << "Y: must hold n*n entries\n";
    if (Y.size() == n * n) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (std::abs(at(i, j) - at(j, i)) > 1e-9) {
                    bad << key_prefix << "Y: must be symmetric\n";
                    i = n;
                    break;
                }
    }
    const std::string msg = bad.str();
    if (!msg.empty()) throw ConfigError(msg);
}

std::vector<TerminalQuantities> solve_terminal_kron(
    const std::vector<GeneratorState>& states, const KronNetwork& net,
    const std::vector<GeneratorParams>& params) {
    const std::size_t n = net.n;
    if (states.size() != n || params.size() != n)
        throw ConfigError("network: state/parameter count does not match Y dimension");

    // Unknowns: terminal voltages (Re, Im) per machine in the network frame.
    // Machine i injects I_i = G_i V_i + h_i (stator algebra rotated out of
    // the dq frame); the network demands sum_j Y_ij V_j = I_i.
    const std::size_t m = 2 * n;
    std::vector<double> A(m * m, 0.0), b(m, 0.0);
    std::vector<std::array<double, 4>> G(n);
    std::vector<std::array<double, 2>> h(n);

    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = params[i];
        const double detM = p.R_s * p.R_s + p.x_q * p.x_dp;
        // Minv = 1/detM [[R_s, x_q], [-x_dp, R_s]]
        const double mi00 = p.R_s / detM, mi01 = p.x_q / detM;
        const double mi10 = -p.x_dp / detM, mi11 = p.R_s / detM;
        const double g = states[i].delta - kHalfPi;
        const double cg = std::cos(g), sg = std::sin(g);
        // G_i = Rot(g) * (-Minv) * Rot(-g)
        const double a00 = -(cg * mi00 - sg * mi10), a01 = -(cg * mi01 - sg * mi11);
        const double a10 = -(sg * mi00 + cg * mi10), a11 = -(sg * mi01 + cg * mi11);
        G[i] = {a00 * cg - a01 * sg, a00 * sg + a01 * cg,
                a10 * cg - a11 * sg, a10 * sg + a11 * cg};
        const double hd = mi01 * states[i].eqp;
        const double hq = mi11 * states[i].eqp;
        h[i] = {cg * hd - sg * hq, sg * hd + cg * hq};
    }

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto y = net.at(i, j);
            A[(2 * i) * m + 2 * j] += y.real();
            A[(2 * i) * m + 2 * j + 1] += -y.imag();
            A[(2 * i + 1) * m + 2 * j] += y.imag();
            A[(2 * i + 1) * m + 2 * j + 1] += y.real();
        }
        A[(2 * i) * m + 2 * i] -= G[i][0];
        A[(2 * i) * m + 2 * i + 1] -= G[i][1];
        A[(2 * i + 1) * m + 2 * i] -= G[i][2];
        A[(2 * i + 1) * m + 2 * i + 1] -= G[i][3];
        b[2 * i] = h[i][0];
        b[2 * i + 1] = h[i][1];
    }

    solve_dense(A, b, m);

    std::vector<TerminalQuantities> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double vre = b[2 * i], vim = b[2 * i + 1];
        const double ire = G[i][0] * vre + G[i][1] * vim + h[i][0];
        const double iim = G[i][2] * vre + G[i][3] * vim + h[i][1];
        const double g = states[i].delta - kHalfPi;
        const double cg = std::cos(g), sg = std::sin(g);
        const double V_d = cg * vre + sg * vim, V_q = -sg * vre + cg * vim;
        const double I_d = cg * ire + sg * iim, I_q = -sg * ire + cg * iim;
        out[i] = assemble_terminal(states[i].delta, states[i].eqp, I_d, I_q, V_d, V_q,
                                   params[i]);
    }
    return out;
}

TerminalQuantities solve_terminal(const GeneratorState& state, const NetworkModel& net,
                                  const GeneratorParams& p, double t,
                                  double E_f, double T_m) {
    TerminalQuantities q;
    if (const auto* smib = std::get_if<SmibNetwork>(&net)) {
        const auto s = solve_smib_dq(state.delta, state.eqp, *smib, p, smib->bus_angle(t));
        q = assemble_terminal(state.delta, state.eqp, s.I_d, s.I_q, s.V_d, s.V_q, p);
    } else {
        const auto& kron = std::get<KronNetwork>(net);
        if (kron.n != 1)
            throw ConfigError(
                "network: multi-machine Kron model requires the coupled solver "
                "(solve_terminal_kron)");
        q = solve_terminal_kron({state}, kron, {p})[0];
    }
    q.E_f = E_f;
    q.T_m = T_m;
    return q;
}

namespace {

// Full continuous state of one machine + exciter, as integrated.
struct Rates {
    StateDerivative m;
    ExciterRates e;
};

GeneratorState advance(const GeneratorState& s, const Rates& r, double h) {
    GeneratorState out = s;
    out.delta += h * r.m.d_delta;
    out.domega += h * r.m.d_domega;
    out.eqp += h * r.m.d_eqp;
    out.avr_state += h * r.e.d_avr;
    out.pss_states[0] += h * r.e.d_washout;
    out.pss_states[1] += h * r.e.d_leadlag;
    return out;
}

GeneratorState combine_rk4(const GeneratorState& s, const Rates& k1, const Rates& k2,
                           const Rates& k3, const Rates& k4, double dt) {
    auto mix = [&](double a, double b, double c, double d) {
        return dt / 6.0 * (a + 2.0 * b + 2.0 * c + d);
    };
    GeneratorState out = s;
    out.delta += mix(k1.m.d_delta, k2.m.d_delta, k3.m.d_delta, k4.m.d_delta);
    out.domega += mix(k1.m.d_domega, k2.m.d_domega, k3.m.d_domega, k4.m.d_domega);
    out.eqp += mix(k1.m.d_eqp, k2.m.d_eqp, k3.m.d_eqp, k4.m.d_eqp);
    out.avr_state += mix(k1.e.d_avr, k2.e.d_avr, k3.e.d_avr, k4.e.d_avr);
    out.pss_states[0] += mix(k1.e.d_washout, k2.e.d_washout, k3.e.d_washout, k4.e.d_washout);
    out.pss_states[1] += mix(k1.e.d_leadlag, k2.e.d_leadlag, k3.e.d_leadlag, k4.e.d_leadlag);
    return out;
}

void check_step_result(const GeneratorState& s, double t) {
    const bool finite = std::isfinite(s.delta) && std::isfinite(s.domega) &&
                        std::isfinite(s.eqp) && std::isfinite(s.avr_state) &&
                        std::isfinite(s.pss_states[0]) && std::isfinite(s.pss_states[1]);
    if (!finite) throw SimulationFault("simulation state became non-finite", t);
    if (!(s.eqp > 0.0))
        throw SimulationFault("internal voltage x3 left the physical region (eqp <= 0)", t);
}

void check_dt(double dt) {
    if (!(dt > 0.0) || dt > 0.010 + 1e-15)
        throw ConfigError("sim.dt: integrator step must lie in (0, 10 ms]");
}

} // namespace

GeneratorState integrate_step(const GeneratorState& state, const NetworkModel& net,
                              const GeneratorParams& p, const ExciterParams& ep,
                              const TorqueSchedule& tm, double t, double dt) {
    check_dt(dt);
    auto rates = [&](const GeneratorState& s, double ts) {
        const double ef = field_voltage(s, ep);
        const TerminalQuantities term = solve_terminal(s, net, p, ts, ef, tm.at(ts));
        return Rates{derivatives(s, term, p), exciter_rates(s, term.V_t, s.domega, ep)};
    };
    const Rates k1 = rates(state, t);
    const Rates k2 = rates(advance(state, k1, dt / 2.0), t + dt / 2.0);
    const Rates k3 = rates(advance(state, k2, dt / 2.0), t + dt / 2.0);
    const Rates k4 = rates(advance(state, k3, dt), t + dt);
    GeneratorState out = combine_rk4(state, k1, k2, k3, k4, dt);
    out.avr_state = std::clamp(out.avr_state, ep.E_f_min, ep.E_f_max);
    check_step_result(out, t + dt);
    return out;
}

GeneratorState integrate_step(const GeneratorState& state, const NetworkModel& net,
                              const GeneratorParams& p, const ExciterParams& ep,
                              double T_m, double t, double dt) {
    return integrate_step(state, net, p, ep, TorqueSchedule{T_m, nullptr}, t, dt);
}

std::vector<GeneratorState> integrate_step_kron(const std::vector<GeneratorState>& states,
                                                const KronSystem& sys,
                                                const std::vector<TorqueSchedule>& tm,
                                                double t, double dt) {
    check_dt(dt);
    const std::size_t n = sys.size();
    if (states.size() != n || tm.size() != n)
        throw ConfigError("network: state/torque count does not match Y dimension");

    auto rates = [&](const std::vector<GeneratorState>& ss, double ts) {
        const auto terms = solve_terminal_kron(ss, sys.net, sys.params);
        std::vector<Rates> r(n);
        for (std::size_t i = 0; i < n; ++i) {
            TerminalQuantities term = terms[i];
            term.E_f = field_voltage(ss[i], sys.exciters[i]);
            term.T_m = tm[i].at(ts);
            r[i] = Rates{derivatives(ss[i], term, sys.params[i]),
                         exciter_rates(ss[i], term.V_t, ss[i].domega, sys.exciters[i])};
        }
        return r;
    };
    auto advance_all = [&](const std::vector<GeneratorState>& ss,
                           const std::vector<Rates>& r, double h) {
        std::vector<GeneratorState> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = advance(ss[i], r[i], h);
        return out;
    };

    const auto k1 = rates(states, t);
    const auto k2 = rates(advance_all(states, k1, dt / 2.0), t + dt / 2.0);
    const auto k3 = rates(advance_all(states, k2, dt / 2.0), t + dt / 2.0);
    const auto k4 = rates(advance_all(states, k3, dt), t + dt);

    std::vector<GeneratorState> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = combine_rk4(states[i], k1[i], k2[i], k3[i], k4[i], dt);
        out[i].avr_state =
            std::clamp(out[i].avr_state, sys.exciters[i].E_f_min, sys.exciters[i].E_f_max);
        check_step_result(out[i], t + dt);
    }
    return out;
}

namespace {

struct SmibOperatingPoint {
    double I_d, I_q, V_d, V_q, eqp, P, V_t;
    bool feasible;
};

// For a trial rotor angle, back-solves the internal voltage from the
// terminal-voltage magnitude constraint and returns the operating point.
SmibOperatingPoint smib_point_at(double delta, const SmibNetwork& net,
                                 const GeneratorParams& p, double V_target) {
    SmibOperatingPoint op{};
    const double E_bd = net.V_inf * std::sin(delta - net.theta_inf0);
    const double E_bq = net.V_inf * std::cos(delta - net.theta_inf0);
    const double xq_tot = p.x_q + net.x_e;
    // I_q is affine in I_d through the d-axis stator equation; the terminal
    // voltage components then are V_d = a0 + a1 I_d, V_q = b0 + b1 I_d.
    const double a0 = E_bd * p.x_q / xq_tot;
    const double a1 = -net.x_e * p.R_s / xq_tot;
    const double b0 = E_bq;
    const double b1 = net.x_e;
    const double qa = a1 * a1 + b1 * b1;
    const double qb = 2.0 * (a0 * a1 + b0 * b1);
    const double qc = a0 * a0 + b0 * b0 - V_target * V_target;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0 || qa <= 0.0) {
        op.feasible = false;
        return op;
    }
    const double r1 = (-qb + std::sqrt(disc)) / (2.0 * qa);
    const double r2 = (-qb - std::sqrt(disc)) / (2.0 * qa);
    op.I_d = (std::abs(r1) <= std::abs(r2)) ? r1 : r2;
    op.I_q = (p.R_s * op.I_d + E_bd) / xq_tot;
    op.V_d = a0 + a1 * op.I_d;
    op.V_q = b0 + b1 * op.I_d;
    op.eqp = E_bq + (p.x_dp + net.x_e) * op.I_d + p.R_s * op.I_q;
    op.P = op.V_d * op.I_d + op.V_q * op.I_q;
    op.V_t = std::hypot(op.V_d, op.V_q);
    op.feasible = true;
    return op;
}

} // namespace

Equilibrium init_equilibrium(const SmibNetwork& net, const GeneratorParams& p,
                             const ExciterParams& ep, double P_target, double V_target) {
    p.validate();
    net.validate();
    if (!(V_target > 0.0))
        throw ConfigError("network.V_target: must be > 0");

    double delta = net.theta_inf0 + 0.2;
    double residual = 0.0;
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
        const auto op = smib_point_at(delta, net, p, V_target);
        if (!op.feasible)
            throw ConfigError("network: operating point infeasible (V_target unreachable)");
        residual = op.P - P_target;
        // the stated tolerance is 1e-12; Newton is quadratic here, so one
        // extra iteration lands near machine precision and keeps the
        // equilibrium an honest fixed point of the integrator
        if (std::abs(residual) <= 1e-14) {
            converged = true;
            break;
        }
        const double h = 1e-7;
        const auto hi = smib_point_at(delta + h, net, p, V_target);
        const auto lo = smib_point_at(delta - h, net, p, V_target);
        if (!hi.feasible || !lo.feasible)
            throw ConfigError("network: operating point infeasible near the solution");
        const double slope = (hi.P - lo.P) / (2.0 * h);
        if (std::abs(slope) < 1e-9)
            throw ConfigError("network: operating point infeasible (dP/ddelta ~ 0)");
        double step = -residual / slope;
        step = std::clamp(step, -0.3, 0.3);
        delta += step;
    }
    if (!converged)
        throw ConfigError("network: equilibrium iteration did not converge in 50 steps");

    const auto op = smib_point_at(delta, net, p, V_target);
    if (!(op.eqp > 0.0))
        throw ConfigError("network: operating point yields non-physical internal voltage");

    Equilibrium eq;
    eq.state.delta = delta;
    eq.state.domega = 0.0;
    eq.state.eqp = op.eqp;
    const double E_f = op.eqp + (p.x_d - p.x_dp) * op.I_d;
    if (!(E_f > ep.E_f_min && E_f < ep.E_f_max))
        throw ConfigError("exciter: equilibrium field voltage violates the configured limits");
    eq.state.avr_state = E_f;
    eq.state.pss_states = {0.0, 0.0};
    eq.V_ref = op.V_t + E_f / ep.K_A;

    NetworkModel nm = net;
    TerminalQuantities term = solve_terminal(eq.state, nm, p, 0.0, E_f, 0.0);
    eq.T_m = term.T_e;
    term.T_m = eq.T_m;
    eq.term = term;
    return eq;
}

KronEquilibrium init_equilibrium_kron(const KronSystem& sys,
                                      const std::vector<double>& P_target,
                                      const std::vector<double>& V_target) {
    const std::size_t n = sys.size();
    sys.net.validate();
    if (P_target.size() != n || V_target.size() != n)
        throw ConfigError("network: target vectors must match Y dimension");
    for (std::size_t i = 0; i < n; ++i) sys.params[i].validate();

    // Unknowns: delta_1..delta_{n-1} (machine 0 is the reference) and
    // eqp_0..eqp_{n-1}. Residuals: P on machines 1.., V everywhere.
    const std::size_t m = 2 * n - 1;
    std::vector<double> u(m, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) u[i] = 0.05;
    for (std::size_t i = 0; i < n; ++i) u[n - 1 + i] = 1.05;

    auto build_states = [&](const std::vector<double>& uu) {
        std::vector<GeneratorState> ss(n);
        ss[0].delta = 0.0;
        for (std::size_t i = 1; i < n; ++i) ss[i].delta = uu[i - 1];
        for (std::size_t i = 0; i < n; ++i) ss[i].eqp = uu[n - 1 + i];
        return ss;
    };
    auto residual_of = [&](const std::vector<double>& uu) {
        const auto terms = solve_terminal_kron(build_states(uu), sys.net, sys.params);
        std::vector<double> r(m);
        for (std::size_t i = 1; i < n; ++i) r[i - 1] = terms[i].P_t - P_target[i];
        for (std::size_t i = 0; i < n; ++i) r[n - 1 + i] = terms[i].V_t - V_target[i];
        return r;
    };

    bool converged = false;
    for (int it = 0; it < 50; ++it) {
        auto r = residual_of(u);
        double worst = 0.0;
        for (double v : r) worst = std::max(worst, std::abs(v));
        if (worst <= 1e-12) {
            converged = true;
            break;
        }
        std::vector<double> J(m * m);
        const double h = 1e-7;
        for (std::size_t c = 0; c < m; ++c) {
            auto up = u, dn = u;
            up[c] += h;
            dn[c] -= h;
            const auto rp = residual_of(up);
            const auto rm = residual_of(dn);
            for (std::size_t rr = 0; rr < m; ++rr)
                J[rr * m + c] = (rp[rr] - rm[rr]) / (2.0 * h);
        }
        std::vector<double> rhs = r;
        solve_dense(J, rhs, m);
        double norm = 0.0;
        for (double v : rhs) norm = std::max(norm, std::abs(v));
        const double damp = norm > 0.5 ? 0.5 / norm : 1.0;
        for (std::size_t c = 0; c < m; ++c) u[c] -= damp * rhs[c];
    }
    if (!converged)
        throw ConfigError("network: multi-machine equilibrium did not converge in 50 steps");

    KronEquilibrium eq;
    eq.states = build_states(u);
    eq.terms = solve_terminal_kron(eq.states, sys.net, sys.params);
    eq.T_m.resize(n);
    eq.V_ref.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = sys.params[i];
        const auto& t = eq.terms[i];
        const double I_d = t.I_t * std::sin(eq.states[i].delta - t.phi_t);
        const double E_f = eq.states[i].eqp + (p.x_d - p.x_dp) * I_d;
        if (!(E_f > sys.exciters[i].E_f_min && E_f < sys.exciters[i].E_f_max))
            throw ConfigError("exciter: equilibrium field voltage violates the configured limits");
        eq.states[i].avr_state = E_f;
        eq.states[i].pss_states = {0.0, 0.0};
        eq.V_ref[i] = t.V_t + E_f / sys.exciters[i].K_A;
        eq.T_m[i] = t.T_e;
        eq.terms[i].E_f = E_f;
        eq.terms[i].T_m = eq.T_m[i];
    }
    return eq;
}

} // namespace sgest
