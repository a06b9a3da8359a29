#include "sgest/analysis.hpp"

#include "sgest/errors.hpp"

#include <algorithm>
#include <cmath>

namespace sgest {

namespace {

constexpr double kDegeneracyThreshold = 1e-6;

double sq(double v) { return v * v; }

} // namespace

BoundReport algebraic_bounds(const NoiseBounds& noise, const OperatingEnvelope& env,
                             const GeneratorParams& p) {
    const double zq = std::hypot(p.R_s, p.x_q);
    const double saliency = std::abs(p.x_q - p.x_dp);

    // Disturbance magnitudes of the two measured phasors entering psi:
    // magnitude-channel noise acts along each component phasor, angle-channel
    // noise perpendicular to it. Because the component phasors are not
    // aligned with psi itself, all four magnitudes can rotate psi, so both
    // sums enter the argument bound.
    const double parallel = noise.w_max[0] + zq * noise.w_max[2];
    const double tangential = env.V_t_max * noise.w_max[1] + zq * env.I_t_max * noise.w_max[3];

    if (env.psi_nom_min - parallel < kDegeneracyThreshold)
        throw DegenerateOperatingPoint(
            "analysis: |psi| can reach the degeneracy threshold under the noise bounds");

    BoundReport rep;
    rep.w_psi_max = parallel + tangential;
    rep.w_x1_max = (parallel + tangential) / env.psi_nom_min;
    rep.w_x3_max = saliency * (noise.w_max[2] +
                               (env.I_t_max + noise.w_max[2]) * (rep.w_x1_max + noise.w_max[3])) +
                   rep.w_psi_max;
    rep.w_Te_max =
        0.5 * saliency *
            (2.0 * env.I_t_max * noise.w_max[2] + sq(noise.w_max[2]) +
             2.0 * (noise.w_max[3] + rep.w_x1_max) * sq(env.I_t_max + noise.w_max[2])) +
        env.x3_max * noise.w_max[2] + env.I_t_max * rep.w_x3_max +
        rep.w_x3_max * noise.w_max[2] +
        (env.x3_max + rep.w_x3_max) * (env.I_t_max + noise.w_max[2]) *
            (rep.w_x1_max + noise.w_max[3]);
    return rep;
}

PeReport pe_metric(const std::vector<double>& delta_series, double dt, double window_T,
                   double epsilon_pe) {
    if (!(dt > 0.0) || !(window_T > 0.0))
        throw ConfigError("analysis: pe_metric needs positive dt and window");
    const auto w = static_cast<std::size_t>(std::round(window_T / dt));
    if (w < 1 || delta_series.size() < w + 1)
        throw ConfigError("analysis: series shorter than the PE window");

    std::vector<double> prefix(delta_series.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < delta_series.size(); ++i) {
        acc += sq(delta_series[i]);
        prefix[i] = acc;
    }
    auto window_integral = [&](std::size_t i) {
        // trapezoid: half weights at both window ends
        const double sum = prefix[i + w] - (i == 0 ? 0.0 : prefix[i - 1]);
        return dt * (sum - 0.5 * sq(delta_series[i]) - 0.5 * sq(delta_series[i + w]));
    };

    PeReport rep;
    rep.window_T = w * dt;
    double min_i = std::numeric_limits<double>::infinity();
    double mean = 0.0;
    const std::size_t n_windows = delta_series.size() - w;
    for (std::size_t i = 0; i < n_windows; ++i) {
        const double v = window_integral(i);
        min_i = std::min(min_i, v);
        mean += v;
    }
    mean /= static_cast<double>(n_windows);
    rep.min_integral = min_i;
    rep.mean_integral = mean;
    rep.epsilon = epsilon_pe > 0.0 ? epsilon_pe : 0.01 * mean;
    rep.pe_satisfied = rep.min_integral >= rep.epsilon && rep.epsilon > 0.0;
    return rep;
}

double spectral_norm_2x2(const std::array<double, 4>& m) {
    const double f = sq(m[0]) + sq(m[1]) + sq(m[2]) + sq(m[3]);
    const double det = m[0] * m[3] - m[1] * m[2];
    const double inner = std::max(0.0, f * f - 4.0 * det * det);
    return std::sqrt(0.5 * (f + std::sqrt(inner)));
}

DetPerturbationCheck determinant_perturbation_check(const std::array<double, 4>& Xi_nom,
                                                    const std::array<double, 4>& Xi) {
    DetPerturbationCheck c;
    const double det_nom = Xi_nom[0] * Xi_nom[3] - Xi_nom[1] * Xi_nom[2];
    const double det = Xi[0] * Xi[3] - Xi[1] * Xi[2];
    c.lhs = std::abs(det - det_nom);
    const std::array<double, 4> diff{Xi[0] - Xi_nom[0], Xi[1] - Xi_nom[1],
                                     Xi[2] - Xi_nom[2], Xi[3] - Xi_nom[3]};
    c.rhs = 2.0 * spectral_norm_2x2(diff) *
            std::max(spectral_norm_2x2(Xi_nom), spectral_norm_2x2(Xi));
    c.ok = c.lhs <= c.rhs * (1.0 + 1e-12) + 1e-307;
    return c;
}

BoundReport run_statistics(const RunLog& run, const std::array<double, 2>& theta_true,
                           const EstimatorConfig& cfg, double settling_fraction,
                           const RunLog* nominal, BoundReport base) {
    const std::size_t n = run.size();
    if (n == 0) throw ConfigError("analysis: empty run log");
    if (!(settling_fraction >= 0.0 && settling_fraction < 1.0))
        throw ConfigError("analysis: settling_fraction must lie in [0, 1)");
    const auto start = static_cast<std::size_t>(settling_fraction * static_cast<double>(n));
    if (start >= n) throw ConfigError("analysis: empty post-settling window");

    BoundReport rep = base;
    rep.settling_time = run.t[start];
    rep.finite = !run.diverged;
    rep.fault_time = run.fault_time;

    std::array<double, 5> sup{}, sumsq{};
    const std::size_t rows = std::min({n, run.x1_hat.size(), run.x2_hat.size(),
                                       run.x3_hat.size(), run.theta1_hat.size(),
                                       run.theta2_hat.size()});
    for (std::size_t i = start; i < rows; ++i) {
        const std::array<double, 5> err{
            run.x1_hat[i] - run.delta[i], run.x2_hat[i] - run.domega[i],
            run.x3_hat[i] - run.eqp[i], run.theta1_hat[i] - theta_true[0],
            run.theta2_hat[i] - theta_true[1]};
        for (std::size_t c = 0; c < 5; ++c) {
            if (!std::isfinite(err[c])) {
                if (rep.finite) rep.fault_time = run.t[i];
                rep.finite = false;
                continue;
            }
            sup[c] = std::max(sup[c], std::abs(err[c]));
            sumsq[c] += sq(err[c]);
        }
    }
    const double count = static_cast<double>(rows > start ? rows - start : 1);
    for (std::size_t c = 0; c < 5; ++c) {
        rep.sup_err[c] = sup[c];
        rep.rms_err[c] = std::sqrt(sumsq[c] / count);
    }

    if (nominal != nullptr) {
        if (nominal->size() != n)
            throw ConfigError("analysis: paired runs must have equal length");
        double rho = 0.0, zeta = 0.0, w_delta_env = 0.0;
        const std::size_t m = std::min({run.records.size(), nominal->records.size(),
                                        run.samples.size(), run.Te_hat.size()});
        for (std::size_t i = 0; i < m; ++i) {
            const double w1 = run.samples[i].y1 - run.terms[i].V_t;
            const double w_tm = run.samples[i].Tm_hat - run.terms[i].T_m;
            const double w_te = run.Te_hat[i] - run.terms[i].T_e;
            const double d_nom = nominal->records[i].Delta;
            const double w_d = run.records[i].Delta - d_nom;

            // ||Lambda||_2 from the nonzero 2x2 block of Lambda' Lambda.
            const double a = -cfg.k * w1;
            const double b = w_tm - w_te;
            const double cgain = 2.0 * d_nom * w_d + sq(w_d);
            const double c1 = -cfg.gamma1 * cgain;
            const double c2 = -cfg.gamma2 * cgain;
            const double pterm = sq(a) + sq(c1);
            const double qterm = sq(b) + sq(c2);
            const double half = 0.5 * (pterm - qterm);
            const double lmax =
                0.5 * (pterm + qterm) + std::sqrt(sq(half) + sq(a * b));
            rho = std::max(rho, std::sqrt(std::max(0.0, lmax)));

            const double wz1 = run.records[i].calZ[0] - nominal->records[i].calZ[0];
            const double wz2 = run.records[i].calZ[1] - nominal->records[i].calZ[1];
            const double dg = d_nom * w_d + sq(w_d);
            const double d1 =
                theta_true[1] * (w_tm - w_te) - (theta_true[0] + cfg.k) * cfg.k * w1;
            const double d2 = -cfg.gamma1 * (dg * theta_true[0] - wz1 * (d_nom + w_d));
            const double d3 = -cfg.gamma2 * (dg * theta_true[1] - wz2 * (d_nom + w_d));
            zeta = std::max(zeta, std::sqrt(sq(d1) + sq(d2) + sq(d3)));

            const auto chk =
                determinant_perturbation_check(nominal->records[i].Xi, run.records[i].Xi);
            w_delta_env = std::max(w_delta_env, chk.rhs);
        }
        rep.rho = rho;
        rep.zeta = zeta;
        rep.w_Delta_max = w_delta_env;
    }
    return rep;
}

} // namespace sgest
