#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sgest/analysis.hpp"
#include "sgest/errors.hpp"
#include "sgest/pipeline.hpp"
#include "sgest/rng.hpp"
#include "sgest/scenario.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace sgest;
using sgest::test::default_params;

namespace {

NoiseBounds bounds_of(double w1, double w2, double w3, double w4) {
    NoiseBounds nb;
    nb.w_max = {w1, w2, w3, w4, 0.0, 0.0};
    return nb;
}

OperatingEnvelope envelope() {
    OperatingEnvelope env;
    env.V_t_max = 1.05;
    env.I_t_max = 0.9;
    env.x3_max = 1.1;
    env.psi_nom_min = 1.5;
    return env;
}

} // namespace

TEST_CASE("algebraic bounds vanish with the noise") {
    const auto rep = algebraic_bounds(NoiseBounds{}, envelope(), default_params());
    CHECK(rep.w_x1_max == 0.0);
    CHECK(rep.w_psi_max == 0.0);
    CHECK(rep.w_x3_max == 0.0);
    CHECK(rep.w_Te_max == 0.0);
}

TEST_CASE("first-order bounds double exactly with the noise") {
    const auto nb = bounds_of(2e-2, 1e-3, 1.5e-2, 8e-4);
    auto doubled = nb;
    for (auto& w : doubled.w_max) w *= 2.0;
    const auto r1 = algebraic_bounds(nb, envelope(), default_params());
    const auto r2 = algebraic_bounds(doubled, envelope(), default_params());
    CHECK(r2.w_x1_max == 2.0 * r1.w_x1_max);
    CHECK(r2.w_psi_max == 2.0 * r1.w_psi_max);
}

TEST_CASE("bound degeneracy guard") {
    auto env = envelope();
    env.psi_nom_min = 0.02;
    const auto nb = bounds_of(0.02, 0.0, 0.0, 0.0); // parallel sum eats the radius
    CHECK_THROWS_AS(algebraic_bounds(nb, env, default_params()), DegenerateOperatingPoint);
}

TEST_CASE("pe metric") {
    SUBCASE("constant regressor integrates to c^2 T") {
        std::vector<double> d(1001, 0.5);
        const auto rep = pe_metric(d, 0.01, 2.0, 1e-6);
        CHECK(rep.min_integral == doctest::Approx(0.25 * 2.0).epsilon(1e-12));
        CHECK(rep.pe_satisfied);
    }
    SUBCASE("zero regressor never satisfies the condition") {
        std::vector<double> d(1001, 0.0);
        const auto rep = pe_metric(d, 0.01, 2.0, 1e-9);
        CHECK_FALSE(rep.pe_satisfied);
    }
    SUBCASE("sign flip leaves the report unchanged") {
        std::vector<double> d(2001);
        RngStream rng(5);
        for (auto& v : d) v = rng.uniform_sym(1.0);
        auto flipped = d;
        for (auto& v : flipped) v = -v;
        const auto a = pe_metric(d, 0.01, 3.0, 0.0);
        const auto b = pe_metric(flipped, 0.01, 3.0, 0.0);
        CHECK(a.min_integral == b.min_integral);
        CHECK(a.mean_integral == b.mean_integral);
        CHECK(a.pe_satisfied == b.pe_satisfied);
    }
    SUBCASE("series shorter than the window is an error") {
        std::vector<double> d(50, 1.0);
        CHECK_THROWS_AS(pe_metric(d, 0.01, 2.0, 1e-6), ConfigError);
    }
}

TEST_CASE("spectral norm against a direction search") {
    RngStream rng(17);
    for (int i = 0; i < 50; ++i) {
        std::array<double, 4> m;
        for (auto& v : m) v = rng.uniform_sym(2.0);
        double brute = 0.0;
        for (int k = 0; k < 3600; ++k) {
            const double phi = 2.0 * 3.14159265358979323846 * k / 3600.0;
            const double x = std::cos(phi), y = std::sin(phi);
            brute = std::max(brute, std::hypot(m[0] * x + m[1] * y, m[2] * x + m[3] * y));
        }
        CHECK(spectral_norm_2x2(m) == doctest::Approx(brute).epsilon(1e-5));
    }
}

TEST_CASE("determinant perturbation inequality") {
    SUBCASE("identical matrices") {
        const std::array<double, 4> m{0.3, -0.2, 0.9, 1.4};
        const auto c = determinant_perturbation_check(m, m);
        CHECK(c.lhs == 0.0);
        CHECK(c.ok);
    }
    SUBCASE("hand case: diagonal perturbation") {
        const std::array<double, 4> nom{1, 0, 0, 1};
        const std::array<double, 4> pert{1, 0, 0, 1.1};
        const auto c = determinant_perturbation_check(nom, pert);
        CHECK(c.lhs == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(c.rhs == doctest::Approx(0.22).epsilon(1e-12));
        CHECK(c.ok);
    }
    SUBCASE("thousand-case fuzz") {
        RngStream rng(99);
        for (int i = 0; i < 1000; ++i) {
            std::array<double, 4> a, b;
            for (auto& v : a) v = rng.uniform_sym(2.0);
            for (auto& v : b) v = rng.uniform_sym(2.0);
            CHECK(determinant_perturbation_check(a, b).ok);
        }
    }
}

TEST_CASE("run statistics on a noiseless run") {
    auto cfg = load_scenario(sgest::test::config_path("noiseless.cfg"));
    const auto oc = execute(cfg);
    const auto& rep = oc.bounds;
    CHECK(rep.finite);
    CHECK(rep.sup_err[0] < 1e-9); // algebraic channels are exact
    CHECK(rep.sup_err[2] < 1e-9);
    CHECK(rep.sup_err[1] < 1e-3); // observer channels converge
    CHECK(rep.sup_err[3] / oc.theta_true[0] < 1e-3);
    CHECK(rep.sup_err[4] / oc.theta_true[1] < 1e-3);
    CHECK(rep.settling_time == doctest::Approx(cfg.sim.duration * 0.5).epsilon(1e-2));
    // paired against itself, the realized perturbations are rounding dust
    CHECK(rep.rho < 1e-12);
    CHECK(rep.zeta < 1e-10);
}

TEST_CASE("run statistics flag an injected divergence") {
    auto cfg = load_scenario(sgest::test::config_path("gauss45db.cfg"));
    cfg.sim.duration = 30.0;
    cfg.estimator.gamma1 = 1e19; // pathological adaptation gain
    cfg.estimator.gamma2 = 1e19;
    const auto oc = execute(cfg);
    CHECK(oc.diverged);
    CHECK(std::isfinite(oc.fault_time));
    CHECK_FALSE(oc.bounds.finite);
}

TEST_CASE("run statistics are order independent over the window") {
    auto cfg = load_scenario(sgest::test::config_path("gauss45db.cfg"));
    cfg.sim.duration = 20.0;
    const auto oc = execute(cfg);
    RunLog shuffled = oc.primary;
    // reverse the post-settling rows consistently across all columns
    const std::size_t n = shuffled.size();
    const std::size_t start = n / 2;
    auto rev = [&](std::vector<double>& v) { std::reverse(v.begin() + start, v.end()); };
    rev(shuffled.delta);
    rev(shuffled.domega);
    rev(shuffled.eqp);
    rev(shuffled.x1_hat);
    rev(shuffled.x2_hat);
    rev(shuffled.x3_hat);
    rev(shuffled.theta1_hat);
    rev(shuffled.theta2_hat);
    const auto a = run_statistics(oc.primary, oc.theta_true, cfg.estimator, 0.5);
    const auto b = run_statistics(shuffled, oc.theta_true, cfg.estimator, 0.5);
    for (int c = 0; c < 5; ++c) {
        CHECK(a.sup_err[c] == doctest::Approx(b.sup_err[c]).epsilon(1e-12));
        CHECK(a.rms_err[c] == doctest::Approx(b.rms_err[c]).epsilon(1e-12));
    }
}

TEST_CASE("perturbation magnitudes match a direct matrix evaluation") {
    // Two hand-built paired log rows; rho and zeta must equal the spectral
    // norm / Euclidean norm of the explicitly assembled perturbation
    // matrix and drive vector.
    EstimatorConfig cfg;
    cfg.k = 4.0;
    cfg.gamma1 = 3.0;
    cfg.gamma2 = 7.0;
    const std::array<double, 2> theta{2.0, 11.0};

    RunLog run, nominal;
    run.dt = nominal.dt = 0.02;
    const std::size_t n = 2;
    for (std::size_t i = 0; i < n; ++i) {
        run.t.push_back(0.02 * static_cast<double>(i));
        nominal.t.push_back(run.t[i]);
        for (auto* log : {&run, &nominal}) {
            log->delta.push_back(0.0);
            log->domega.push_back(0.0);
            log->eqp.push_back(1.0);
            log->x1_hat.push_back(0.0);
            log->x2_hat.push_back(0.0);
            log->x3_hat.push_back(1.0);
            log->theta1_hat.push_back(theta[0]);
            log->theta2_hat.push_back(theta[1]);
        }
    }
    const double w1[n] = {0.004, -0.002};
    const double w_tm[n] = {0.003, 0.001};
    const double w_te[n] = {-0.002, 0.004};
    const double delta_nom[n] = {0.3, -0.2};
    const double w_delta[n] = {0.05, -0.03};
    const double wz1[n] = {0.02, -0.05};
    const double wz2[n] = {-0.01, 0.03};
    for (std::size_t i = 0; i < n; ++i) {
        TerminalQuantities q;
        q.V_t = 1.0;
        q.T_m = 0.7;
        q.T_e = 0.69;
        PmuSample s;
        s.y1 = q.V_t + w1[i];
        s.Tm_hat = q.T_m + w_tm[i];
        run.terms.push_back(q);
        nominal.terms.push_back(q);
        run.samples.push_back(s);
        PmuSample exact;
        exact.y1 = q.V_t;
        exact.Tm_hat = q.T_m;
        nominal.samples.push_back(exact);
        run.Te_hat.push_back(q.T_e + w_te[i]);
        nominal.Te_hat.push_back(q.T_e);
        RegressionRecord rn, rr;
        rn.Delta = delta_nom[i];
        rn.calZ = {0.4, 0.9};
        rr.Delta = delta_nom[i] + w_delta[i];
        rr.calZ = {rn.calZ[0] + wz1[i], rn.calZ[1] + wz2[i]};
        nominal.records.push_back(rn);
        run.records.push_back(rr);
    }

    const auto rep = run_statistics(run, theta, cfg, 0.0, &nominal);

    RngStream rng(3);
    double rho_expected = 0.0, zeta_expected = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double gterm = 2.0 * delta_nom[i] * w_delta[i] + w_delta[i] * w_delta[i];
        const double L[3][3] = {{0.0, -cfg.k * w1[i], w_tm[i] - w_te[i]},
                                {0.0, -cfg.gamma1 * gterm, 0.0},
                                {0.0, 0.0, -cfg.gamma2 * gterm}};
        double sigma = 0.0;
        for (int trial = 0; trial < 200000; ++trial) {
            double v[3] = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
            const double nv = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            double out[3] = {0, 0, 0};
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) out[r] += L[r][c] * v[c] / nv;
            sigma = std::max(sigma,
                             std::sqrt(out[0] * out[0] + out[1] * out[1] + out[2] * out[2]));
        }
        rho_expected = std::max(rho_expected, sigma);

        const double dg = delta_nom[i] * w_delta[i] + w_delta[i] * w_delta[i];
        const double dtot = delta_nom[i] + w_delta[i];
        const double d1 = theta[1] * (w_tm[i] - w_te[i]) - (theta[0] + cfg.k) * cfg.k * w1[i];
        const double d2 = -cfg.gamma1 * (dg * theta[0] - wz1[i] * dtot);
        const double d3 = -cfg.gamma2 * (dg * theta[1] - wz2[i] * dtot);
        zeta_expected =
            std::max(zeta_expected, std::sqrt(d1 * d1 + d2 * d2 + d3 * d3));
    }
    CHECK(rep.rho == doctest::Approx(rho_expected).epsilon(1e-3));
    CHECK(rep.zeta == doctest::Approx(zeta_expected).epsilon(1e-12));
}

TEST_CASE("noisy runs stay statistically stable across seeds") {
    auto cfg = load_scenario(sgest::test::config_path("gauss45db.cfg"));
    std::vector<double> sup_th1;
    for (int s = 0; s < 30; ++s) {
        auto c = cfg;
        c.noise.seed = derive_seed(4242, static_cast<std::uint64_t>(s));
        c.excitation.seed = derive_seed(2424, static_cast<std::uint64_t>(s));
        const auto oc = execute(c);
        REQUIRE_FALSE(oc.diverged);
        for (double v : oc.bounds.sup_err) REQUIRE(std::isfinite(v));
        sup_th1.push_back(oc.bounds.sup_err[3]);
    }
    const auto [lo, hi] = std::minmax_element(sup_th1.begin(), sup_th1.end());
    // dispersion of the sup statistic across seeds stays bounded; the
    // measured max/min ratio at this scenario is ~4.7, asserted with margin
    CHECK(*hi / *lo < 10.0);
}
