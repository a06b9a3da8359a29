#include "sgest/adaptive_observer.hpp"

#include "sgest/errors.hpp"

#include <cmath>
#include <sstream>

namespace sgest {

void EstimatorConfig::validate(const char* key_prefix) const {
    std::ostringstream bad;
    if (!(k > 0.0)) bad << key_prefix << "k: must be > 0\n";
    if (!(gamma1 > 0.0)) bad << key_prefix << "gamma1: must be > 0\n";
    if (!(gamma2 > 0.0)) bad << key_prefix << "gamma2: must be > 0\n";
    if (!(lambda > 0.0)) bad << key_prefix << "lambda: must be > 0\n";
    if (!(alpha_H > 0.0)) bad << key_prefix << "alpha_H: must be > 0\n";
    const std::string msg = bad.str();
    if (!msg.empty()) throw ConfigError(msg);
}

DremFilterBank::DremFilterBank(double lambda, double dt) {
    if (!(lambda > 0.0) || !(dt > 0.0))
        throw ConfigError("estimator: filter pole and step must be > 0");
    // Controllable canonical A = [[0, 1], [-l^2, -2l]], B = [0, 1]'. The
    // bilinear (Tustin) discrete realization is
    //   A_d = M (I + A T/2),  B_d = T M B,  C_d = C M,  D_d = D + C M B T/2
    // with M = (I - A T/2)^{-1}, which for this A is closed-form.
    const double l2 = lambda * lambda;
    const double T = dt;
    const double det = (1.0 + lambda * T / 2.0) * (1.0 + lambda * T / 2.0);
    const double m00 = (1.0 + lambda * T) / det;
    const double m01 = (T / 2.0) / det;
    const double m10 = (-T * l2 / 2.0) / det;
    const double m11 = 1.0 / det;
    // I + A T/2 = [[1, T/2], [-T l2/2, 1 - T l]]
    const double p00 = 1.0, p01 = T / 2.0;
    const double p10 = -T * l2 / 2.0, p11 = 1.0 - T * lambda;
    ad_ = {m00 * p00 + m01 * p10, m00 * p01 + m01 * p11,
           m10 * p00 + m11 * p10, m10 * p01 + m11 * p11};
    bd_ = {T * m01, T * m11};

    auto out_map = [&](double c0, double c1, double d, std::array<double, 2>& c_d,
                       double& d_d) {
        c_d = {c0 * m00 + c1 * m10, c0 * m01 + c1 * m11};
        d_d = d + c_d[1] * T / 2.0; // C M (T/2) B with B = [0, 1]'
    };
    out_map(l2, 0.0, 0.0, c_f_, d_f_);                       // F
    out_map(0.0, l2, 0.0, c_fs_, d_fs_);                     // F s
    out_map(-l2 * l2, -2.0 * l2 * lambda, l2, c_fs2_, d_fs2_); // F s^2
    dc_state_gain_ = 1.0 / l2;
}

void DremFilterBank::prime(double x1_hat, double u) {
    // (I - A_d)^{-1} B_d equals -A^{-1} B for the bilinear map, so the DC
    // state for a constant input v is [v / l^2, 0]. At that state
    // F s[v] = F s^2[v] = 0 and F[v] = v, exactly.
    s_d2_ = {x1_hat * dc_state_gain_, 0.0};
    s_d1_ = {x1_hat * dc_state_gain_, 0.0};
    s_u_ = {u * dc_state_gain_, 0.0};
}

DremFilterBank::Output DremFilterBank::step(double x1_hat, double u) {
    Output out;
    out.z = c_fs2_[0] * s_d2_[0] + c_fs2_[1] * s_d2_[1] + d_fs2_ * x1_hat;
    out.xi1 = -(c_fs_[0] * s_d1_[0] + c_fs_[1] * s_d1_[1] + d_fs_ * x1_hat);
    out.xi2 = c_f_[0] * s_u_[0] + c_f_[1] * s_u_[1] + d_f_ * u;

    auto advance = [&](std::array<double, 2>& s, double input) {
        const double s0 = ad_[0] * s[0] + ad_[1] * s[1] + bd_[0] * input;
        const double s1 = ad_[2] * s[0] + ad_[3] * s[1] + bd_[1] * input;
        s = {s0, s1};
    };
    advance(s_d2_, x1_hat);
    advance(s_d1_, x1_hat);
    advance(s_u_, u);
    return out;
}

RegressorExtension::RegressorExtension(double alpha_H, double dt) {
    if (!(alpha_H > 0.0) || !(dt > 0.0))
        throw ConfigError("estimator: extension pole and step must be > 0");
    decay_ = std::exp(-alpha_H * dt);
    gain_ = 1.0 - decay_;
}

RegressorExtension::Output RegressorExtension::step(double z, double xi1, double xi2) {
    Output out;
    out.Z = {z, lag_[0]};
    out.Xi = {xi1, xi2, lag_[1], lag_[2]};
    lag_[0] = decay_ * lag_[0] + gain_ * z;
    lag_[1] = decay_ * lag_[1] + gain_ * xi1;
    lag_[2] = decay_ * lag_[2] + gain_ * xi2;
    return out;
}

void RegressorExtension::prime(double z, double xi1, double xi2) {
    lag_ = {z, xi1, xi2};
}

MixResult mix(const std::array<double, 2>& Z, const std::array<double, 4>& Xi) {
    const double a = Xi[0], b = Xi[1], c = Xi[2], d = Xi[3];
    MixResult r;
    r.Delta = a * d - b * c;
    r.calZ = {d * Z[0] - b * Z[1], -c * Z[0] + a * Z[1]};
    return r;
}

EstimatorState update(const EstimatorState& st, const RegressionRecord& rec,
                      double x1_hat, double u, const EstimatorConfig& cfg, double dt) {
    const double gains[2] = {cfg.gamma1, cfg.gamma2};
    struct Rates {
        double x2I, th[2];
    };
    auto rates = [&](const EstimatorState& s) {
        Rates r;
        r.x2I = -(s.theta[0] + cfg.k) * (s.x2I + cfg.k * x1_hat) + s.theta[1] * u;
        for (int i = 0; i < 2; ++i)
            r.th[i] = -gains[i] * rec.Delta * (rec.Delta * s.theta[i] - rec.calZ[i]);
        return r;
    };
    auto advance = [](const EstimatorState& s, const Rates& r, double h) {
        EstimatorState out = s;
        out.x2I += h * r.x2I;
        out.theta[0] += h * r.th[0];
        out.theta[1] += h * r.th[1];
        return out;
    };

    const Rates k1 = rates(st);
    const Rates k2 = rates(advance(st, k1, dt / 2.0));
    const Rates k3 = rates(advance(st, k2, dt / 2.0));
    const Rates k4 = rates(advance(st, k3, dt));

    EstimatorState out = st;
    out.x2I += dt / 6.0 * (k1.x2I + 2.0 * k2.x2I + 2.0 * k3.x2I + k4.x2I);
    for (int i = 0; i < 2; ++i)
        out.theta[i] += dt / 6.0 * (k1.th[i] + 2.0 * k2.th[i] + 2.0 * k3.th[i] + k4.th[i]);

    if (!std::isfinite(out.x2I) || !std::isfinite(out.theta[0]) ||
        !std::isfinite(out.theta[1]))
        throw EstimatorDivergence("adaptive observer state became non-finite", rec.t);
    return out;
}

double x2_estimate(const EstimatorState& st, double x1_hat, double k) {
    return st.x2I + k * x1_hat;
}

AdaptiveObserver::AdaptiveObserver(const EstimatorConfig& cfg, double dt)
    : cfg_(cfg), dt_(dt),
      filters_(cfg.lambda, dt),
      extension_(cfg.alpha_H, dt) {
    cfg_.validate();
    state_.theta = cfg_.theta_init;
}

AdaptiveObserver::Output AdaptiveObserver::step(double t, double x1_hat, double u) {
    if (!started_) {
        filters_.prime(x1_hat, u);
        extension_.prime(0.0, 0.0, u);
    }
    const auto f = filters_.step(x1_hat, u);
    const auto ext = extension_.step(f.z, f.xi1, f.xi2);
    const auto mixed = mix(ext.Z, ext.Xi);

    Output out;
    out.record.t = t;
    out.record.z = f.z;
    out.record.xi = {f.xi1, f.xi2};
    out.record.Z = ext.Z;
    out.record.Xi = ext.Xi;
    out.record.Delta = mixed.Delta;
    out.record.calZ = mixed.calZ;

    if (!started_) {
        state_.x2I = cfg_.x2I_init ? *cfg_.x2I_init : -cfg_.k * x1_hat;
        started_ = true;
    } else {
        RegressionRecord mid = out.record;
        mid.Delta = 0.5 * (prev_record_.Delta + out.record.Delta);
        mid.calZ = {0.5 * (prev_record_.calZ[0] + out.record.calZ[0]),
                    0.5 * (prev_record_.calZ[1] + out.record.calZ[1])};
        state_ = update(state_, mid, 0.5 * (prev_x1_ + x1_hat), 0.5 * (prev_u_ + u),
                        cfg_, dt_);
    }
    prev_record_ = out.record;
    prev_x1_ = x1_hat;
    prev_u_ = u;

    out.x2_hat = x2_estimate(state_, x1_hat, cfg_.k);
    out.theta_hat = state_.theta;
    return out;
}

} // namespace sgest
