#include "sgest/pmu.hpp"

#include "sgest/errors.hpp"

#include <cmath>
#include <sstream>

namespace sgest {

void NoiseSpec::validate(const char* key_prefix) const {
    std::ostringstream bad;
    if (!(truncation_k > 0.0)) bad << key_prefix << "truncation_k: must be > 0\n";
    if (!std::isfinite(snr_db)) bad << key_prefix << "snr_db: must be finite\n";
    if (!(w_Tm_max >= 0.0)) bad << key_prefix << "w_Tm_max: must be >= 0\n";
    if (family == Family::Uniform) {
        for (std::size_t i = 0; i < 6; ++i)
            if (!(uniform_halfwidth[i] >= 0.0)) {
                bad << key_prefix << "uniform_halfwidth: entries must be >= 0\n";
                break;
            }
    }
    const std::string msg = bad.str();
    if (!msg.empty()) throw ConfigError(msg);
}

double scale_from_snr(double signal_rms, double snr_db) {
    if (!(signal_rms >= 0.0)) throw ConfigError("noise: signal rms must be >= 0");
    if (std::isinf(snr_db) && snr_db > 0.0) return 0.0;
    return signal_rms * std::pow(10.0, -snr_db / 20.0);
}

NoiseBounds derive_bounds(const NoiseSpec& spec, const std::array<double, 6>& channel_rms) {
    NoiseBounds b;
    b.w_Tm_max = (spec.family == NoiseSpec::Family::None) ? 0.0 : spec.w_Tm_max;
    switch (spec.family) {
    case NoiseSpec::Family::None:
        break;
    case NoiseSpec::Family::Gaussian:
        for (std::size_t i = 0; i < 6; ++i) {
            b.scale[i] = scale_from_snr(channel_rms[i], spec.snr_db);
            b.w_max[i] = spec.truncation_k * b.scale[i];
        }
        break;
    case NoiseSpec::Family::Laplacian:
        for (std::size_t i = 0; i < 6; ++i) {
            b.scale[i] = scale_from_snr(channel_rms[i], spec.snr_db) / std::sqrt(2.0);
            b.w_max[i] = spec.truncation_k * b.scale[i];
        }
        break;
    case NoiseSpec::Family::Uniform:
        for (std::size_t i = 0; i < 6; ++i) {
            b.scale[i] = spec.uniform_halfwidth[i];
            b.w_max[i] = spec.uniform_halfwidth[i];
        }
        break;
    }
    return b;
}

PmuSampler::PmuSampler(const NoiseSpec& spec, const std::array<double, 6>& channel_rms)
    : spec_(spec), bounds_(derive_bounds(spec, channel_rms)) {
    spec_.validate();
    for (std::size_t i = 0; i < streams_.size(); ++i)
        streams_[i].reseed(derive_seed(spec_.seed, 0x706d75ULL, i));
}

double PmuSampler::draw(std::size_t channel) {
    const double scale = bounds_.scale[channel];
    if (scale <= 0.0) return 0.0;
    const double bound = bounds_.w_max[channel];
    auto& rng = streams_[channel];
    switch (spec_.family) {
    case NoiseSpec::Family::Gaussian:
        for (;;) {
            const double w = scale * rng.gaussian();
            if (std::abs(w) <= bound) return w;
        }
    case NoiseSpec::Family::Laplacian:
        for (;;) {
            const double w = rng.laplacian(scale);
            if (std::abs(w) <= bound) return w;
        }
    case NoiseSpec::Family::Uniform:
        return rng.uniform_sym(scale);
    case NoiseSpec::Family::None:
        break;
    }
    return 0.0;
}

PmuSample PmuSampler::sample(const TerminalQuantities& term, double t) {
    PmuSample s;
    s.t = t;
    if (spec_.family == NoiseSpec::Family::None) {
        s.y1 = term.V_t;
        s.y2 = term.theta_t;
        s.y3 = term.I_t;
        s.y4 = term.phi_t;
        s.y5 = term.P_t;
        s.y6 = term.Q_t;
        s.Tm_hat = term.T_m;
        return s;
    }

    // Positivity of the magnitude channels is preserved by redrawing; the
    // physically relevant scales keep this from looping in practice.
    double w1 = draw(0);
    for (int tries = 0; term.V_t + w1 <= 0.0 && tries < 100; ++tries) w1 = draw(0);
    if (term.V_t + w1 <= 0.0) w1 = -term.V_t + 1e-12;
    double w3 = draw(2);
    for (int tries = 0; term.I_t + w3 < 0.0 && tries < 100; ++tries) w3 = draw(2);
    if (term.I_t + w3 < 0.0) w3 = -term.I_t;

    s.y1 = term.V_t + w1;
    s.y2 = wrap_angle(term.theta_t + draw(1));
    s.y3 = term.I_t + w3;
    s.y4 = wrap_angle(term.phi_t + draw(3));
    s.y5 = term.P_t + draw(4);
    s.y6 = term.Q_t + draw(5);
    s.Tm_hat = term.T_m + (bounds_.w_Tm_max > 0.0
                               ? streams_[6].uniform_sym(bounds_.w_Tm_max)
                               : 0.0);
    return s;
}

PmuSchedule PmuSchedule::make(double sim_dt, double pmu_rate_hz) {
    if (!(sim_dt > 0.0)) throw ConfigError("sim.dt: must be > 0");
    if (!(pmu_rate_hz > 0.0)) throw ConfigError("sim.pmu_rate: must be > 0");
    const double steps = 1.0 / (pmu_rate_hz * sim_dt);
    const double rounded = std::round(steps);
    if (rounded < 1.0 || std::abs(steps - rounded) > 1e-9 * rounded) {
        std::ostringstream msg;
        msg << "sim.pmu_rate: " << pmu_rate_hz
            << " Hz does not divide the simulation rate 1/dt = " << 1.0 / sim_dt
            << " Hz evenly; the PMU grid must align with integrator steps";
        throw ConfigError(msg.str());
    }
    PmuSchedule sched;
    sched.steps_per_sample = static_cast<int>(rounded);
    sched.period = sim_dt * rounded;
    return sched;
}

} // namespace sgest
