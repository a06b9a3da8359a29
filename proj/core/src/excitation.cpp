#include "sgest/excitation.hpp"

#include "sgest/errors.hpp"
#include "sgest/rng.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>

namespace sgest {

void SignalSpec::validate(const char* key_prefix) const {
    std::ostringstream bad;
    for (std::size_t i = 0; i < sines.size(); ++i) {
        if (!(sines[i].freq_hz >= 0.0))
            bad << key_prefix << "sines[" << i << "].freq_hz: must be >= 0\n";
        if (!(sines[i].amplitude >= 0.0))
            bad << key_prefix << "sines[" << i << "].amplitude: must be >= 0\n";
    }
    if (!(walk.amplitude >= 0.0))
        bad << key_prefix << "walk.amplitude: must be >= 0\n";
    if (walk.amplitude > 0.0) {
        if (!(walk.tau_s > 0.0)) bad << key_prefix << "walk.tau_s: must be > 0\n";
        if (!(walk.knot_dt > 0.0)) bad << key_prefix << "walk.knot_dt: must be > 0\n";
    }
    const std::string msg = bad.str();
    if (!msg.empty()) throw ConfigError(msg);
}

bool SignalSpec::is_zero() const {
    if (walk.amplitude > 0.0) return false;
    for (const auto& s : sines)
        if (s.amplitude > 0.0) return false;
    return true;
}

Signal::Signal(const SignalSpec& spec, std::uint64_t seed, double duration)
    : sines_(spec.sines) {
    if (spec.walk.amplitude > 0.0) {
        knot_dt_ = spec.walk.knot_dt;
        const auto n_knots = static_cast<std::size_t>(std::ceil(duration / knot_dt_)) + 4;
        knots_.resize(n_knots, 0.0);
        RngStream rng(seed);
        const double rho = std::exp(-knot_dt_ / spec.walk.tau_s);
        const double sigma = spec.walk.amplitude * std::sqrt(1.0 - rho * rho);
        for (std::size_t i = 1; i < n_knots; ++i)
            knots_[i] = rho * knots_[i - 1] + sigma * rng.gaussian();
    }
    double at_zero = 0.0;
    for (const auto& s : sines_) at_zero += s.amplitude * std::sin(s.phase);
    offset_ = -at_zero; // walk_eval(0) is already 0 (knot 0 is pinned)
}

double Signal::walk_eval(double t) const {
    if (knots_.empty()) return 0.0;
    if (t <= 0.0) return knots_.front();
    const double u = t / knot_dt_;
    auto i = static_cast<std::size_t>(u);
    if (i + 2 >= knots_.size()) return knots_.back();
    const double s = u - static_cast<double>(i);
    const double p0 = (i == 0) ? knots_[0] : knots_[i - 1];
    const double p1 = knots_[i];
    const double p2 = knots_[i + 1];
    const double p3 = knots_[i + 2];
    const double m1 = 0.5 * (p2 - p0);
    const double m2 = 0.5 * (p3 - p1);
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2.0 * s3 - 3.0 * s2 + 1.0) * p1 + (s3 - 2.0 * s2 + s) * m1 +
           (-2.0 * s3 + 3.0 * s2) * p2 + (s3 - s2) * m2;
}

double Signal::eval(double t) const {
    // sines accumulate in constructor order so the t = 0 anchor cancels
    // exactly against the offset
    double v = 0.0;
    constexpr double two_pi = 6.283185307179586477;
    for (const auto& s : sines_)
        v += s.amplitude * std::sin(two_pi * s.freq_hz * t + s.phase);
    return (v + offset_) + walk_eval(t);
}

} // namespace sgest
