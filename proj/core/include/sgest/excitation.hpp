#pragma once

#include <cstdint>
#include <vector>

namespace sgest {

/// One sinusoidal component of a load-variation signal.
struct SineComponent {
    double amplitude = 0.0; ///< [rad] or [pu]
    double freq_hz = 0.0;
    double phase = 0.0;     ///< [rad]
};

/// Slow pseudo-random component: an AR(1) sequence on a fixed knot grid,
/// evaluated between knots with a C1 Catmull-Rom interpolant so the signal
/// stays band-limited and integrator-friendly.
struct WalkSpec {
    double amplitude = 0.0; ///< stationary standard deviation
    double tau_s = 10.0;    ///< correlation time [s]
    double knot_dt = 0.2;   ///< knot spacing [s]
};

/// Deterministic excitation signal description (multi-sine + walk).
struct SignalSpec {
    std::vector<SineComponent> sines;
    WalkSpec walk;

    void validate(const char* key_prefix) const;
    bool is_zero() const;
};

/// Compiled excitation signal. eval(0) == 0 by construction, so a run
/// initialized at equilibrium starts exactly on it. Evaluation is a pure
/// function of (spec, seed, t); it does not depend on the integrator step,
/// which keeps trajectories comparable across step-size refinements.
class Signal {
public:
    Signal() = default;
    Signal(const SignalSpec& spec, std::uint64_t seed, double duration);

    double eval(double t) const;

private:
    double walk_eval(double t) const;

    std::vector<SineComponent> sines_;
    double offset_ = 0.0;
    double knot_dt_ = 0.0;
    std::vector<double> knots_;
};

} // namespace sgest
