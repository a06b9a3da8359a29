#pragma once

#include "sgest/generator.hpp"
#include "sgest/rng.hpp"

#include <array>
#include <cstdint>

namespace sgest {

/// Measurement-noise description for the six PMU channels and the
/// mechanical-torque input. For the Gaussian and Laplacian families the
/// per-channel scale follows from the channel RMS and the SNR; uniform
/// noise is specified directly by half-widths.
struct NoiseSpec {
    enum class Family { None, Gaussian, Laplacian, Uniform };
    Family family = Family::None;
    double snr_db = 45.0;
    std::array<double, 6> uniform_halfwidth{};
    double truncation_k = 4.0;   ///< draws are redrawn beyond k * scale
    std::uint64_t seed = 1;
    double w_Tm_max = 0.0;       ///< mechanical-torque error bound [pu]

    void validate(const char* key_prefix = "noise.") const;
};

/// One timestamped noisy measurement vector:
///   y1 = V_t + w1, y2 = theta_t + w2, y3 = I_t + w3,
///   y4 = phi_t + w4, y5 = P_t + w5, y6 = Q_t + w6,
/// plus the corrupted torque input Tm_hat = T_m + w_Tm.
struct PmuSample {
    double t = 0.0;
    double y1 = 0.0, y2 = 0.0, y3 = 0.0, y4 = 0.0, y5 = 0.0, y6 = 0.0;
    double Tm_hat = 0.0;

    std::array<double, 6> channels() const { return {y1, y2, y3, y4, y5, y6}; }
};

/// Per-channel noise scales and the hard bounds the realized noise obeys.
struct NoiseBounds {
    std::array<double, 6> scale{};  ///< sigma (Gaussian), b (Laplacian), half-width (Uniform)
    std::array<double, 6> w_max{};  ///< |w_i| <= w_max[i], exactly
    double w_Tm_max = 0.0;
};

/// Amplitude-ratio noise scale: sigma = rms * 10^(-snr_db / 20).
double scale_from_snr(double signal_rms, double snr_db);

/// Converts per-channel signal RMS values into scales and bounds for the
/// given spec. Laplacian scales are sigma / sqrt(2) so the variance matches
/// the Gaussian case at equal SNR.
NoiseBounds derive_bounds(const NoiseSpec& spec, const std::array<double, 6>& channel_rms);

/// Draws noisy samples from true terminal quantities. Each channel owns an
/// independent substream seeded from (spec.seed, channel index), so the
/// draw sequence of one channel never depends on the others.
class PmuSampler {
public:
    PmuSampler(const NoiseSpec& spec, const std::array<double, 6>& channel_rms);

    PmuSample sample(const TerminalQuantities& term, double t);

    const NoiseBounds& bounds() const { return bounds_; }

private:
    double draw(std::size_t channel);

    NoiseSpec spec_;
    NoiseBounds bounds_;
    std::array<RngStream, 7> streams_; // y1..y6 + Tm
};

/// Decimation of the simulation grid to the PMU reporting grid. The rate
/// must divide the step rate exactly; 60 Hz against a 1 ms step is
/// rejected rather than approximated.
struct PmuSchedule {
    int steps_per_sample = 1;
    double period = 0.0;

    static PmuSchedule make(double sim_dt, double pmu_rate_hz);
    bool emits_at(long step_index) const { return step_index % steps_per_sample == 0; }
};

} // namespace sgest
