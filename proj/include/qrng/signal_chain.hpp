#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "qrng/optics_model.hpp"

namespace qrng::chain {

struct AdcSpec {
    int bits = 12;
    double v_range = 1.0;        // volts peak-to-peak
    double sample_rate = 80e6;   // Hz

    void validate() const;
    std::uint32_t code_count() const noexcept { return 1u << bits; }
    std::uint32_t max_code() const noexcept { return code_count() - 1; }
    std::uint32_t mid_code() const noexcept { return 1u << (bits - 1); }
    double lsb() const noexcept { return v_range / code_count(); }
};

struct DacSpec {
    int bits = 14;
    double v_range = 2.480;  // volts peak-to-peak

    void validate() const;
    std::uint32_t code_count() const noexcept { return 1u << bits; }
};

// Noise calibration at the 5 mW reference point, 12-bit / 1 Vpp ADC
// (LSB = 1/4096 V). The LO-off variance should read 166.09 counts^2 after
// quantization, which itself adds 1/12 count^2, so
//   sigma_e   = sqrt(166.09 - 1/12) / 4096 V.
// The LO-on variance should read 1.86e5 counts^2, so the quantum part is
//   sigma_vac = sqrt(1.86e5 - 166.09) / 4096 V.
inline constexpr double kDefaultSigmaVac = 0.10524525734099334;
inline constexpr double kDefaultSigmaE = 0.0031455950783616992;

/// Noise and drift parameters of one simulated detector stream.
struct ChainParams {
    double delta_phi_ambient = 0.0;  // initial uncontrolled phase, rad
    double drift_rate_std = 0.05;    // rad / sqrt(s)
    double sigma_vac = kDefaultSigmaVac;  // V, at p_ref
    double sigma_e = kDefaultSigmaE;      // V
    double p_ref = 5.0;                   // mW

    void validate() const;
};

/// Mutable state of a single stream: ambient phase plus its PRNG.
///
/// Not thread-safe; independent streams with distinct seeds may run in
/// parallel.
class SignalChainState {
public:
    SignalChainState(const ChainParams& params, std::uint64_t rng_seed);

    const ChainParams& params() const noexcept { return params_; }
    double delta_phi_ambient() const noexcept { return phi_; }
    void set_delta_phi_ambient(double phi);
    std::uint64_t rng_seed() const noexcept { return seed_; }

    /// Variance of the quantum contribution, scaled linearly with LO power.
    double quantum_variance(double p_lo_mw) const noexcept;

    double standard_normal() { return gauss_(rng_); }

private:
    ChainParams params_;
    double phi_;
    std::uint64_t seed_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> gauss_{0.0, 1.0};
};

/// Wraps an angle into [0, 2*pi).
double wrap_phase(double phi);

/// Maps a DAC code to the modulator phase: pi * (code * v_range / 2^bits) / v_pi.
double dac_to_phase(std::int64_t dac_data, const DacSpec& dac, double v_pi);

/// One analog detector sample: bias at (ambient + control) plus quantum and
/// classical Gaussian noise.
double detector_sample(const optics::DeviceParams& params, SignalChainState& state,
                       double phase_control);

/// Random-walk step of the ambient phase over `dt` seconds.
void advance_drift(SignalChainState& state, double dt);

/// Mid-tread quantizer with saturation at code 0 and 2^bits - 1.
std::uint32_t adc_quantize(double v, const AdcSpec& adc);

/// Draws `out.size()` quantized samples at a fixed control phase; the bias
/// is evaluated once for the whole block. Returns the number of clipped
/// (saturated) samples.
std::size_t sample_block(const optics::DeviceParams& params, SignalChainState& state,
                         double phase_control, const AdcSpec& adc,
                         std::span<std::uint16_t> out);

}  // namespace qrng::chain
