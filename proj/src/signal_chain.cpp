#include "qrng/signal_chain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qrng/errors.hpp"

namespace qrng::chain {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_bits(int bits, const char* name) {
    if (bits < 4 || bits > 24)
        throw ParameterError(std::string(name) + ".bits must lie in [4, 24]");
}

}  // namespace

void AdcSpec::validate() const {
    check_bits(bits, "adc");
    if (!(v_range > 0.0)) throw ParameterError("adc.v_range must be > 0");
    if (!(sample_rate > 0.0)) throw ParameterError("adc.sample_rate must be > 0");
}

void DacSpec::validate() const {
    check_bits(bits, "dac");
    if (!(v_range > 0.0)) throw ParameterError("dac.v_range must be > 0");
}

void ChainParams::validate() const {
    if (!(sigma_vac >= 0.0)) throw ParameterError("sigma_vac must be >= 0");
    if (!(sigma_e >= 0.0)) throw ParameterError("sigma_e must be >= 0");
    if (!(drift_rate_std >= 0.0)) throw ParameterError("drift_rate_std must be >= 0");
    if (!(p_ref > 0.0)) throw ParameterError("p_ref must be > 0");
    if (!std::isfinite(delta_phi_ambient))
        throw ParameterError("delta_phi_ambient must be finite");
}

SignalChainState::SignalChainState(const ChainParams& params, std::uint64_t rng_seed)
    : params_(params), phi_(0.0), seed_(rng_seed), rng_(rng_seed) {
    params_.validate();
    phi_ = wrap_phase(params_.delta_phi_ambient);
}

void SignalChainState::set_delta_phi_ambient(double phi) { phi_ = wrap_phase(phi); }

double SignalChainState::quantum_variance(double p_lo_mw) const noexcept {
    return params_.sigma_vac * params_.sigma_vac * (p_lo_mw / params_.p_ref);
}

double wrap_phase(double phi) {
    double w = std::fmod(phi, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    // fmod of a tiny negative value can round up to exactly 2*pi.
    return w >= kTwoPi ? 0.0 : w;
}

double dac_to_phase(std::int64_t dac_data, const DacSpec& dac, double v_pi) {
    dac.validate();
    if (dac_data < 0 || dac_data >= static_cast<std::int64_t>(dac.code_count()))
        throw ParameterError("dac_data " + std::to_string(dac_data) + " outside [0, 2^" +
                             std::to_string(dac.bits) + ")");
    if (!(v_pi > 0.0)) throw ParameterError("v_pi must be > 0");
    const double volts = static_cast<double>(dac_data) * dac.v_range / dac.code_count();
    return std::numbers::pi * volts / v_pi;
}

double detector_sample(const optics::DeviceParams& params, SignalChainState& state,
                       double phase_control) {
    const double bias =
        optics::homodyne_difference(params, state.delta_phi_ambient() + phase_control);
    const double q = std::sqrt(state.quantum_variance(params.p_lo)) * state.standard_normal();
    const double e = state.params().sigma_e * state.standard_normal();
    return bias + q + e;
}

void advance_drift(SignalChainState& state, double dt) {
    if (!(dt > 0.0)) throw ParameterError("dt must be > 0");
    const double sd = state.params().drift_rate_std * std::sqrt(dt);
    if (sd == 0.0) return;
    state.set_delta_phi_ambient(state.delta_phi_ambient() + sd * state.standard_normal());
}

std::uint32_t adc_quantize(double v, const AdcSpec& adc) {
    const double max_code = adc.max_code();
    double code = std::round(v / adc.lsb()) + adc.mid_code();
    if (std::isnan(code)) code = adc.mid_code();
    return static_cast<std::uint32_t>(std::clamp(code, 0.0, max_code));
}

std::size_t sample_block(const optics::DeviceParams& params, SignalChainState& state,
                         double phase_control, const AdcSpec& adc,
                         std::span<std::uint16_t> out) {
    if (adc.bits > 16) throw ParameterError("sample_block stores codes in 16 bits");
    const double bias =
        optics::homodyne_difference(params, state.delta_phi_ambient() + phase_control);
    const double sd_q = std::sqrt(state.quantum_variance(params.p_lo));
    const double sd_e = state.params().sigma_e;
    const std::uint32_t top = adc.max_code();
    std::size_t clipped = 0;
    for (auto& code : out) {
        const double q = sd_q * state.standard_normal();
        const double e = sd_e * state.standard_normal();
        const std::uint32_t c = adc_quantize(bias + q + e, adc);
        clipped += (c == 0 || c == top);
        code = static_cast<std::uint16_t>(c);
    }
    return clipped;
}

}  // namespace qrng::chain
