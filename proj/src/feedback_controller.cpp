#include "qrng/feedback_controller.hpp"

#include <cmath>
#include <numbers>

#include "qrng/errors.hpp"

namespace qrng::control {

void ControllerConfig::validate() const {
    if (block_size_n < 1) throw ParameterError("block_size_n must be >= 1");
    if (dac_bits_n < 1 || dac_bits_n > 30) throw ParameterError("dac_bits_n must lie in [1, 30]");
    if (step_c <= 0 || step_c >= modulus())
        throw ParameterError("step_c must lie in (0, 2^dac_bits_n)");
    if (interval_a > interval_b) throw ParameterError("interval_a must be <= interval_b");
    if (dac_init < 0 || dac_init >= modulus())
        throw ParameterError("dac_init must lie in [0, 2^dac_bits_n)");
}

ControllerState ControllerState::initial(const ControllerConfig& cfg) {
    cfg.validate();
    return ControllerState{cfg.dac_init, 0, 0, false};
}

ControllerState decide(std::int64_t sum, const ControllerConfig& cfg,
                       const ControllerState& state) {
    ControllerState next = state;
    next.last_sum = sum;
    next.blocks_processed = state.blocks_processed + 1;
    next.locked = sum >= cfg.interval_a && sum <= cfg.interval_b;
    if (next.locked) return next;

    const std::int64_t c = cfg.step_c;
    const std::int64_t top = cfg.modulus();
    const bool lower = (sum < cfg.interval_a) != cfg.invert_loop;
    if (lower) {
        next.dac_data = state.dac_data < c ? top - c : state.dac_data - c;
    } else {
        // Wrap as soon as +c would leave the code range [0, 2^n).
        next.dac_data = state.dac_data > top - 1 - c ? c : state.dac_data + c;
    }
    return next;
}

std::pair<SampleBlock, ControllerState> process_block(std::span<const std::uint16_t> codes,
                                                      const ControllerConfig& cfg,
                                                      const ControllerState& state) {
    if (codes.size() != static_cast<std::size_t>(cfg.block_size_n))
        throw ParameterError("block holds " + std::to_string(codes.size()) +
                             " codes, expected " + std::to_string(cfg.block_size_n));

    SampleBlock block;
    block.codes.assign(codes.begin(), codes.end());
    for (auto c : codes) block.sum += c;

    // round(2*sum/N), halves rounded up; sum is never negative.
    const std::int64_t n = cfg.block_size_n;
    const std::int64_t doubled_mean = (4 * block.sum + n) / (2 * n);
    block.centered.reserve(codes.size());
    for (auto c : codes)
        block.centered.push_back(static_cast<std::int16_t>(2 * std::int64_t{c} - doubled_mean));

    ControllerState next = decide(block.sum, cfg, state);
    return {std::move(block), next};
}

ClosedLoop::ClosedLoop(optics::DeviceParams params, chain::SignalChainState chain,
                       ControllerConfig cfg, chain::AdcSpec adc, chain::DacSpec dac)
    : params_(params),
      chain_(std::move(chain)),
      cfg_(cfg),
      adc_(adc),
      dac_(dac),
      state_(ControllerState::initial(cfg)) {
    params_.validate();
    adc_.validate();
    dac_.validate();
    if (adc_.bits > 15) throw ParameterError("centered samples need adc.bits <= 15");
    if (cfg_.dac_bits_n != dac_.bits)
        throw ParameterError("controller dac_bits_n must equal dac.bits");
    scratch_.resize(static_cast<std::size_t>(cfg_.block_size_n));
}

double ClosedLoop::period() const noexcept { return cfg_.block_size_n / adc_.sample_rate; }

std::pair<SampleBlock, TraceRecord> ClosedLoop::step() {
    const double control = chain::dac_to_phase(state_.dac_data, dac_, params_.v_pi);
    TraceRecord rec;
    rec.index = state_.blocks_processed;
    rec.dac_before = state_.dac_data;
    rec.clipped = chain::sample_block(params_, chain_, control, adc_, scratch_);

    auto [block, next] = process_block(scratch_, cfg_, state_);
    if (frozen_) next.dac_data = state_.dac_data;
    state_ = next;

    rec.sum = block.sum;
    rec.locked = state_.locked;
    rec.dac_after = state_.dac_data;
    chain::advance_drift(chain_, period());
    return {std::move(block), rec};
}

ClosedLoopRun run_closed_loop(const optics::DeviceParams& params,
                              chain::SignalChainState chain, const ControllerConfig& cfg,
                              const chain::AdcSpec& adc, const chain::DacSpec& dac,
                              std::size_t n_blocks) {
    ClosedLoop loop(params, std::move(chain), cfg, adc, dac);
    ClosedLoopRun run;

    const double drift_per_period =
        loop.chain().params().drift_rate_std * std::sqrt(loop.period());
    const double step = phase_per_step(cfg, dac, params.v_pi);
    if (drift_per_period > 0.1 * step)
        run.warnings.push_back("phase drift per compensation period (" +
                               std::to_string(drift_per_period) +
                               " rad) is not well below the controller step (" +
                               std::to_string(step) + " rad)");

    run.blocks.reserve(n_blocks);
    run.trace.reserve(n_blocks);
    for (std::size_t i = 0; i < n_blocks; ++i) {
        auto [block, rec] = loop.step();
        run.blocks.push_back(std::move(block));
        run.trace.push_back(rec);
    }
    return run;
}

double phase_per_step(const ControllerConfig& cfg, const chain::DacSpec& dac, double v_pi) {
    const double volts = static_cast<double>(cfg.step_c) * dac.v_range / dac.code_count();
    return std::numbers::pi * volts / v_pi;
}

double expected_sum(const optics::DeviceParams& params, double total_phase,
                    const ControllerConfig& cfg, const chain::AdcSpec& adc) {
    const double volts = optics::homodyne_difference(params, total_phase);
    return cfg.block_size_n * (adc.mid_code() + volts / adc.lsb());
}

std::optional<double> stable_balance_phase(const optics::DeviceParams& params,
                                           const ControllerConfig& cfg) {
    const auto principal = optics::balance_phase(params, optics::Branch::principal);
    if (!principal) return std::nullopt;
    // d(difference)/d(phi) = -coupling * sin(phi); the default loop needs it negative.
    const double coupling =
        optics::pd1_terms(params).interference - optics::pd2_terms(params).interference;
    const double slope = -coupling * std::sin(*principal);
    const bool principal_stable = cfg.invert_loop ? slope > 0.0 : slope < 0.0;
    if (principal_stable) return principal;
    return optics::balance_phase(params, optics::Branch::mirrored);
}

}  // namespace qrng::control
