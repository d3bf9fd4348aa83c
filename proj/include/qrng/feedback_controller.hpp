#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qrng/optics_model.hpp"
#include "qrng/signal_chain.hpp"

namespace qrng::control {

struct ControllerConfig {
    int block_size_n = 1000;
    std::int64_t interval_a = 2043000;
    std::int64_t interval_b = 2053000;
    std::int64_t step_c = 5;
    int dac_bits_n = 14;
    std::int64_t dac_init = 8092;
    /// Flip the corrective direction (SUM < A then increases dac_data).
    bool invert_loop = false;

    void validate() const;
    std::int64_t modulus() const noexcept { return std::int64_t{1} << dac_bits_n; }
};

struct ControllerState {
    std::int64_t dac_data = 0;
    std::uint64_t blocks_processed = 0;
    std::int64_t last_sum = 0;
    bool locked = false;

    static ControllerState initial(const ControllerConfig& cfg);
};

/// One compensation period worth of ADC codes and their mean-subtracted form.
///
/// `centered` is in half-LSB units: 2*code - round(2*sum/N), so a block mean
/// ending in .5 is removed exactly.
struct SampleBlock {
    std::vector<std::uint16_t> codes;
    std::int64_t sum = 0;
    std::vector<std::int16_t> centered;
};

/// The fixed-step decision rule applied to one block sum.
ControllerState decide(std::int64_t sum, const ControllerConfig& cfg,
                       const ControllerState& state);

/// Sums the block, applies `decide` and subtracts the rounded block mean.
/// The returned state's dac_data is meant for the next block.
std::pair<SampleBlock, ControllerState> process_block(std::span<const std::uint16_t> codes,
                                                      const ControllerConfig& cfg,
                                                      const ControllerState& state);

/// Per-block trace record.
struct TraceRecord {
    std::uint64_t index = 0;
    std::int64_t sum = 0;
    std::int64_t dac_before = 0;
    std::int64_t dac_after = 0;
    bool locked = false;
    std::size_t clipped = 0;  // saturated samples in the block

    bool saturated() const noexcept { return clipped > 0; }
};

/// Signal chain plus controller, advanced one block at a time.
class ClosedLoop {
public:
    ClosedLoop(optics::DeviceParams params, chain::SignalChainState chain,
               ControllerConfig cfg, chain::AdcSpec adc, chain::DacSpec dac);

    /// Draw, quantize and process one block, then advance the drift by one
    /// compensation period.
    std::pair<SampleBlock, TraceRecord> step();

    /// Keep dac_data fixed (noise-only runs have no usable SUM signal).
    void freeze(bool frozen) noexcept { frozen_ = frozen; }

    /// Compensation period N / sample_rate, seconds.
    double period() const noexcept;

    const ControllerState& state() const noexcept { return state_; }
    chain::SignalChainState& chain() noexcept { return chain_; }
    const ControllerConfig& config() const noexcept { return cfg_; }

private:
    optics::DeviceParams params_;
    chain::SignalChainState chain_;
    ControllerConfig cfg_;
    chain::AdcSpec adc_;
    chain::DacSpec dac_;
    ControllerState state_;
    std::vector<std::uint16_t> scratch_;
    bool frozen_ = false;
};

struct ClosedLoopRun {
    std::vector<SampleBlock> blocks;
    std::vector<TraceRecord> trace;
    std::vector<std::string> warnings;
};

/// Runs `n_blocks` compensation periods. Warns when the per-period drift is
/// not well below the phase moved by one controller step.
ClosedLoopRun run_closed_loop(const optics::DeviceParams& params,
                              chain::SignalChainState chain, const ControllerConfig& cfg,
                              const chain::AdcSpec& adc, const chain::DacSpec& dac,
                              std::size_t n_blocks);

/// Phase moved by one controller step, 2*pi*c / 2^n when the DAC spans 2*V_pi.
double phase_per_step(const ControllerConfig& cfg, const chain::DacSpec& dac, double v_pi);

/// Noise-free SUM expected at a total interferometer phase (ignoring clipping).
double expected_sum(const optics::DeviceParams& params, double total_phase,
                    const ControllerConfig& cfg, const chain::AdcSpec& adc);

/// Balance phase the configured loop direction converges to: the zero
/// crossing where raising dac_data lowers SUM (raising it for invert_loop).
/// std::nullopt when the device cannot be balanced.
std::optional<double> stable_balance_phase(const optics::DeviceParams& params,
                                           const ControllerConfig& cfg);

}  // namespace qrng::control
