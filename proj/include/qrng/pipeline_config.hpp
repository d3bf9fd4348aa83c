#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrng/feedback_controller.hpp"
#include "qrng/optics_model.hpp"
#include "qrng/signal_chain.hpp"
#include "qrng/stat_tests.hpp"
#include "qrng/toeplitz_extractor.hpp"

namespace qrng::pipeline {

struct ExtractionConfig {
    extract::ExtractorParams params;
    /// Min-entropy used to validate (m, n) at load time; the measured value
    /// is re-checked after estimation.
    double h_min_assumed = 10.08;
    /// Packed seed file; empty means the deterministic test generator.
    std::string seed_file;
};

struct SuiteConfig {
    stats::SuiteSettings settings;
    std::size_t sequence_length = 1'000'000;
    std::size_t n_sequences = 100;
};

struct RunConfig {
    std::uint64_t seed = 20190826;
    std::size_t blocks = 12000;        // LO-on compensation periods
    std::size_t noise_blocks = 1000;   // LO-off periods
    std::string out_dir = "qrng_out";
    bool exclude_saturated = true;
    bool discard_unlocked = false;
    bool discretized_entropy = false;
    unsigned threads = 0;  // 0 = hardware concurrency
};

struct PipelineConfig {
    optics::DeviceParams device;
    chain::ChainParams chain;
    chain::AdcSpec adc;
    chain::DacSpec dac;
    control::ControllerConfig controller;
    ExtractionConfig extraction;
    SuiteConfig suite;
    RunConfig run;

    /// Non-fatal findings from validation (e.g. DAC range != 2 V_pi).
    std::vector<std::string> warnings;

    /// Throws ConfigError naming the offending field.
    void validate();

    std::size_t samples_per_extractor_block() const noexcept {
        return extraction.params.n / extraction.params.sample_bits;
    }

    nlohmann::json to_json() const;
    /// SHA-256 of the canonical JSON form.
    std::string hash() const;
};

/// Parses the YAML configuration text. Omitted keys keep their defaults;
/// unknown keys are rejected.
PipelineConfig parse_config(const std::string& yaml_text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Stream seeds derived from the master seed with SplitMix64.
enum class Stream : std::uint64_t { signal = 1, noise = 2, toeplitz = 3 };
std::uint64_t derive_seed(std::uint64_t master, Stream stream);

}  // namespace qrng::pipeline
