#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrng/bits.hpp"
#include "qrng/entropy_estimator.hpp"
#include "qrng/feedback_controller.hpp"
#include "qrng/pipeline_config.hpp"
#include "qrng/stat_tests.hpp"

namespace qrng::pipeline {

/// Figures reported for the reference setup, for side-by-side comparison.
namespace published {
inline constexpr double kSigmaMSq = 1.86e5;
inline constexpr double kSigmaESq = 166.09;
inline constexpr double kHMin = 10.08;
inline constexpr double kBitsPerRawBit = 0.84;
inline constexpr std::size_t kM = 1920;
inline constexpr std::size_t kN = 2400;
inline constexpr int kEpsilonLog2 = 48;
inline constexpr double kProportionBoundary = 0.9805608;  // beta = 0.01, N = 1000
}  // namespace published

struct SimulationResult {
    control::ClosedLoopRun signal;  // LO on, closed loop
    control::ClosedLoopRun noise;   // LO off, controller frozen
    std::uint64_t signal_seed = 0;
    std::uint64_t noise_seed = 0;
};

SimulationResult simulate(const PipelineConfig& cfg);

struct LockStats {
    std::size_t blocks = 0;
    std::size_t locked = 0;
    std::size_t saturated_blocks = 0;
    std::size_t clipped_samples = 0;
    double locked_fraction = 0.0;
    /// Index of the first locked block, or blocks if none.
    std::size_t first_locked = 0;
};

/// Lock and saturation statistics over trace[skip..].
LockStats lock_stats(std::span<const control::TraceRecord> trace, std::size_t skip = 0);

std::vector<std::uint16_t> all_codes(const control::ClosedLoopRun& run);
std::vector<std::int16_t> all_centered(const control::ClosedLoopRun& run);
/// Centered samples of the blocks admitted to estimation and extraction.
std::vector<std::int16_t> usable_centered(const control::ClosedLoopRun& run, bool exclude_saturated,
                                          bool discard_unlocked);

entropy::EntropyReport estimate(std::span<const std::int16_t> signal_centered,
                                std::span<const std::int16_t> noise_centered,
                                const PipelineConfig& cfg);

struct BudgetCheck {
    std::int64_t budget = 0;  // 0 when nothing is extractable
    bool ok = false;          // configured m fits the measured budget
};
BudgetCheck check_budget(const entropy::EntropyReport& report, const PipelineConfig& cfg);

/// Seed from extraction.seed_file, or the deterministic test generator
/// keyed by the master seed.
extract::ToeplitzSeed extractor_seed(const PipelineConfig& cfg);

BitVector extract_centered(std::span<const std::int16_t> centered, const PipelineConfig& cfg);

/// Writes artifacts into one directory and keeps manifest.json (sizes,
/// SHA-256, config hash, seed) in sync.
class ArtifactWriter {
public:
    ArtifactWriter(std::filesystem::path dir, const PipelineConfig& cfg);

    const std::filesystem::path& dir() const noexcept { return dir_; }
    std::filesystem::path path(const std::string& name) const { return dir_ / name; }

    /// Provenance block embedded at the top of every structured artifact.
    nlohmann::json provenance() const;

    void write_u16(const std::string& name, std::span<const std::uint16_t> words);
    void write_i16(const std::string& name, std::span<const std::int16_t> words);
    void write_bits(const std::string& name, const BitVector& bits);
    void write_json(const std::string& name, nlohmann::json doc);
    void write_text(const std::string& name, const std::string& text);

    void set_status(const std::string& status);

private:
    void record(const std::string& name);
    void flush_manifest() const;

    std::filesystem::path dir_;
    std::string config_hash_;
    std::uint64_t seed_;
    nlohmann::json manifest_;
};

/// Header line followed by one JSON object per block.
std::string trace_jsonl(const control::ClosedLoopRun& run, const nlohmann::json& header);

nlohmann::json entropy_json(const entropy::EntropyReport& report, const BudgetCheck& budget,
                            const PipelineConfig& cfg);
nlohmann::json verdict_json(const stats::SuiteVerdict& verdict);
/// Fixed-width proportion / p-value table, one row per test.
std::string verdict_table(const stats::SuiteVerdict& verdict);

struct PipelineSummary {
    LockStats lock;
    std::size_t usable_samples = 0;
    entropy::EntropyReport entropy;
    BudgetCheck budget;
    std::size_t extracted_bits = 0;
    std::optional<stats::SuiteVerdict> verdict;
    std::vector<std::string> warnings;
};

// Individual stages; each writes its artifacts through `out`.
SimulationResult stage_simulate(const PipelineConfig& cfg, ArtifactWriter& out,
                                std::vector<std::string>& warnings);
entropy::EntropyReport stage_estimate(std::span<const std::int16_t> signal_centered,
                                      std::span<const std::int16_t> noise_centered,
                                      const PipelineConfig& cfg, ArtifactWriter& out,
                                      BudgetCheck& budget, std::vector<std::string>& warnings);
BitVector stage_extract(std::span<const std::int16_t> centered, const PipelineConfig& cfg,
                        ArtifactWriter& out);
/// Runs the suite on as many full sequences as the bits allow (capped at the
/// configured count). Returns nullopt if not even one sequence fits.
std::optional<stats::SuiteVerdict> stage_test(const BitVector& bits, const PipelineConfig& cfg,
                                              ArtifactWriter& out,
                                              std::vector<std::string>& warnings);

/// simulate -> estimate -> extract -> test, writing everything to
/// cfg.run.out_dir. A failing stage marks the manifest and rethrows.
PipelineSummary run_pipeline(const PipelineConfig& cfg);

std::string summary_text(const PipelineSummary& summary, const PipelineConfig& cfg);

/// Rows of (quantity, published, simulated) for the reference-setup comparison.
struct ComparisonRow {
    std::string quantity;
    std::string published;
    std::string simulated;
};
std::vector<ComparisonRow> published_comparison(const PipelineSummary& summary,
                                                const PipelineConfig& cfg);

}  // namespace qrng::pipeline
