#include "qrng/pipeline.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

#include "qrng/artifact_io.hpp"
#include "qrng/errors.hpp"

namespace qrng::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

SimulationResult simulate(const PipelineConfig& cfg) {
    SimulationResult res;
    res.signal_seed = derive_seed(cfg.run.seed, Stream::signal);
    res.noise_seed = derive_seed(cfg.run.seed, Stream::noise);

    res.signal = control::run_closed_loop(cfg.device,
                                          chain::SignalChainState(cfg.chain, res.signal_seed),
                                          cfg.controller, cfg.adc, cfg.dac, cfg.run.blocks);

    // LO off: no interference term, no quantum noise, nothing to steer.
    optics::DeviceParams dark = cfg.device;
    dark.p_lo = 0.0;
    control::ClosedLoop loop(dark, chain::SignalChainState(cfg.chain, res.noise_seed),
                             cfg.controller, cfg.adc, cfg.dac);
    loop.freeze(true);
    res.noise.blocks.reserve(cfg.run.noise_blocks);
    for (std::size_t i = 0; i < cfg.run.noise_blocks; ++i) {
        auto [block, rec] = loop.step();
        res.noise.blocks.push_back(std::move(block));
        res.noise.trace.push_back(rec);
    }
    return res;
}

LockStats lock_stats(std::span<const control::TraceRecord> trace, std::size_t skip) {
    LockStats s;
    s.first_locked = trace.size();
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (trace[i].locked && s.first_locked == trace.size()) s.first_locked = i;
        if (i < skip) continue;
        ++s.blocks;
        s.locked += trace[i].locked;
        s.saturated_blocks += trace[i].saturated();
        s.clipped_samples += trace[i].clipped;
    }
    s.locked_fraction = s.blocks ? static_cast<double>(s.locked) / s.blocks : 0.0;
    return s;
}

std::vector<std::uint16_t> all_codes(const control::ClosedLoopRun& run) {
    std::vector<std::uint16_t> out;
    for (const auto& b : run.blocks) out.insert(out.end(), b.codes.begin(), b.codes.end());
    return out;
}

std::vector<std::int16_t> all_centered(const control::ClosedLoopRun& run) {
    return usable_centered(run, false, false);
}

std::vector<std::int16_t> usable_centered(const control::ClosedLoopRun& run, bool exclude_saturated,
                                          bool discard_unlocked) {
    std::vector<std::int16_t> out;
    for (std::size_t i = 0; i < run.blocks.size(); ++i) {
        const auto& rec = run.trace[i];
        if (exclude_saturated && rec.saturated()) continue;
        if (discard_unlocked && !rec.locked) continue;
        out.insert(out.end(), run.blocks[i].centered.begin(), run.blocks[i].centered.end());
    }
    return out;
}

entropy::EntropyReport estimate(std::span<const std::int16_t> signal_centered,
                                std::span<const std::int16_t> noise_centered,
                                const PipelineConfig& cfg) {
    if (signal_centered.size() < 2) throw DataError("no usable LO-on samples to estimate from");
    if (noise_centered.size() < 2) throw DataError("no usable LO-off samples to estimate from");
    const double m = entropy::centered_variance_counts(signal_centered);
    const double e = entropy::centered_variance_counts(noise_centered);
    return entropy::make_report(m, e, cfg.adc.bits, signal_centered.size(),
                                cfg.run.discretized_entropy);
}

BudgetCheck check_budget(const entropy::EntropyReport& report, const PipelineConfig& cfg) {
    BudgetCheck b;
    try {
        b.budget = entropy::extractor_budget_log2(
            report.h_min_per_sample, static_cast<std::int64_t>(cfg.samples_per_extractor_block()),
            cfg.extraction.params.epsilon_log2);
    } catch (const NoEntropyError&) {
        b.budget = 0;
    }
    b.ok = b.budget >= static_cast<std::int64_t>(cfg.extraction.params.m);
    return b;
}

extract::ToeplitzSeed extractor_seed(const PipelineConfig& cfg) {
    if (!cfg.extraction.seed_file.empty())
        return io::read_seed_file(cfg.extraction.seed_file, cfg.extraction.params);
    return extract::deterministic_test_seed(cfg.extraction.params,
                                            derive_seed(cfg.run.seed, Stream::toeplitz));
}

BitVector extract_centered(std::span<const std::int16_t> centered, const PipelineConfig& cfg) {
    return extract::extract_stream(centered, extractor_seed(cfg), cfg.extraction.params,
                                   cfg.run.threads);
}

// ---- artifacts --------------------------------------------------------------

ArtifactWriter::ArtifactWriter(fs::path dir, const PipelineConfig& cfg)
    : dir_(std::move(dir)), config_hash_(cfg.hash()), seed_(cfg.run.seed) {
    fs::create_directories(dir_);
    const fs::path existing = dir_ / "manifest.json";
    if (fs::exists(existing)) {
        try {
            manifest_ = json::parse(io::read_bytes(existing));
        } catch (const json::exception&) {
            manifest_ = json::object();
        }
        // Artifacts from a different configuration are no longer described.
        if (manifest_.value("config_hash", "") != config_hash_ ||
            manifest_.value("seed", std::uint64_t{0}) != seed_)
            manifest_ = json::object();
    }
    manifest_["config_hash"] = config_hash_;
    manifest_["seed"] = seed_;
    if (!manifest_.contains("artifacts")) manifest_["artifacts"] = json::object();
    if (!manifest_.contains("status")) manifest_["status"] = "incomplete";
}

json ArtifactWriter::provenance() const {
    return {{"config_hash", config_hash_}, {"seed", seed_}};
}

void ArtifactWriter::record(const std::string& name) {
    const fs::path p = path(name);
    manifest_["artifacts"][name] = {{"bytes", fs::file_size(p)}, {"sha256", io::sha256_file(p)}};
    flush_manifest();
}

void ArtifactWriter::flush_manifest() const {
    io::write_text(dir_ / "manifest.json", manifest_.dump(2) + "\n");
}

void ArtifactWriter::set_status(const std::string& status) {
    manifest_["status"] = status;
    flush_manifest();
}

void ArtifactWriter::write_u16(const std::string& name, std::span<const std::uint16_t> words) {
    io::write_u16_le(path(name), words);
    record(name);
}

void ArtifactWriter::write_i16(const std::string& name, std::span<const std::int16_t> words) {
    io::write_i16_le(path(name), words);
    record(name);
}

void ArtifactWriter::write_bits(const std::string& name, const BitVector& bits) {
    io::write_bits(path(name), bits);
    record(name);
}

void ArtifactWriter::write_json(const std::string& name, json doc) {
    json full = {{"provenance", provenance()}};
    full.update(doc);
    io::write_text(path(name), full.dump(2) + "\n");
    record(name);
}

void ArtifactWriter::write_text(const std::string& name, const std::string& text) {
    io::write_text(path(name), text);
    record(name);
}

std::string trace_jsonl(const control::ClosedLoopRun& run, const json& header) {
    std::ostringstream out;
    out << header.dump() << '\n';
    for (const auto& r : run.trace) {
        out << json{{"block", r.index},        {"sum", r.sum},
                    {"dac_before", r.dac_before}, {"dac_after", r.dac_after},
                    {"locked", r.locked},      {"saturated", r.saturated()},
                    {"clipped", r.clipped}}
                   .dump()
            << '\n';
    }
    return out.str();
}

json entropy_json(const entropy::EntropyReport& r, const BudgetCheck& budget,
                  const PipelineConfig& cfg) {
    return {{"entropy",
             {{"sigma_m_sq", r.sigma_m_sq},
              {"sigma_e_sq", r.sigma_e_sq},
              {"sigma_q_sq", r.sigma_q_sq},
              {"h_min_per_sample", r.h_min_per_sample},
              {"bits_per_raw_bit", r.bits_per_raw_bit},
              {"sample_count", r.sample_count},
              {"discretized", cfg.run.discretized_entropy}}},
            {"extractor",
             {{"m", cfg.extraction.params.m},
              {"n", cfg.extraction.params.n},
              {"epsilon_log2", cfg.extraction.params.epsilon_log2},
              {"samples_per_block", cfg.samples_per_extractor_block()},
              {"budget", budget.budget},
              {"budget_ok", budget.ok}}}};
}

json verdict_json(const stats::SuiteVerdict& v) {
    json tests = json::array();
    for (const auto& t : v.tests)
        tests.push_back({{"test", t.test_name},
                         {"passed_sequences", t.passed_sequences},
                         {"proportion", t.proportion},
                         {"mean_p_value", t.mean_p_value},
                         {"min_p_value", t.min_p_value},
                         {"within_interval", t.within_interval},
                         {"passed", t.passed}});
    return {{"suite",
             {{"n_sequences", v.n_sequences},
              {"sequence_length", v.sequence_length},
              {"interval_lo", v.lo},
              {"interval_hi", v.hi},
              {"passed", v.passed},
              {"tests", tests}}}};
}

std::string verdict_table(const stats::SuiteVerdict& v) {
    std::string out = fmt::format("{:<20} {:>10} {:>12} {:>12}  {}\n", "test", "proportion",
                                  "mean p", "min p", "result");
    for (const auto& t : v.tests)
        out += fmt::format("{:<20} {:>10.4f} {:>12.6f} {:>12.6f}  {}\n", t.test_name, t.proportion,
                           t.mean_p_value, t.min_p_value, t.passed ? "PASS" : "FAIL");
    out += fmt::format("{} sequences x {} bits, proportion interval [{:.7f}, {:.7f}]: {}\n",
                       v.n_sequences, v.sequence_length, v.lo, v.hi,
                       v.passed ? "PASS" : "FAIL");
    return out;
}

// ---- stages -----------------------------------------------------------------

SimulationResult stage_simulate(const PipelineConfig& cfg, ArtifactWriter& out,
                                std::vector<std::string>& warnings) {
    SimulationResult sim = simulate(cfg);
    warnings.insert(warnings.end(), sim.signal.warnings.begin(), sim.signal.warnings.end());

    json header = {{"type", "header"},
                   {"provenance", out.provenance()},
                   {"stream_seed", sim.signal_seed},
                   {"block_size", cfg.controller.block_size_n},
                   {"interval", {cfg.controller.interval_a, cfg.controller.interval_b}}};
    out.write_text("trace.jsonl", trace_jsonl(sim.signal, header));
    out.write_u16("raw_codes.u16", all_codes(sim.signal));
    out.write_i16("centered.i16", usable_centered(sim.signal, cfg.run.exclude_saturated,
                                                  cfg.run.discard_unlocked));
    out.write_i16("noise_centered.i16", all_centered(sim.noise));
    return sim;
}

entropy::EntropyReport stage_estimate(std::span<const std::int16_t> signal_centered,
                                      std::span<const std::int16_t> noise_centered,
                                      const PipelineConfig& cfg, ArtifactWriter& out,
                                      BudgetCheck& budget, std::vector<std::string>& warnings) {
    const auto report = estimate(signal_centered, noise_centered, cfg);
    budget = check_budget(report, cfg);
    if (!budget.ok)
        warnings.push_back(fmt::format(
            "measured h_min = {:.4f} bits admits only {} output bits per block; m = {} exceeds it",
            report.h_min_per_sample, budget.budget, cfg.extraction.params.m));
    out.write_json("entropy_report.json", entropy_json(report, budget, cfg));
    if (budget.budget == 0)
        throw NoEntropyError(fmt::format(
            "measured h_min = {:.4f} bits leaves no extractable output at epsilon = 2^-{}",
            report.h_min_per_sample, cfg.extraction.params.epsilon_log2));
    return report;
}

BitVector stage_extract(std::span<const std::int16_t> centered, const PipelineConfig& cfg,
                        ArtifactWriter& out) {
    BitVector bits = extract_centered(centered, cfg);
    out.write_bits("extracted.bin", bits);
    return bits;
}

std::optional<stats::SuiteVerdict> stage_test(const BitVector& bits, const PipelineConfig& cfg,
                                              ArtifactWriter& out,
                                              std::vector<std::string>& warnings) {
    const std::size_t fit = bits.size() / cfg.suite.sequence_length;
    if (fit == 0) {
        warnings.push_back(fmt::format("only {} extracted bits; statistical suite skipped",
                                       bits.size()));
        return std::nullopt;
    }
    const std::size_t n_seq = std::min(fit, cfg.suite.n_sequences);
    if (n_seq < cfg.suite.n_sequences)
        warnings.push_back(fmt::format("statistical suite reduced to {} of {} sequences", n_seq,
                                       cfg.suite.n_sequences));
    auto verdict = stats::run_suite(bits.view(), cfg.suite.sequence_length, n_seq,
                                    cfg.suite.settings);
    out.write_json("verdict.json", verdict_json(verdict));
    out.write_text("verdict.txt", verdict_table(verdict));
    return verdict;
}

PipelineSummary run_pipeline(const PipelineConfig& cfg) {
    ArtifactWriter out(cfg.run.out_dir, cfg);
    PipelineSummary s;
    s.warnings = cfg.warnings;
    try {
        const SimulationResult sim = stage_simulate(cfg, out, s.warnings);
        s.lock = lock_stats(sim.signal.trace);
        const auto centered =
            usable_centered(sim.signal, cfg.run.exclude_saturated, cfg.run.discard_unlocked);
        s.usable_samples = centered.size();
        const auto noise = all_centered(sim.noise);
        s.entropy = stage_estimate(centered, noise, cfg, out, s.budget, s.warnings);
        const BitVector bits = stage_extract(centered, cfg, out);
        s.extracted_bits = bits.size();
        s.verdict = stage_test(bits, cfg, out, s.warnings);
    } catch (const std::exception& e) {
        out.set_status(std::string("failed: ") + e.what());
        throw;
    }
    out.set_status("complete");
    return s;
}

std::string summary_text(const PipelineSummary& s, const PipelineConfig& cfg) {
    std::string out;
    out += fmt::format("blocks simulated        {}\n", s.lock.blocks);
    out += fmt::format("locked blocks           {} ({:.2f}%), first at block {}\n", s.lock.locked,
                       100.0 * s.lock.locked_fraction, s.lock.first_locked);
    out += fmt::format("saturated blocks        {} ({} clipped samples)\n", s.lock.saturated_blocks,
                       s.lock.clipped_samples);
    out += fmt::format("usable samples          {}\n", s.usable_samples);
    out += fmt::format("sigma_M^2 / sigma_E^2   {:.2f} / {:.2f} counts^2\n", s.entropy.sigma_m_sq,
                       s.entropy.sigma_e_sq);
    out += fmt::format("H_min                   {:.4f} bits/sample (reference {:.2f})\n",
                       s.entropy.h_min_per_sample, published::kHMin);
    out += fmt::format("extractor               {} x {}, budget {} bits ({})\n",
                       cfg.extraction.params.m, cfg.extraction.params.n, s.budget.budget,
                       s.budget.ok ? "ok" : "EXCEEDED");
    out += fmt::format("extracted bits          {}\n", s.extracted_bits);
    if (s.verdict) {
        out += verdict_table(*s.verdict);
        const auto [lo, hi] = stats::pass_proportion_interval(cfg.suite.settings.beta, 1000);
        out += fmt::format("boundary at N = 1000     {:.7f} (reference {:.7f})\n", lo,
                           published::kProportionBoundary);
    }
    for (const auto& w : s.warnings) out += "warning: " + w + "\n";
    return out;
}

std::vector<ComparisonRow> published_comparison(const PipelineSummary& s,
                                                const PipelineConfig& cfg) {
    const auto& p = cfg.extraction.params;
    const auto [lo, hi] = stats::pass_proportion_interval(0.01, 1000);
    std::vector<ComparisonRow> rows = {
        {"sigma_M^2 (counts^2)", fmt::format("{:.4g}", published::kSigmaMSq),
         fmt::format("{:.4g}", s.entropy.sigma_m_sq)},
        {"sigma_E^2 (counts^2)", fmt::format("{:.2f}", published::kSigmaESq),
         fmt::format("{:.2f}", s.entropy.sigma_e_sq)},
        {"H_min (bits/sample)", fmt::format("{:.2f}", published::kHMin),
         fmt::format("{:.4f}", s.entropy.h_min_per_sample)},
        {"bits per raw bit", fmt::format("{:.2f}", published::kBitsPerRawBit),
         fmt::format("{:.4f}", s.entropy.bits_per_raw_bit)},
        {"Toeplitz m x n", fmt::format("{} x {}", published::kM, published::kN),
         fmt::format("{} x {} (budget {})", p.m, p.n, s.budget.budget)},
        {"security parameter", fmt::format("2^-{}", published::kEpsilonLog2),
         fmt::format("2^-{}", p.epsilon_log2)},
        {"output / input bits", fmt::format("{:.2f}", double(published::kM) / published::kN),
         fmt::format("{:.2f}", double(p.m) / p.n)},
        {"proportion boundary", fmt::format("{:.7f}", published::kProportionBoundary),
         fmt::format("{:.7f}", lo)},
        {"SUM within [A, B]", "stable", fmt::format("{:.2f}% of blocks", 100.0 * s.lock.locked_fraction)},
    };
    if (s.verdict)
        rows.push_back({"suite verdict", "all tests pass",
                        fmt::format("{} ({} x {} bits, 5 tests)", s.verdict->passed ? "pass" : "fail",
                                    s.verdict->n_sequences, s.verdict->sequence_length)});
    return rows;
}

}  // namespace qrng::pipeline
