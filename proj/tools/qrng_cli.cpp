// qrng: command-line front end for the simulator / extractor pipeline.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qrng/artifact_io.hpp"
#include "qrng/errors.hpp"
#include "qrng/pipeline.hpp"

namespace {

using namespace qrng;
namespace pl = qrng::pipeline;

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kConfigError = 2,
    kDataError = 3,
    kNoEntropy = 4,
    kVerdictFailed = 5,
};

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<std::size_t> blocks;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
};

pl::PipelineConfig resolve_config(const GlobalOptions& g, bool published_setup = false) {
    pl::PipelineConfig cfg =
        g.config.empty() || published_setup ? pl::parse_config("") : pl::load_config(g.config);
    if (g.seed) cfg.run.seed = *g.seed;
    if (g.samples) {
        const auto n = static_cast<std::size_t>(cfg.controller.block_size_n);
        cfg.run.blocks = (*g.samples + n - 1) / n;
    }
    if (g.blocks) cfg.run.blocks = *g.blocks;
    if (g.out) cfg.run.out_dir = *g.out;
    if (g.threads) {
        cfg.run.threads = *g.threads;
        cfg.suite.settings.threads = *g.threads;
    }
    cfg.validate();
    for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
    return cfg;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_simulate(const GlobalOptions& g) {
    const auto cfg = resolve_config(g);
    pl::ArtifactWriter out(cfg.run.out_dir, cfg);
    std::vector<std::string> warnings;
    const auto sim = pl::stage_simulate(cfg, out, warnings);
    const auto lock = pl::lock_stats(sim.signal.trace);
    out.set_status("simulated");
    fmt::print("simulated {} LO-on and {} LO-off blocks into {}\n", sim.signal.blocks.size(),
               sim.noise.blocks.size(), cfg.run.out_dir);
    fmt::print("locked {:.2f}% of blocks, {} saturated blocks, first lock at block {}\n",
               100.0 * lock.locked_fraction, lock.saturated_blocks, lock.first_locked);
    print_warnings(warnings);
    return kOk;
}

int cmd_estimate(const GlobalOptions& g, const std::string& signal, const std::string& noise) {
    const auto cfg = resolve_config(g);
    pl::ArtifactWriter out(cfg.run.out_dir, cfg);
    const auto s = io::read_i16_le(signal.empty() ? out.path("centered.i16") : std::filesystem::path(signal));
    const auto e = io::read_i16_le(noise.empty() ? out.path("noise_centered.i16") : std::filesystem::path(noise));
    std::vector<std::string> warnings;
    pl::BudgetCheck budget;
    const auto r = pl::stage_estimate(s, e, cfg, out, budget, warnings);
    fmt::print("sigma_M^2        {:.2f} counts^2\n", r.sigma_m_sq);
    fmt::print("sigma_E^2        {:.2f} counts^2\n", r.sigma_e_sq);
    fmt::print("sigma_Q^2        {:.2f} counts^2\n", r.sigma_q_sq);
    fmt::print("H_min            {:.4f} bits/sample\n", r.h_min_per_sample);
    fmt::print("bits per raw bit {:.4f}\n", r.bits_per_raw_bit);
    fmt::print("budget           {} bits per {}-bit block ({})\n", budget.budget,
               cfg.extraction.params.n, budget.ok ? "ok" : "EXCEEDED");
    print_warnings(warnings);
    return kOk;
}

int cmd_extract(const GlobalOptions& g, const std::string& input, const std::string& seed_file) {
    auto cfg = resolve_config(g);
    if (!seed_file.empty()) cfg.extraction.seed_file = seed_file;
    pl::ArtifactWriter out(cfg.run.out_dir, cfg);
    const auto centered = io::read_i16_le(input.empty() ? out.path("centered.i16") : std::filesystem::path(input));
    const auto bits = pl::stage_extract(centered, cfg, out);
    fmt::print("extracted {} bits from {} samples into {}\n", bits.size(), centered.size(),
               out.path("extracted.bin").string());
    return kOk;
}

int cmd_test(const GlobalOptions& g, const std::string& bits_file,
             std::optional<std::size_t> sequences, std::optional<std::size_t> length) {
    auto cfg = resolve_config(g);
    if (sequences) cfg.suite.n_sequences = *sequences;
    if (length) cfg.suite.sequence_length = *length;
    pl::ArtifactWriter out(cfg.run.out_dir, cfg);
    const auto bits = io::read_bits(bits_file.empty() ? out.path("extracted.bin") : std::filesystem::path(bits_file));
    const auto verdict = stats::run_suite(bits.view(), cfg.suite.sequence_length,
                                          cfg.suite.n_sequences, cfg.suite.settings);
    out.write_json("verdict.json", pl::verdict_json(verdict));
    out.write_text("verdict.txt", pl::verdict_table(verdict));
    fmt::print("{}", pl::verdict_table(verdict));
    return verdict.passed ? kOk : kVerdictFailed;
}

int cmd_all(const GlobalOptions& g) {
    const auto cfg = resolve_config(g);
    const auto summary = pl::run_pipeline(cfg);
    fmt::print("{}", pl::summary_text(summary, cfg));
    return summary.verdict && !summary.verdict->passed ? kVerdictFailed : kOk;
}

int cmd_paper_repro(const GlobalOptions& g) {
    const auto cfg = resolve_config(g, true);
    const auto summary = pl::run_pipeline(cfg);
    fmt::print("{:<24} {:>16} {:>36}\n", "quantity", "published", "simulated");
    for (const auto& row : pl::published_comparison(summary, cfg))
        fmt::print("{:<24} {:>16} {:>36}\n", row.quantity, row.published, row.simulated);
    print_warnings(summary.warnings);
    return kOk;
}

int cmd_benchmark(const GlobalOptions& g, std::size_t blocks) {
    const auto cfg = resolve_config(g);
    const auto& p = cfg.extraction.params;
    const auto seed = pl::extractor_seed(cfg);
    const extract::ToeplitzHasher hasher(seed, p);

    std::mt19937_64 gen(cfg.run.seed);
    BitVector input;
    input.reserve(blocks * p.n);
    for (std::size_t i = 0; i < blocks * p.n; i += 64)
        input.append_bits(gen(), static_cast<unsigned>(std::min<std::size_t>(64, blocks * p.n - i)));

    auto time_run = [&](unsigned threads) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto out = extract::extract_bits(input.view(), hasher, threads);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return std::pair{secs, out.size()};
    };
    time_run(1);  // warm caches
    const auto [single, out_bits] = time_run(1);
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const auto [multi, out_bits_mt] = time_run(cfg.run.threads ? cfg.run.threads : hw);

    fmt::print("Toeplitz {} x {}, {} blocks ({} input bits)\n", p.m, p.n, blocks, input.size());
    fmt::print("1 thread      {:9.3f} s  {:9.2f} Mbit/s in  {:9.2f} Mbit/s out\n", single,
               input.size() / single / 1e6, out_bits / single / 1e6);
    fmt::print("{:<2} thread(s)  {:9.3f} s  {:9.2f} Mbit/s in  {:9.2f} Mbit/s out\n",
               cfg.run.threads ? cfg.run.threads : hw, multi, input.size() / multi / 1e6,
               out_bits_mt / multi / 1e6);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vacuum-fluctuation QRNG simulator, entropy estimator and Toeplitz extractor"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--config", g.config, "YAML configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "master seed (overrides run.seed)");
    app.add_option("--samples", g.samples, "LO-on samples to simulate (rounded up to blocks)");
    app.add_option("--blocks", g.blocks, "LO-on compensation blocks (overrides --samples)");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--threads", g.threads, "worker threads for extraction and testing (0 = all)");

    auto* simulate = app.add_subcommand("simulate", "closed-loop LO-on run and LO-off noise run");
    auto* estimate = app.add_subcommand("estimate", "variances and min-entropy from centered samples");
    std::string signal_file, noise_file;
    estimate->add_option("--signal", signal_file, "LO-on centered samples (int16 LE)");
    estimate->add_option("--noise", noise_file, "LO-off centered samples (int16 LE)");

    auto* extract_cmd = app.add_subcommand("extract", "Toeplitz extraction of centered samples");
    std::string input_file, seed_file;
    extract_cmd->add_option("--input", input_file, "centered samples (int16 LE)");
    extract_cmd->add_option("--seed-file", seed_file, "packed Toeplitz seed");

    auto* test = app.add_subcommand("test", "statistical suite on a packed bit file");
    std::string bits_file;
    std::optional<std::size_t> sequences, length;
    test->add_option("--bits", bits_file, "packed bits (LSB first)");
    test->add_option("--sequences", sequences, "number of sequences");
    test->add_option("--length", length, "bits per sequence");

    auto* all = app.add_subcommand("all", "simulate, estimate, extract and test");
    auto* repro = app.add_subcommand("paper-repro",
                                     "reference setup end to end with a published-vs-simulated table");
    auto* bench = app.add_subcommand("benchmark", "extraction throughput");
    std::size_t bench_blocks = 20000;
    bench->add_option("--hash-blocks", bench_blocks, "blocks to hash")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) return cmd_simulate(g);
        if (*estimate) return cmd_estimate(g, signal_file, noise_file);
        if (*extract_cmd) return cmd_extract(g, input_file, seed_file);
        if (*test) return cmd_test(g, bits_file, sequences, length);
        if (*all) return cmd_all(g);
        if (*repro) return cmd_paper_repro(g);
        if (*bench) return cmd_benchmark(g, bench_blocks);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << '\n';
        return kConfigError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const NoEntropyError& e) {
        std::cerr << "no extractable entropy: " << e.what() << '\n';
        return kNoEntropy;
    } catch (const DegenerateDeviceError& e) {
        std::cerr << "degenerate device: " << e.what() << '\n';
        return kNoEntropy;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}
