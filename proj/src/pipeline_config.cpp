#include "qrng/pipeline_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <yaml-cpp/yaml.h>

#include "qrng/artifact_io.hpp"
#include "qrng/entropy_estimator.hpp"
#include "qrng/errors.hpp"

namespace qrng::pipeline {

namespace {

// Reads the keys of one YAML mapping section, remembering which were seen so
// leftovers can be reported as unknown.
class Section {
public:
    Section(const YAML::Node& node, std::string name) : node_(node), name_(std::move(name)) {
        if (node_ && !node_.IsNull() && !node_.IsMap())
            throw ConfigError(name_, "expected a mapping");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!node_ || node_.IsNull()) return;
        const YAML::Node v = std::as_const(node_)[key];
        if (!v) return;
        try {
            out = v.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(path(key), "cannot parse value '" + YAML::Dump(v) + "'");
        }
    }

    Section sub(const char* key) {
        seen_.insert(key);
        if (!node_ || node_.IsNull()) return Section(YAML::Node(), path(key));
        return Section(std::as_const(node_)[key], path(key));
    }

    void reject_unknown() const {
        if (!node_ || node_.IsNull()) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.count(key)) throw ConfigError(path(key.c_str()), "unknown key");
        }
    }

private:
    std::string path(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

    YAML::Node node_;
    std::string name_;
    std::set<std::string> seen_;
};

template <class F>
void as_config_error(const std::string& field, F&& check) {
    try {
        check();
    } catch (const ParameterError& e) {
        throw ConfigError(field, e.what());
    }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, Stream stream) {
    // SplitMix64 finalizer applied to master + stream * golden gamma.
    std::uint64_t z = master + static_cast<std::uint64_t>(stream) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void PipelineConfig::validate() {
    warnings.clear();
    as_config_error("device", [&] { device.validate(); });
    as_config_error("chain", [&] { chain.validate(); });
    as_config_error("adc", [&] { adc.validate(); });
    as_config_error("dac", [&] { dac.validate(); });
    as_config_error("controller", [&] { controller.validate(); });
    as_config_error("extractor", [&] { extraction.params.validate(); });

    if (adc.bits > 15)
        throw ConfigError("adc.bits", "centered samples are stored as int16; at most 15 bits");
    if (controller.dac_bits_n != dac.bits)
        throw ConfigError("controller.dac_bits_n", "must equal dac.bits");
    if (std::abs(dac.v_range - 2.0 * device.v_pi) > 1e-9 * dac.v_range)
        warnings.push_back("dac.v_range (" + std::to_string(dac.v_range) +
                           " V) differs from 2 * v_pi; the DAC code range no longer spans 2 pi");

    const auto& ep = extraction.params;
    if (ep.n % ep.sample_bits != 0)
        throw ConfigError("extractor.n", "must be a multiple of extractor.sample_bits");
    try {
        const auto budget = entropy::extractor_budget_log2(
            extraction.h_min_assumed, static_cast<std::int64_t>(samples_per_extractor_block()),
            ep.epsilon_log2);
        if (static_cast<std::int64_t>(ep.m) > budget)
            throw ConfigError("extractor.m", "m = " + std::to_string(ep.m) +
                                                 " exceeds the leftover-hash budget of " +
                                                 std::to_string(budget) + " bits at h_min = " +
                                                 std::to_string(extraction.h_min_assumed));
    } catch (const NoEntropyError& e) {
        throw ConfigError("extractor.h_min_assumed", e.what());
    } catch (const ParameterError& e) {
        throw ConfigError("extractor", e.what());
    }

    if (!(suite.settings.beta > 0.0 && suite.settings.beta < 1.0))
        throw ConfigError("suite.beta", "must lie in (0, 1)");
    if (suite.sequence_length < 100) throw ConfigError("suite.sequence_length", "must be >= 100");
    if (suite.n_sequences < 1) throw ConfigError("suite.n_sequences", "must be >= 1");
    if (suite.settings.approximate_entropy_m + 1 > 24)
        throw ConfigError("suite.approximate_entropy_m", "must be <= 23");
    if (suite.settings.block_frequency_m < 1)
        throw ConfigError("suite.block_frequency_m", "must be >= 1");
    if (run.blocks < 1) throw ConfigError("run.blocks", "must be >= 1");
    if (run.noise_blocks < 1) throw ConfigError("run.noise_blocks", "must be >= 1");
}

PipelineConfig parse_config(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError("<file>", std::string("YAML parse error: ") + e.what());
    }

    PipelineConfig cfg;
    Section top(root, "");

    Section dev = top.sub("device");
    auto& d = cfg.device;
    dev.get("eta_ab1_db", d.eta_ab1_db);
    dev.get("eta_ab2_db", d.eta_ab2_db);
    dev.get("eta_pm_db", d.eta_pm_db);
    dev.get("eta_c1d1_db", d.eta_c1d1_db);
    dev.get("eta_c1d2_db", d.eta_c1d2_db);
    dev.get("eta_c2d1_db", d.eta_c2d1_db);
    dev.get("eta_c2d2_db", d.eta_c2d2_db);
    dev.get("g_pd1", d.g_pd1);
    dev.get("g_pd2", d.g_pd2);
    dev.get("v_pi", d.v_pi);
    dev.get("p_lo", d.p_lo);
    dev.reject_unknown();

    Section ch = top.sub("chain");
    ch.get("delta_phi_ambient", cfg.chain.delta_phi_ambient);
    ch.get("drift_rate_std", cfg.chain.drift_rate_std);
    ch.get("sigma_vac", cfg.chain.sigma_vac);
    ch.get("sigma_e", cfg.chain.sigma_e);
    ch.get("p_ref", cfg.chain.p_ref);
    ch.reject_unknown();

    Section adc = top.sub("adc");
    adc.get("bits", cfg.adc.bits);
    adc.get("v_range", cfg.adc.v_range);
    adc.get("sample_rate", cfg.adc.sample_rate);
    adc.reject_unknown();

    Section dac = top.sub("dac");
    dac.get("bits", cfg.dac.bits);
    dac.get("v_range", cfg.dac.v_range);
    dac.reject_unknown();

    Section ctl = top.sub("controller");
    auto& c = cfg.controller;
    c.dac_bits_n = cfg.dac.bits;
    ctl.get("block_size_n", c.block_size_n);
    ctl.get("interval_a", c.interval_a);
    ctl.get("interval_b", c.interval_b);
    ctl.get("step_c", c.step_c);
    ctl.get("dac_bits_n", c.dac_bits_n);
    ctl.get("dac_init", c.dac_init);
    ctl.get("invert_loop", c.invert_loop);
    ctl.reject_unknown();

    Section ex = top.sub("extractor");
    auto& e = cfg.extraction;
    ex.get("m", e.params.m);
    ex.get("n", e.params.n);
    ex.get("epsilon_log2", e.params.epsilon_log2);
    ex.get("sample_bits", e.params.sample_bits);
    ex.get("h_min_assumed", e.h_min_assumed);
    ex.get("seed_file", e.seed_file);
    ex.reject_unknown();

    Section su = top.sub("suite");
    su.get("beta", cfg.suite.settings.beta);
    su.get("block_frequency_m", cfg.suite.settings.block_frequency_m);
    su.get("approximate_entropy_m", cfg.suite.settings.approximate_entropy_m);
    su.get("sequence_length", cfg.suite.sequence_length);
    su.get("n_sequences", cfg.suite.n_sequences);
    su.reject_unknown();

    Section rn = top.sub("run");
    rn.get("seed", cfg.run.seed);
    rn.get("blocks", cfg.run.blocks);
    rn.get("noise_blocks", cfg.run.noise_blocks);
    rn.get("out_dir", cfg.run.out_dir);
    rn.get("exclude_saturated", cfg.run.exclude_saturated);
    rn.get("discard_unlocked", cfg.run.discard_unlocked);
    rn.get("discretized_entropy", cfg.run.discretized_entropy);
    rn.get("threads", cfg.run.threads);
    rn.reject_unknown();

    top.reject_unknown();
    cfg.suite.settings.threads = cfg.run.threads;
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

nlohmann::json PipelineConfig::to_json() const {
    const auto& d = device;
    const auto& e = extraction;
    return {
        {"device",
         {{"eta_ab1_db", d.eta_ab1_db}, {"eta_ab2_db", d.eta_ab2_db}, {"eta_pm_db", d.eta_pm_db},
          {"eta_c1d1_db", d.eta_c1d1_db}, {"eta_c1d2_db", d.eta_c1d2_db},
          {"eta_c2d1_db", d.eta_c2d1_db}, {"eta_c2d2_db", d.eta_c2d2_db}, {"g_pd1", d.g_pd1},
          {"g_pd2", d.g_pd2}, {"v_pi", d.v_pi}, {"p_lo", d.p_lo}}},
        {"chain",
         {{"delta_phi_ambient", chain.delta_phi_ambient},
          {"drift_rate_std", chain.drift_rate_std},
          {"sigma_vac", chain.sigma_vac},
          {"sigma_e", chain.sigma_e},
          {"p_ref", chain.p_ref}}},
        {"adc", {{"bits", adc.bits}, {"v_range", adc.v_range}, {"sample_rate", adc.sample_rate}}},
        {"dac", {{"bits", dac.bits}, {"v_range", dac.v_range}}},
        {"controller",
         {{"block_size_n", controller.block_size_n},
          {"interval_a", controller.interval_a},
          {"interval_b", controller.interval_b},
          {"step_c", controller.step_c},
          {"dac_bits_n", controller.dac_bits_n},
          {"dac_init", controller.dac_init},
          {"invert_loop", controller.invert_loop}}},
        {"extractor",
         {{"m", e.params.m}, {"n", e.params.n}, {"epsilon_log2", e.params.epsilon_log2},
          {"sample_bits", e.params.sample_bits}, {"h_min_assumed", e.h_min_assumed},
          {"seed_file", e.seed_file}}},
        {"suite",
         {{"beta", suite.settings.beta},
          {"block_frequency_m", suite.settings.block_frequency_m},
          {"approximate_entropy_m", suite.settings.approximate_entropy_m},
          {"sequence_length", suite.sequence_length},
          {"n_sequences", suite.n_sequences}}},
        // threads and out_dir do not change results and are left out of the hash.
        {"run",
         {{"seed", run.seed},
          {"blocks", run.blocks},
          {"noise_blocks", run.noise_blocks},
          {"exclude_saturated", run.exclude_saturated},
          {"discard_unlocked", run.discard_unlocked},
          {"discretized_entropy", run.discretized_entropy}}},
    };
}

std::string PipelineConfig::hash() const { return io::sha256_hex(to_json().dump()); }

}  // namespace qrng::pipeline
