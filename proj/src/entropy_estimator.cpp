#include "qrng/entropy_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qrng/errors.hpp"

namespace qrng::entropy {

namespace {

template <class T>
double two_pass_variance(std::span<const T> values) {
    if (values.size() < 2) throw ParameterError("sample_variance needs at least 2 values");
    double mean = 0.0;
    for (auto v : values) mean += static_cast<double>(v);
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    double comp = 0.0;  // corrected two-pass term
    for (auto v : values) {
        const double d = static_cast<double>(v) - mean;
        ss += d * d;
        comp += d;
    }
    const double n = static_cast<double>(values.size());
    return (ss - comp * comp / n) / (n - 1.0);
}

void require_positive_quantum(double sigma_m_sq, double sigma_e_sq) {
    if (!(sigma_e_sq >= 0.0)) throw ParameterError("sigma_e_sq must be >= 0");
    if (!(sigma_m_sq > sigma_e_sq))
        throw NoEntropyError("measured variance " + std::to_string(sigma_m_sq) +
                             " does not exceed the classical-noise variance " +
                             std::to_string(sigma_e_sq));
}

}  // namespace

double sample_variance(std::span<const double> values) { return two_pass_variance(values); }

double sample_variance(std::span<const std::int16_t> values) {
    return two_pass_variance(values);
}

double centered_variance_counts(std::span<const std::int16_t> half_lsb_values) {
    return two_pass_variance(half_lsb_values) / 4.0;
}

double min_entropy(double sigma_m_sq, double sigma_e_sq) {
    require_positive_quantum(sigma_m_sq, sigma_e_sq);
    return 0.5 * std::log2(2.0 * std::numbers::pi * (sigma_m_sq - sigma_e_sq));
}

double min_entropy_discretized(double sigma_m_sq, double sigma_e_sq) {
    require_positive_quantum(sigma_m_sq, sigma_e_sq);
    const double sigma_q = std::sqrt(sigma_m_sq - sigma_e_sq);
    // Most likely code is the one centred on the mean: P = erf(1 / (2 sqrt(2) sigma)).
    const double p_max = std::erf(0.5 / (std::numbers::sqrt2 * sigma_q));
    return -std::log2(p_max);
}

std::int64_t extractor_budget(double h_min_per_sample, std::int64_t samples_per_block,
                              double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw ParameterError("epsilon must lie in (0, 1]");
    if (!(h_min_per_sample > 0.0)) throw NoEntropyError("min-entropy must be positive");
    if (samples_per_block < 1) throw ParameterError("samples_per_block must be >= 1");
    const double k = static_cast<double>(samples_per_block) * h_min_per_sample;
    const double raw = k - 2.0 * std::log2(1.0 / epsilon);
    // Absorb representation error of decimal inputs such as 10.08 * 200.
    const auto m = static_cast<std::int64_t>(std::floor(raw + 1e-9 * std::abs(k)));
    if (m <= 0)
        throw NoEntropyError("extractable budget " + std::to_string(raw) + " bits is not positive");
    return m;
}

std::int64_t extractor_budget_log2(double h_min_per_sample, std::int64_t samples_per_block,
                                   int epsilon_log2) {
    if (epsilon_log2 < 0) throw ParameterError("epsilon exponent must be >= 0");
    return extractor_budget(h_min_per_sample, samples_per_block, std::ldexp(1.0, -epsilon_log2));
}

EntropyReport make_report(double sigma_m_sq, double sigma_e_sq, int adc_bits,
                          std::uint64_t sample_count, bool discretized) {
    EntropyReport r;
    r.sigma_m_sq = sigma_m_sq;
    r.sigma_e_sq = sigma_e_sq;
    r.sigma_q_sq = sigma_m_sq - sigma_e_sq;
    r.h_min_per_sample = discretized ? min_entropy_discretized(sigma_m_sq, sigma_e_sq)
                                     : min_entropy(sigma_m_sq, sigma_e_sq);
    r.bits_per_raw_bit = std::clamp(r.h_min_per_sample / adc_bits, 0.0, 1.0);
    r.sample_count = sample_count;
    return r;
}

}  // namespace qrng::entropy
