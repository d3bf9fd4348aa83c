#pragma once

#include <cstdint>
#include <span>

namespace qrng::entropy {

/// Variances in ADC counts^2 and the min-entropy derived from them.
struct EntropyReport {
    double sigma_m_sq = 0.0;  // LO on
    double sigma_e_sq = 0.0;  // LO off
    double sigma_q_sq = 0.0;  // sigma_m_sq - sigma_e_sq
    double h_min_per_sample = 0.0;
    double bits_per_raw_bit = 0.0;
    std::uint64_t sample_count = 0;
};

/// Unbiased (n - 1) sample variance, two-pass.
double sample_variance(std::span<const double> values);
double sample_variance(std::span<const std::int16_t> values);

/// Same as sample_variance but for half-LSB centered samples, reported in
/// LSB^2 (divides by 4).
double centered_variance_counts(std::span<const std::int16_t> half_lsb_values);

/// Conditional min-entropy of a Gaussian measurement given Gaussian
/// classical noise: (1/2) log2(2 pi (sigma_m^2 - sigma_e^2)) bits per sample.
double min_entropy(double sigma_m_sq, double sigma_e_sq);

/// Variant that treats the quantum part as a Gaussian binned on unit-width
/// ADC codes: -log2 of the most likely bin's probability.
double min_entropy_discretized(double sigma_m_sq, double sigma_e_sq);

/// Largest output length admitted by the leftover hash lemma,
/// floor(samples * h - 2 log2(1/epsilon)).
std::int64_t extractor_budget(double h_min_per_sample, std::int64_t samples_per_block,
                              double epsilon);

/// Convenience overload with epsilon = 2^-epsilon_log2.
std::int64_t extractor_budget_log2(double h_min_per_sample, std::int64_t samples_per_block,
                                   int epsilon_log2);

EntropyReport make_report(double sigma_m_sq, double sigma_e_sq, int adc_bits,
                          std::uint64_t sample_count, bool discretized = false);

}  // namespace qrng::entropy
