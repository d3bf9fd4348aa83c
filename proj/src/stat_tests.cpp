#include "qrng/stat_tests.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <thread>

#include <boost/math/special_functions/gamma.hpp>

#include "qrng/errors.hpp"

namespace qrng::stats {

namespace {

constexpr std::size_t kMinBits = 100;

void require_bits(BitView bits, const char* test) {
    if (bits.size() < kMinBits)
        throw ParameterError(std::string(test) + " needs at least 100 bits, got " +
                             std::to_string(bits.size()));
}

void require_beta(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw ParameterError("beta must lie in (0, 1)");
}

TestOutcome outcome(std::string name, double p, double beta) {
    p = std::clamp(p, 0.0, 1.0);
    return {std::move(name), p, p > beta};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double igamc(double a, double x) {
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(a, x);
}

}  // namespace

TestOutcome monobit_test(BitView bits, double beta) {
    require_bits(bits, "monobit_test");
    require_beta(beta);
    const auto n = static_cast<double>(bits.size());
    const double s = 2.0 * static_cast<double>(bits.popcount()) - n;
    return outcome("Frequency", std::erfc(std::abs(s) / std::sqrt(2.0 * n)), beta);
}

TestOutcome block_frequency_test(BitView bits, std::size_t block_size, double beta) {
    require_bits(bits, "block_frequency_test");
    require_beta(beta);
    if (block_size == 0 || block_size > bits.size())
        throw ParameterError("block_frequency_test block size must lie in [1, n]");
    const std::size_t blocks = bits.size() / block_size;
    double chi = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        const double pi = static_cast<double>(bits.subview(b * block_size, block_size).popcount()) /
                          static_cast<double>(block_size);
        chi += (pi - 0.5) * (pi - 0.5);
    }
    chi *= 4.0 * static_cast<double>(block_size);
    return outcome("BlockFrequency", igamc(blocks / 2.0, chi / 2.0), beta);
}

TestOutcome runs_test(BitView bits, double beta) {
    require_bits(bits, "runs_test");
    require_beta(beta);
    const std::size_t n = bits.size();
    const double nd = static_cast<double>(n);
    const double pi = static_cast<double>(bits.popcount()) / nd;
    if (std::abs(pi - 0.5) >= 2.0 / std::sqrt(nd)) return outcome("Runs", 0.0, beta);

    // Transitions: popcount of x ^ (x >> 1) over each aligned 64-bit chunk.
    std::size_t changes = 0;
    for (std::size_t pos = 0; pos + 1 < n; pos += 64) {
        const std::uint64_t a = bits.word_at(pos);
        const std::uint64_t b = bits.word_at(pos + 1);
        std::uint64_t diff = a ^ b;
        const std::size_t valid = std::min<std::size_t>(64, n - 1 - pos);
        if (valid < 64) diff &= (std::uint64_t{1} << valid) - 1;
        changes += std::popcount(diff);
    }
    const double v = 1.0 + static_cast<double>(changes);
    const double num = std::abs(v - 2.0 * nd * pi * (1.0 - pi));
    const double den = 2.0 * std::sqrt(2.0 * nd) * pi * (1.0 - pi);
    return outcome("Runs", std::erfc(num / den), beta);
}

TestOutcome cumulative_sums_test(BitView bits, CusumMode mode, double beta) {
    require_bits(bits, "cumulative_sums_test");
    require_beta(beta);
    const std::size_t size = bits.size();
    long long s = 0;
    long long z = 0;
    for (std::size_t k = 0; k < size; ++k) {
        const bool b = mode == CusumMode::forward ? bits[k] : bits[size - 1 - k];
        s += b ? 1 : -1;
        z = std::max(z, s < 0 ? -s : s);
    }
    // Integer division truncating toward zero, as in the reference code.
    const long long n = static_cast<long long>(size);
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    double sum1 = 0.0;
    for (long long k = (-n / z + 1) / 4; k <= (n / z - 1) / 4; ++k)
        sum1 += normal_cdf((4 * k + 1) * z / sqrt_n) - normal_cdf((4 * k - 1) * z / sqrt_n);
    double sum2 = 0.0;
    for (long long k = (-n / z - 3) / 4; k <= (n / z - 1) / 4; ++k)
        sum2 += normal_cdf((4 * k + 3) * z / sqrt_n) - normal_cdf((4 * k + 1) * z / sqrt_n);
    const char* name = mode == CusumMode::forward ? "CumulativeSums" : "CumulativeSumsReverse";
    return outcome(name, 1.0 - sum1 + sum2, beta);
}

namespace {

// sum over observed patterns of pi * ln(pi) for overlapping m-bit windows
// of the sequence extended by its first m-1 bits.
double pattern_phi(BitView bits, unsigned m) {
    if (m == 0) return 0.0;
    const std::size_t n = bits.size();
    const std::uint32_t mask = (std::uint32_t{1} << m) - 1;
    std::vector<std::uint32_t> counts(std::size_t{1} << m, 0);
    std::uint32_t window = 0;
    // Prime with the first m-1 bits, then slide across n + m - 1 bits.
    for (unsigned i = 0; i + 1 < m; ++i) window = (window << 1) | bits[i % n];
    for (std::size_t i = m - 1; i < n + m - 1; ++i) {
        window = ((window << 1) | bits[i % n]) & mask;
        ++counts[window];
    }
    const double nd = static_cast<double>(n);
    double phi = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = c / nd;
        phi += p * std::log(p);
    }
    return phi;
}

}  // namespace

TestOutcome approximate_entropy_test(BitView bits, unsigned m, double beta) {
    require_bits(bits, "approximate_entropy_test");
    require_beta(beta);
    if (m + 1 > 24) throw ParameterError("approximate_entropy_test block length too large");
    const double n = static_cast<double>(bits.size());
    const double apen = pattern_phi(bits, m) - pattern_phi(bits, m + 1);
    const double chi = 2.0 * n * (std::numbers::ln2 - apen);
    return outcome("ApproximateEntropy", igamc(std::ldexp(1.0, static_cast<int>(m) - 1), chi / 2.0),
                   beta);
}

std::pair<double, double> pass_proportion_interval(double beta, std::int64_t n_sequences) {
    require_beta(beta);
    if (n_sequences < 1) throw ParameterError("n_sequences must be >= 1");
    const double half = 3.0 * std::sqrt((1.0 - beta) * beta / static_cast<double>(n_sequences));
    return {1.0 - beta - half, 1.0 - beta + half};
}

std::vector<TestOutcome> run_all_tests(BitView sequence, const SuiteSettings& s) {
    return {monobit_test(sequence, s.beta),
            block_frequency_test(sequence, s.block_frequency_m, s.beta),
            runs_test(sequence, s.beta),
            cumulative_sums_test(sequence, CusumMode::forward, s.beta),
            approximate_entropy_test(sequence, s.approximate_entropy_m, s.beta)};
}

SuiteVerdict run_suite(BitView bitstream, std::size_t sequence_length, std::size_t n_sequences,
                       const SuiteSettings& settings) {
    require_beta(settings.beta);
    if (n_sequences == 0) throw ParameterError("run_suite needs at least one sequence");
    if (sequence_length < kMinBits) throw ParameterError("sequence_length must be >= 100");
    if (bitstream.size() / sequence_length < n_sequences)
        throw DataError("run_suite needs " + std::to_string(n_sequences * sequence_length) +
                        " bits, stream holds " + std::to_string(bitstream.size()));

    std::vector<std::vector<TestOutcome>> results(n_sequences);
    auto work = [&](std::size_t first, std::size_t last) {
        for (std::size_t i = first; i < last; ++i)
            results[i] = run_all_tests(bitstream.subview(i * sequence_length, sequence_length),
                                       settings);
    };
    unsigned threads = settings.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                             : settings.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_sequences));
    if (threads <= 1) {
        work(0, n_sequences);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t per = (n_sequences + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(work, std::min(n_sequences, t * per),
                              std::min(n_sequences, (t + 1) * per));
    }

    SuiteVerdict v;
    v.n_sequences = n_sequences;
    v.sequence_length = sequence_length;
    std::tie(v.lo, v.hi) = pass_proportion_interval(settings.beta,
                                                    static_cast<std::int64_t>(n_sequences));
    const std::size_t n_tests = results.front().size();
    v.passed = true;
    for (std::size_t t = 0; t < n_tests; ++t) {
        TestSummary s;
        s.test_name = results.front()[t].test_name;
        double p_sum = 0.0;
        for (const auto& r : results) {
            s.passed_sequences += r[t].passed;
            p_sum += r[t].p_value;
            s.min_p_value = std::min(s.min_p_value, r[t].p_value);
        }
        s.proportion = static_cast<double>(s.passed_sequences) / n_sequences;
        s.mean_p_value = p_sum / n_sequences;
        s.within_interval = s.proportion >= v.lo && s.proportion <= v.hi;
        s.passed = s.proportion >= v.lo;
        v.passed = v.passed && s.passed;
        v.tests.push_back(std::move(s));
    }
    return v;
}

}  // namespace qrng::stats
