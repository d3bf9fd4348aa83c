#include "qrng/toeplitz_extractor.hpp"

#include <algorithm>
#include <bit>
#include <random>
#include <thread>

#include "qrng/errors.hpp"

namespace qrng::extract {

void ExtractorParams::validate() const {
    if (m == 0 || m > n) throw ParameterError("extractor requires 0 < m <= n");
    if (sample_bits == 0 || sample_bits > 16)
        throw ParameterError("extractor sample_bits must lie in [1, 16]");
    if (epsilon_log2 < 0) throw ParameterError("epsilon_log2 must be >= 0");
}

void ToeplitzSeed::validate(const ExtractorParams& params) const {
    if (bits.size() != params.seed_length())
        throw ParameterError("Toeplitz seed has " + std::to_string(bits.size()) +
                             " bits, expected m + n - 1 = " +
                             std::to_string(params.seed_length()));
}

ToeplitzSeed deterministic_test_seed(const ExtractorParams& params, std::uint64_t seed) {
    params.validate();
    std::mt19937_64 gen(seed);
    ToeplitzSeed out;
    const std::size_t len = params.seed_length();
    out.bits.reserve(len);
    for (std::size_t pos = 0; pos < len; pos += 64)
        out.bits.append_bits(gen(), static_cast<unsigned>(std::min<std::size_t>(64, len - pos)));
    out.origin = "deterministic-test-generator:mt19937_64:" + std::to_string(seed);
    return out;
}

BitVector toeplitz_row(const ToeplitzSeed& seed, std::size_t i, const ExtractorParams& params) {
    params.validate();
    seed.validate(params);
    if (i >= params.m)
        throw ParameterError("row " + std::to_string(i) + " outside [0, " +
                             std::to_string(params.m) + ")");
    BitVector row(params.n);
    for (std::size_t j = 0; j < params.n; ++j) row.set(j, seed.bits[i - j + params.n - 1]);
    return row;
}

ToeplitzHasher::ToeplitzHasher(const ToeplitzSeed& seed, const ExtractorParams& params)
    : params_(params) {
    params_.validate();
    seed.validate(params_);
    input_words_ = (params_.n + 63) / 64;
    // Row m-1 reads words up to (m-1)/64 + input_words_ - 1.
    shifted_words_ = (params_.m - 1) / 64 + input_words_;
    shifted_.assign(64 * shifted_words_, 0);
    const BitView s = seed.bits.view();
    for (unsigned shift = 0; shift < 64; ++shift) {
        std::uint64_t* dst = shifted_.data() + shift * shifted_words_;
        for (std::size_t w = 0; w < shifted_words_; ++w) dst[w] = s.word_at(64 * w + shift);
    }
}

void ToeplitzHasher::hash(BitView input, BitVector& out) const {
    if (input.size() != params_.n)
        throw ParameterError("extractor input has " + std::to_string(input.size()) +
                             " bits, expected " + std::to_string(params_.n));

    // rev[k] = input[n - 1 - k]; bits beyond n stay zero and mask the seed tail.
    std::vector<std::uint64_t> rev(input_words_, 0);
    const std::size_t n = params_.n;
    for (std::size_t pos = 0; pos < n; pos += 64) {
        const std::size_t count = std::min<std::size_t>(64, n - pos);
        const std::uint64_t chunk = input.word_at(pos);
        // chunk bit t is input[pos + t] -> rev bit n - 1 - pos - t
        for (std::size_t t = 0; t < count; ++t) {
            if ((chunk >> t) & 1u) {
                const std::size_t k = n - 1 - pos - t;
                rev[k >> 6] |= std::uint64_t{1} << (k & 63);
            }
        }
    }

    std::uint64_t packed = 0;
    unsigned filled = 0;
    for (std::size_t i = 0; i < params_.m; ++i) {
        const std::uint64_t* row = shifted_.data() + (i & 63) * shifted_words_ + (i >> 6);
        std::uint64_t acc = 0;
        for (std::size_t w = 0; w < input_words_; ++w) acc ^= row[w] & rev[w];
        packed |= static_cast<std::uint64_t>(std::popcount(acc) & 1) << filled;
        if (++filled == 64) {
            out.append_bits(packed, 64);
            packed = 0;
            filled = 0;
        }
    }
    if (filled) out.append_bits(packed, filled);
}

BitVector ToeplitzHasher::hash(BitView input) const {
    BitVector out;
    out.reserve(params_.m);
    hash(input, out);
    return out;
}

BitVector extract_block(BitView input, const ToeplitzSeed& seed, const ExtractorParams& params) {
    return ToeplitzHasher(seed, params).hash(input);
}

BitVector pack_samples(std::span<const std::int16_t> samples, unsigned sample_bits) {
    if (sample_bits == 0 || sample_bits > 16)
        throw ParameterError("sample_bits must lie in [1, 16]");
    BitVector out;
    out.reserve(samples.size() * sample_bits);
    for (std::int16_t s : samples)
        out.append_bits(static_cast<std::uint16_t>(s), sample_bits);
    return out;
}

BitVector extract_bits(BitView input, const ToeplitzHasher& hasher, unsigned threads) {
    const std::size_t n = hasher.params().n;
    const std::size_t blocks = input.size() / n;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(blocks, 1)));

    auto run = [&](std::size_t first, std::size_t last, BitVector& out) {
        out.reserve((last - first) * hasher.params().m);
        for (std::size_t b = first; b < last; ++b) hasher.hash(input.subview(b * n, n), out);
    };

    if (threads == 1) {
        BitVector out;
        run(0, blocks, out);
        return out;
    }
    // Contiguous block ranges per worker, concatenated in order.
    std::vector<BitVector> parts(threads);
    {
        std::vector<std::jthread> workers;
        const std::size_t per = (blocks + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t first = std::min(blocks, t * per);
            const std::size_t last = std::min(blocks, first + per);
            workers.emplace_back(run, first, last, std::ref(parts[t]));
        }
    }
    BitVector out;
    out.reserve(blocks * hasher.params().m);
    for (const auto& p : parts) out.append(p.view());
    return out;
}

BitVector extract_stream(std::span<const std::int16_t> samples, const ToeplitzSeed& seed,
                         const ExtractorParams& params, unsigned threads) {
    const ToeplitzHasher hasher(seed, params);
    const BitVector packed = pack_samples(samples, params.sample_bits);
    return extract_bits(packed.view(), hasher, threads);
}

}  // namespace qrng::extract
