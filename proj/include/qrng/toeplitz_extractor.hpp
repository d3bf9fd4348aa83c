#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qrng/bits.hpp"

namespace qrng::extract {

struct ExtractorParams {
    std::size_t m = 1920;  // output bits per block
    std::size_t n = 2400;  // input bits per block
    int epsilon_log2 = 48;
    unsigned sample_bits = 12;  // low bits taken from each centered sample

    void validate() const;
    std::size_t seed_length() const noexcept { return m + n - 1; }
};

/// Seed of an m x n Toeplitz matrix: m + n - 1 bits, reused for every block.
struct ToeplitzSeed {
    BitVector bits;
    std::string origin;

    void validate(const ExtractorParams& params) const;
};

/// Deterministic test seed from a 64-bit value; not a source of true randomness.
ToeplitzSeed deterministic_test_seed(const ExtractorParams& params, std::uint64_t seed);

/// Row i of the matrix; entry (i, j) = seed[i - j + n - 1].
BitVector toeplitz_row(const ToeplitzSeed& seed, std::size_t i, const ExtractorParams& params);

/// Word-parallel Toeplitz hash with the seed expanded once.
///
/// Row i dotted with the input equals the dot product of seed[i .. i+n)
/// with the bit-reversed input, so each row is a run of 64-bit AND/XOR
/// over one of 64 pre-shifted copies of the seed.
class ToeplitzHasher {
public:
    ToeplitzHasher(const ToeplitzSeed& seed, const ExtractorParams& params);

    const ExtractorParams& params() const noexcept { return params_; }

    /// Hashes exactly n input bits into m output bits appended to `out`.
    void hash(BitView input, BitVector& out) const;
    BitVector hash(BitView input) const;

private:
    ExtractorParams params_;
    std::size_t input_words_;
    std::size_t shifted_words_;
    std::vector<std::uint64_t> shifted_;  // 64 copies, seed >> s
};

BitVector extract_block(BitView input, const ToeplitzSeed& seed, const ExtractorParams& params);

/// Packs the low `sample_bits` of each sample (two's complement), LSB
/// first, samples in order.
BitVector pack_samples(std::span<const std::int16_t> samples, unsigned sample_bits);

/// Hashes every complete n-bit block of the packed samples; a trailing
/// partial block is dropped. `threads` = 0 uses the hardware concurrency.
BitVector extract_stream(std::span<const std::int16_t> samples, const ToeplitzSeed& seed,
                         const ExtractorParams& params, unsigned threads = 1);

BitVector extract_bits(BitView input, const ToeplitzHasher& hasher, unsigned threads = 1);

}  // namespace qrng::extract
