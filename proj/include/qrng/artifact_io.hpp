#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qrng/bits.hpp"
#include "qrng/toeplitz_extractor.hpp"

namespace qrng::io {

// Raw ADC codes: little-endian unsigned 16-bit words.
void write_u16_le(const std::filesystem::path& path, std::span<const std::uint16_t> words);
std::vector<std::uint16_t> read_u16_le(const std::filesystem::path& path);

// Centered samples: little-endian signed 16-bit words, half-LSB units.
void write_i16_le(const std::filesystem::path& path, std::span<const std::int16_t> words);
std::vector<std::int16_t> read_i16_le(const std::filesystem::path& path);

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

/// Packed bits, first bit in the least significant bit of the first byte.
void write_bits(const std::filesystem::path& path, const BitVector& bits);
BitVector read_bits(const std::filesystem::path& path);

/// Seed files use the packed-bit layout and must hold exactly
/// ceil((m + n - 1) / 8) bytes with zero padding bits.
extract::ToeplitzSeed read_seed_file(const std::filesystem::path& path,
                                     const extract::ExtractorParams& params);
void write_seed_file(const std::filesystem::path& path, const extract::ToeplitzSeed& seed);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(const std::string& text);
std::string sha256_file(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace qrng::io
