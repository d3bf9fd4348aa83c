#include "qrng/artifact_io.hpp"

#include <fstream>
#include <iomanip>
#include <iterator>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "qrng/errors.hpp"

namespace qrng::io {

namespace fs = std::filesystem;

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write to " + path.string() + " failed");
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
    write_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void write_u16_le(const fs::path& path, std::span<const std::uint16_t> words) {
    std::vector<std::uint8_t> buf;
    buf.reserve(2 * words.size());
    for (auto w : words) {
        buf.push_back(static_cast<std::uint8_t>(w & 0xFF));
        buf.push_back(static_cast<std::uint8_t>(w >> 8));
    }
    write_bytes(path, buf);
}

std::vector<std::uint16_t> read_u16_le(const fs::path& path) {
    const auto buf = read_bytes(path);
    if (buf.size() % 2) throw DataError(path.string() + ": odd byte count for 16-bit words");
    std::vector<std::uint16_t> words(buf.size() / 2);
    for (std::size_t i = 0; i < words.size(); ++i)
        words[i] = static_cast<std::uint16_t>(buf[2 * i] | (buf[2 * i + 1] << 8));
    return words;
}

void write_i16_le(const fs::path& path, std::span<const std::int16_t> words) {
    std::vector<std::uint16_t> raw(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) raw[i] = static_cast<std::uint16_t>(words[i]);
    write_u16_le(path, raw);
}

std::vector<std::int16_t> read_i16_le(const fs::path& path) {
    const auto raw = read_u16_le(path);
    std::vector<std::int16_t> words(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) words[i] = static_cast<std::int16_t>(raw[i]);
    return words;
}

void write_bits(const fs::path& path, const BitVector& bits) { write_bytes(path, bits.to_bytes()); }

BitVector read_bits(const fs::path& path) {
    const auto buf = read_bytes(path);
    return BitVector::from_bytes(buf, 8 * buf.size());
}

extract::ToeplitzSeed read_seed_file(const fs::path& path, const extract::ExtractorParams& params) {
    const auto buf = read_bytes(path);
    const std::size_t nbits = params.seed_length();
    const std::size_t expected = (nbits + 7) / 8;
    if (buf.size() != expected)
        throw DataError(path.string() + ": seed file holds " + std::to_string(buf.size()) +
                        " bytes, expected " + std::to_string(expected) + " for " +
                        std::to_string(nbits) + " bits");
    if (nbits % 8 != 0 && (buf.back() >> (nbits % 8)) != 0)
        throw DataError(path.string() + ": padding bits of the last seed byte are not zero");
    return {BitVector::from_bytes(buf, nbits), "file:" + path.string()};
}

void write_seed_file(const fs::path& path, const extract::ToeplitzSeed& seed) {
    write_bits(path, seed.bits);
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                                &EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw Error("SHA-256 computation failed");
    std::ostringstream hex;
    for (unsigned i = 0; i < len; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return hex.str();
}

std::string sha256_hex(const std::string& text) {
    return sha256_hex({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_bytes(path)); }

}  // namespace qrng::io
