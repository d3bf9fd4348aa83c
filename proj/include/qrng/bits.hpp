#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace qrng {

class BitVector;

/// Read-only window onto packed bits (bit i of the window is bit
/// offset + i of the underlying LSB-first word array).
class BitView {
public:
    BitView() = default;
    BitView(std::span<const std::uint64_t> words, std::size_t offset, std::size_t size)
        : words_(words), offset_(offset), size_(size) {}

    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }

    bool operator[](std::size_t i) const noexcept {
        const std::size_t p = offset_ + i;
        return (words_[p >> 6] >> (p & 63)) & 1u;
    }

    /// Up to 64 bits starting at bit `pos`, bit 0 of the result first.
    /// Bits past the end of the view are zero.
    std::uint64_t word_at(std::size_t pos) const noexcept;

    std::size_t popcount() const noexcept;

    BitView subview(std::size_t pos, std::size_t count) const noexcept {
        return {words_, offset_ + pos, count};
    }

private:
    std::span<const std::uint64_t> words_;
    std::size_t offset_ = 0;
    std::size_t size_ = 0;
};

/// Growable packed bit sequence, least significant bit first.
class BitVector {
public:
    BitVector() = default;
    explicit BitVector(std::size_t n) : words_((n + 63) / 64, 0), size_(n) {}

    /// Parses a string of '0'/'1' characters; other characters are skipped.
    static BitVector from_string(std::string_view text);
    /// Unpacks `nbits` bits from LSB-first packed bytes.
    static BitVector from_bytes(std::span<const std::uint8_t> bytes, std::size_t nbits);

    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }

    bool operator[](std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i, bool v) noexcept {
        const std::uint64_t mask = std::uint64_t{1} << (i & 63);
        if (v)
            words_[i >> 6] |= mask;
        else
            words_[i >> 6] &= ~mask;
    }

    void push_back(bool v);
    /// Appends the low `count` bits of `value` (count <= 64), LSB first.
    void append_bits(std::uint64_t value, unsigned count);
    void append(BitView bits);

    void reserve(std::size_t nbits) { words_.reserve((nbits + 63) / 64); }

    std::span<const std::uint64_t> words() const noexcept { return words_; }
    BitView view() const noexcept { return {words_, 0, size_}; }
    BitView view(std::size_t pos, std::size_t count) const noexcept { return {words_, pos, count}; }

    /// Packed bytes, first bit in the least significant bit of byte 0;
    /// the unused high bits of the last byte are zero.
    std::vector<std::uint8_t> to_bytes() const;

    bool operator==(const BitVector& other) const;

private:
    std::vector<std::uint64_t> words_;
    std::size_t size_ = 0;
};

}  // namespace qrng
