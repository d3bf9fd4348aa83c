#include "qrng/bits.hpp"

#include <algorithm>

namespace qrng {

std::uint64_t BitView::word_at(std::size_t pos) const noexcept {
    if (pos >= size_) return 0;
    const std::size_t p = offset_ + pos;
    const std::size_t w = p >> 6;
    const unsigned shift = p & 63;
    std::uint64_t v = words_[w] >> shift;
    if (shift != 0 && w + 1 < words_.size()) v |= words_[w + 1] << (64 - shift);
    const std::size_t left = size_ - pos;
    if (left < 64) v &= (std::uint64_t{1} << left) - 1;
    return v;
}

std::size_t BitView::popcount() const noexcept {
    std::size_t total = 0;
    for (std::size_t pos = 0; pos < size_; pos += 64) total += std::popcount(word_at(pos));
    return total;
}

BitVector BitVector::from_string(std::string_view text) {
    BitVector out;
    for (char c : text) {
        if (c == '0' || c == '1') out.push_back(c == '1');
    }
    return out;
}

BitVector BitVector::from_bytes(std::span<const std::uint8_t> bytes, std::size_t nbits) {
    BitVector out(nbits);
    for (std::size_t i = 0; i < nbits; ++i) out.set(i, (bytes[i >> 3] >> (i & 7)) & 1u);
    return out;
}

void BitVector::push_back(bool v) {
    if ((size_ & 63) == 0) words_.push_back(0);
    ++size_;
    set(size_ - 1, v);
}

void BitVector::append_bits(std::uint64_t value, unsigned count) {
    if (count == 0) return;
    if (count < 64) value &= (std::uint64_t{1} << count) - 1;
    const unsigned used = size_ & 63;
    if (used == 0) {
        words_.push_back(value);
    } else {
        words_.back() |= value << used;
        if (used + count > 64) words_.push_back(value >> (64 - used));
    }
    size_ += count;
}

void BitVector::append(BitView bits) {
    for (std::size_t pos = 0; pos < bits.size(); pos += 64)
        append_bits(bits.word_at(pos), static_cast<unsigned>(std::min<std::size_t>(64, bits.size() - pos)));
}

std::vector<std::uint8_t> BitVector::to_bytes() const {
    std::vector<std::uint8_t> out((size_ + 7) / 8, 0);
    for (std::size_t b = 0; b < out.size(); ++b)
        out[b] = static_cast<std::uint8_t>(words_[b >> 3] >> (8 * (b & 7)));
    return out;
}

bool BitVector::operator==(const BitVector& other) const {
    // Unused high bits of the last word are always kept zero.
    return size_ == other.size_ && words_ == other.words_;
}

}  // namespace qrng
