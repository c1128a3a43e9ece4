#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pushpull {

// MSB-first bit packing. bit_count() is the exact logical length of the
// stream; the byte vector is padded with zero bits at the tail.
class BitWriter {
 public:
  void put_bit(bool b) {
    const std::size_t byte = nbits_ / 8;
    if (byte == bytes_.size()) bytes_.push_back(0);
    if (b) bytes_[byte] |= static_cast<std::uint8_t>(0x80u >> (nbits_ % 8));
    ++nbits_;
  }

  // Writes the low `width` bits of v, most significant first. width in [0, 64].
  void put(std::uint64_t v, unsigned width) {
    if (width > 64) throw std::invalid_argument("BitWriter: width > 64");
    for (unsigned i = width; i-- > 0;) put_bit((v >> i) & 1u);
  }

  std::size_t bit_count() const { return nbits_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t> take_bytes() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t nbits_ = 0;
};

class BitReader {
 public:
  BitReader(const std::vector<std::uint8_t>& bytes, std::size_t nbits)
      : bytes_(bytes), nbits_(nbits) {}

  bool get_bit() {
    if (pos_ >= nbits_) throw std::runtime_error("BitReader: read past end of payload");
    const bool b = (bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
    ++pos_;
    return b;
  }

  std::uint64_t get(unsigned width) {
    if (width > 64) throw std::invalid_argument("BitReader: width > 64");
    std::uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) v = (v << 1) | (get_bit() ? 1u : 0u);
    return v;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return nbits_ - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t nbits_;
  std::size_t pos_ = 0;
};

// Number of bits needed to index `dim` positions: ceil(log2(dim)), 0 for dim <= 1.
inline unsigned index_bits(std::size_t dim) {
  unsigned w = 0;
  while ((std::size_t{1} << w) < dim) ++w;
  return w;
}

}  // namespace pushpull
