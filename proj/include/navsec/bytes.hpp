#pragma once

// Big-endian byte buffer primitives used by the wire codec and the
// certificate canonical encoding. All multi-byte integers are big-endian,
// fixed width; variable-length fields carry a 16-bit length prefix.

#include <bit>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace navsec {

using Bytes = std::vector<uint8_t>;
using ConstBytes = std::span<const uint8_t>;

class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }

  void u16(uint16_t v) {
    buf_.push_back(static_cast<uint8_t>(v >> 8));
    buf_.push_back(static_cast<uint8_t>(v));
  }

  void u64(uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8)
      buf_.push_back(static_cast<uint8_t>(v >> shift));
  }

  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }

  void raw(ConstBytes b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

  template <size_t N>
  void raw(const std::array<uint8_t, N>& a) {
    buf_.insert(buf_.end(), a.begin(), a.end());
  }

  // 2-byte length prefix + payload; payload must fit in 16 bits.
  void var(ConstBytes b) {
    u16(static_cast<uint16_t>(b.size()));
    raw(b);
  }

  size_t size() const { return buf_.size(); }
  Bytes take() { return std::move(buf_); }
  const Bytes& peek() const { return buf_; }

 private:
  Bytes buf_;
};

// Reads set a sticky failure flag on underrun; values read after a failure
// are zero. Callers check failed() once at the end and reject trailing bytes
// via remaining().
class ByteReader {
 public:
  explicit ByteReader(ConstBytes buf) : buf_(buf) {}

  uint8_t u8() {
    if (!need(1)) return 0;
    return buf_[pos_++];
  }

  uint16_t u16() {
    if (!need(2)) return 0;
    uint16_t v = static_cast<uint16_t>(buf_[pos_] << 8 | buf_[pos_ + 1]);
    pos_ += 2;
    return v;
  }

  uint64_t u64() {
    if (!need(8)) return 0;
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = v << 8 | buf_[pos_ + i];
    pos_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  template <size_t N>
  std::array<uint8_t, N> fixed() {
    std::array<uint8_t, N> out{};
    if (!need(N)) return out;
    std::memcpy(out.data(), buf_.data() + pos_, N);
    pos_ += N;
    return out;
  }

  Bytes raw(size_t n) {
    if (!need(n)) return {};
    Bytes out(buf_.begin() + pos_, buf_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }

  Bytes var() { return raw(u16()); }

  // Skip a length-prefixed field without copying.
  void skip_var() {
    size_t n = u16();
    if (need(n)) pos_ += n;
  }

  bool failed() const { return failed_; }
  size_t remaining() const { return buf_.size() - pos_; }
  size_t offset() const { return pos_; }

 private:
  bool need(size_t n) {
    if (failed_ || buf_.size() - pos_ < n) {
      failed_ = true;
      return false;
    }
    return true;
  }

  ConstBytes buf_;
  size_t pos_ = 0;
  bool failed_ = false;
};

std::string to_hex(ConstBytes b);
std::optional<Bytes> from_hex(const std::string& s);

}  // namespace navsec
