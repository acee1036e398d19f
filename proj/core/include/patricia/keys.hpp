/// \file keys.hpp
/// \brief Fixed-width binary keys and variable-length bit-string labels.
///
/// Labels are bit strings of length 0..64, bit 1 being the most significant.
/// A Key is a label of exactly the trie's key width. All routing decisions
/// in the trie are bit lookups on these values, so everything here is a
/// shift/mask on a single 64-bit word.

#pragma once

#include <bit>
#include <cassert>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

namespace patricia {

inline constexpr uint32_t kMaxKeyWidth = 64;

/// Variable-length bit string. Bits are stored left-aligned: the label's
/// first bit occupies the word's most significant bit. Immutable.
class Label {
 public:
  constexpr Label() = default;

  /// Builds a label of `len` bits from a low-aligned value
  /// (e.g. value 0b0110, len 4 is the label "0110").
  static constexpr Label from_value(uint64_t value, uint32_t len) {
    assert(len <= kMaxKeyWidth);
    assert(len == kMaxKeyWidth || (value >> len) == 0);
    return Label(len == 0 ? 0 : value << (kMaxKeyWidth - len), len);
  }

  /// Parses a "0101"-style bit string. Intended for tests and dumps.
  static Label from_string(std::string_view s) {
    assert(s.size() <= kMaxKeyWidth);
    uint64_t v = 0;
    for (char c : s) {
      assert(c == '0' || c == '1');
      v = (v << 1) | static_cast<uint64_t>(c == '1');
    }
    return from_value(v, static_cast<uint32_t>(s.size()));
  }

  constexpr uint32_t length() const { return len_; }
  constexpr bool empty() const { return len_ == 0; }

  /// Left-aligned raw bits (zero-filled beyond the label's length).
  constexpr uint64_t raw() const { return bits_; }

  /// The label's bits as a low-aligned integer.
  constexpr uint64_t value() const {
    return len_ == 0 ? 0 : bits_ >> (kMaxKeyWidth - len_);
  }

  /// i-th most significant bit, 1-based. i must be in [1, length()].
  constexpr int bit_at(uint32_t i) const {
    assert(i >= 1 && i <= len_);
    return static_cast<int>((bits_ >> (kMaxKeyWidth - i)) & 1u);
  }

  /// The label extended by one bit.
  constexpr Label with_bit(int bit) const {
    assert(len_ < kMaxKeyWidth);
    assert(bit == 0 || bit == 1);
    return Label(bits_ | (static_cast<uint64_t>(bit) << (kMaxKeyWidth - len_ - 1)),
                 len_ + 1);
  }

  std::string to_string() const {
    std::string s;
    s.reserve(len_);
    for (uint32_t i = 1; i <= len_; ++i) s.push_back(bit_at(i) ? '1' : '0');
    return s;
  }

  friend constexpr bool operator==(const Label& a, const Label& b) {
    return a.len_ == b.len_ && a.bits_ == b.bits_;
  }

 private:
  constexpr Label(uint64_t bits, uint32_t len) : bits_(bits), len_(len) {}

  uint64_t bits_ = 0;
  uint32_t len_ = 0;
};

/// Fixed-width key: a label of exactly the owning trie's width.
class Key {
 public:
  Key(uint64_t value, uint32_t width) : label_(Label::from_value(value, width)) {
    assert(width >= 1 && width <= kMaxKeyWidth);
  }

  constexpr const Label& label() const { return label_; }
  constexpr uint32_t width() const { return label_.length(); }
  constexpr uint64_t value() const { return label_.value(); }
  constexpr int bit_at(uint32_t i) const { return label_.bit_at(i); }

  friend constexpr bool operator==(const Key& a, const Key& b) {
    return a.label_ == b.label_;
  }

 private:
  Label label_;
};

/// i-th most significant bit of a label, 1-based.
constexpr int bit_at(const Label& s, uint32_t i) { return s.bit_at(i); }
constexpr int bit_at(const Key& s, uint32_t i) { return s.bit_at(i); }

namespace detail {
// Mask selecting the top `len` bits of a left-aligned word.
constexpr uint64_t prefix_mask(uint32_t len) {
  return len == 0 ? 0 : ~uint64_t{0} << (kMaxKeyWidth - len);
}
}  // namespace detail

/// True iff `a` equals the first |a| bits of `b`. The empty label is a
/// prefix of everything; a label longer than `b` is never a prefix.
constexpr bool is_prefix(const Label& a, const Label& b) {
  return a.length() <= b.length() &&
         ((a.raw() ^ b.raw()) & detail::prefix_mask(a.length())) == 0;
}
constexpr bool is_prefix(const Label& a, const Key& b) {
  return is_prefix(a, b.label());
}

/// Longest label that is a prefix of both arguments.
constexpr Label longest_common_prefix(const Label& a, const Label& b) {
  const uint32_t limit = a.length() < b.length() ? a.length() : b.length();
  const uint64_t diff = a.raw() ^ b.raw();
  const uint32_t common =
      diff == 0 ? kMaxKeyWidth : static_cast<uint32_t>(std::countl_zero(diff));
  const uint32_t len = common < limit ? common : limit;
  return Label::from_value(len == 0 ? 0 : a.raw() >> (kMaxKeyWidth - len), len);
}
constexpr Label longest_common_prefix(const Key& a, const Key& b) {
  return longest_common_prefix(a.label(), b.label());
}

/// Strict total order on labels: bitwise-lexicographic with a proper prefix
/// ordering before any extension of it. Deterministic everywhere; flag
/// targets are sorted with it.
constexpr std::strong_ordering label_order(const Label& a, const Label& b) {
  const uint32_t common = a.length() < b.length() ? a.length() : b.length();
  const uint64_t d = (a.raw() ^ b.raw()) & detail::prefix_mask(common);
  if (d != 0) return a.raw() < b.raw() ? std::strong_ordering::less
                                       : std::strong_ordering::greater;
  return a.length() <=> b.length();
}

/// The reserved keys 0^width and 1^width kept as permanent leaves.
inline std::pair<Key, Key> sentinels(uint32_t width) {
  assert(width >= 1 && width <= kMaxKeyWidth);
  const uint64_t ones =
      width == kMaxKeyWidth ? ~uint64_t{0} : (uint64_t{1} << width) - 1;
  return {Key(0, width), Key(ones, width)};
}

}  // namespace patricia
