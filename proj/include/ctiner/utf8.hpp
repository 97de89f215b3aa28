#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ctiner/error.hpp"

namespace ctiner {

// Maps between code point indices and byte offsets of a UTF-8 string.
// Public offsets in this library are always code point indices.
class Utf8Index {
 public:
  Utf8Index() : starts_{0} {}

  explicit Utf8Index(std::string_view text) {
    starts_.reserve(text.size() + 1);
    std::size_t i = 0;
    while (i < text.size()) {
      starts_.push_back(i);
      i += sequence_length(text, i);
    }
    starts_.push_back(text.size());
  }

  /// Number of code points.
  std::size_t size() const noexcept { return starts_.size() - 1; }

  /// Byte offset of code point `cp`; `cp == size()` yields the byte length.
  std::size_t byte_offset(std::size_t cp) const { return starts_.at(cp); }

  /// Code point index starting at `byte`, or npos if `byte` is inside a sequence.
  std::size_t code_point_at(std::size_t byte) const noexcept {
    auto it = std::lower_bound(starts_.begin(), starts_.end(), byte);
    if (it == starts_.end() || *it != byte) return npos;
    return static_cast<std::size_t>(it - starts_.begin());
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  static std::size_t sequence_length(std::string_view s, std::size_t i) {
    const auto lead = static_cast<std::uint8_t>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (lead < 0x80) return 1;
    if ((lead & 0xE0) == 0xC0) { len = 2; cp = lead & 0x1F; }
    else if ((lead & 0xF0) == 0xE0) { len = 3; cp = lead & 0x0F; }
    else if ((lead & 0xF8) == 0xF0) { len = 4; cp = lead & 0x07; }
    else throw Error(ErrorCode::InvalidUtf8, "bad lead byte at " + std::to_string(i));
    if (i + len > s.size()) throw Error(ErrorCode::InvalidUtf8, "truncated sequence at " + std::to_string(i));
    for (std::size_t k = 1; k < len; ++k) {
      const auto c = static_cast<std::uint8_t>(s[i + k]);
      if ((c & 0xC0) != 0x80) throw Error(ErrorCode::InvalidUtf8, "bad continuation byte at " + std::to_string(i + k));
      cp = (cp << 6) | (c & 0x3F);
    }
    constexpr std::uint32_t min_for_len[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < min_for_len[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      throw Error(ErrorCode::InvalidUtf8, "invalid code point at " + std::to_string(i));
    return len;
  }

  std::vector<std::size_t> starts_;
};

}  // namespace ctiner
