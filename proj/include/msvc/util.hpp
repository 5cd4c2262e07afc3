#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msvc/errors.hpp"

namespace msvc {

// ---------------------------------------------------------------------------
// Hashing

/// 64-bit FNV-1a over a byte range.
inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  return fnv1a64(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

/// splitmix64 finalizer; decorrelates structured inputs like (seed, counter).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Deterministic uniform draw in [0,1) keyed by (seed, sequence, salt).
inline double hash01(std::uint64_t seed, std::uint64_t sequence, std::uint64_t salt) {
  std::uint64_t h = mix64(seed ^ mix64(sequence ^ mix64(salt)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// Base64 (RFC 4648, with padding)

namespace detail {
inline constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}
}  // namespace detail

inline std::string base64_encode(std::span<const std::uint8_t> data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out.push_back(detail::kB64Alphabet[(v >> 18) & 63]);
    out.push_back(detail::kB64Alphabet[(v >> 12) & 63]);
    out.push_back(detail::kB64Alphabet[(v >> 6) & 63]);
    out.push_back(detail::kB64Alphabet[v & 63]);
  }
  if (i + 1 == data.size()) {
    std::uint32_t v = data[i] << 16;
    out.push_back(detail::kB64Alphabet[(v >> 18) & 63]);
    out.push_back(detail::kB64Alphabet[(v >> 12) & 63]);
    out += "==";
  } else if (i + 2 == data.size()) {
    std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
    out.push_back(detail::kB64Alphabet[(v >> 18) & 63]);
    out.push_back(detail::kB64Alphabet[(v >> 12) & 63]);
    out.push_back(detail::kB64Alphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

inline std::string base64_encode(std::string_view s) {
  return base64_encode(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

inline std::vector<std::uint8_t> base64_decode(std::string_view s) {
  if (s.size() % 4 != 0) raise(ErrorKind::malformed_json, "base64 length not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(s.size() / 4 * 3);
  for (std::size_t i = 0; i < s.size(); i += 4) {
    int pad = 0;
    std::uint32_t v = 0;
    for (int j = 0; j < 4; ++j) {
      char c = s[i + j];
      if (c == '=') {
        if (i + 4 != s.size() || j < 2) raise(ErrorKind::malformed_json, "bad base64 padding");
        ++pad;
        v <<= 6;
        continue;
      }
      if (pad > 0) raise(ErrorKind::malformed_json, "bad base64 padding");
      int d = detail::b64_value(c);
      if (d < 0) raise(ErrorKind::malformed_json, "bad base64 character");
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return out;
}

// ---------------------------------------------------------------------------
// UTF-8 decoding (lenient: invalid sequences yield U+FFFD and advance 1 byte)

inline std::vector<char32_t> utf8_codepoints(std::string_view s) {
  std::vector<char32_t> cps;
  cps.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6 && i + 1 < s.size()) {
      cp = static_cast<char32_t>((c & 0x1F) << 6 | (s[i + 1] & 0x3F));
      len = 2;
    } else if ((c >> 4) == 0xE && i + 2 < s.size()) {
      cp = static_cast<char32_t>((c & 0x0F) << 12 | (s[i + 1] & 0x3F) << 6 | (s[i + 2] & 0x3F));
      len = 3;
    } else if ((c >> 3) == 0x1E && i + 3 < s.size()) {
      cp = static_cast<char32_t>((c & 0x07) << 18 | (s[i + 1] & 0x3F) << 12 |
                                 (s[i + 2] & 0x3F) << 6 | (s[i + 3] & 0x3F));
      len = 4;
    }
    cps.push_back(cp);
    i += len;
  }
  return cps;
}

// ---------------------------------------------------------------------------
// Small numeric helpers

/// Median of a sample; midpoint of the two central values for even sizes.
inline double median(std::vector<double> xs) {
  if (xs.empty()) raise(ErrorKind::invalid_config, "median of empty sample");
  std::sort(xs.begin(), xs.end());
  std::size_t n = xs.size();
  if (n % 2 == 1) return xs[n / 2];
  return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c += 'a' - 'A';
  return out;
}

}  // namespace msvc
