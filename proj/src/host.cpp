#include "cookieflow/host.hpp"

#include <cstdint>
#include <vector>

#include "cookieflow/error.hpp"

namespace cookieflow {
namespace {

constexpr std::size_t kMaxLabel = 63;

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      extra = 2;
    } else if ((c & 0xF8) == 0xF0) {
      cp = c & 0x07;
      extra = 3;
    } else {
      throw Error(ErrorCode::InvalidLabel, "invalid UTF-8 lead byte");
    }
    if (i + extra >= s.size() && extra > 0)
      throw Error(ErrorCode::InvalidLabel, "truncated UTF-8 sequence");
    for (int k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) throw Error(ErrorCode::InvalidLabel, "invalid UTF-8 continuation");
      cp = (cp << 6) | (cc & 0x3F);
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

char encode_digit(std::uint32_t d) {
  return static_cast<char>(d < 26 ? 'a' + d : '0' + (d - 26));
}

std::uint32_t adapt(std::uint32_t delta, std::uint32_t num_points, bool first) {
  constexpr std::uint32_t base = 36, tmin = 1, tmax = 26, skew = 38, damp = 700;
  delta = first ? delta / damp : delta / 2;
  delta += delta / num_points;
  std::uint32_t k = 0;
  while (delta > ((base - tmin) * tmax) / 2) {
    delta /= base - tmin;
    k += base;
  }
  return k + (((base - tmin) + 1) * delta) / (delta + skew);
}

bool legal_ascii(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
}

}  // namespace

std::string punycode_encode(std::string_view utf8_label) {
  constexpr std::uint32_t base = 36, tmin = 1, tmax = 26;
  const auto input = decode_utf8(utf8_label);

  std::string out;
  for (char32_t cp : input)
    if (cp < 0x80) out.push_back(static_cast<char>(cp));
  const std::uint32_t basic = static_cast<std::uint32_t>(out.size());
  std::uint32_t handled = basic;
  if (basic > 0) out.push_back('-');

  std::uint32_t n = 128, delta = 0, bias = 72;
  while (handled < input.size()) {
    std::uint32_t m = UINT32_MAX;
    for (char32_t cp : input)
      if (cp >= n && cp < m) m = cp;
    delta += (m - n) * (handled + 1);
    n = m;
    for (char32_t cp : input) {
      if (cp < n) ++delta;
      if (cp == n) {
        std::uint32_t q = delta;
        for (std::uint32_t k = base;; k += base) {
          const std::uint32_t t = k <= bias ? tmin : (k >= bias + tmax ? tmax : k - bias);
          if (q < t) break;
          out.push_back(encode_digit(t + (q - t) % (base - t)));
          q = (q - t) / (base - t);
        }
        out.push_back(encode_digit(q));
        bias = adapt(delta, handled + 1, handled == basic);
        delta = 0;
        ++handled;
      }
    }
    ++delta;
    ++n;
  }
  return out;
}

std::string canonicalize_host(std::string_view raw) {
  if (raw.empty()) throw Error(ErrorCode::EmptyHost, "empty host");
  if (raw.front() == '.') raw.remove_prefix(1);
  if (!raw.empty() && raw.back() == '.') raw.remove_suffix(1);
  if (raw.empty()) throw Error(ErrorCode::EmptyHost, "host is only dots");

  std::string out;
  out.reserve(raw.size());
  std::size_t start = 0;
  while (start <= raw.size()) {
    std::size_t end = raw.find('.', start);
    if (end == std::string_view::npos) end = raw.size();
    std::string_view label = raw.substr(start, end - start);
    if (label.empty()) throw Error(ErrorCode::InvalidLabel, "empty label in '" + std::string(raw) + "'");

    std::string lowered(label);
    bool ascii = true;
    for (char& c : lowered) {
      if (static_cast<unsigned char>(c) >= 0x80) {
        ascii = false;
      } else if (c >= 'A' && c <= 'Z') {
        c = static_cast<char>(c - 'A' + 'a');
      }
    }
    if (ascii) {
      for (char c : lowered)
        if (!legal_ascii(c))
          throw Error(ErrorCode::InvalidLabel, "illegal character in label '" + lowered + "'");
    } else {
      for (char c : lowered)
        if (static_cast<unsigned char>(c) < 0x80 && !legal_ascii(c))
          throw Error(ErrorCode::InvalidLabel, "illegal character in label");
      lowered = "xn--" + punycode_encode(lowered);
    }
    if (lowered.size() > kMaxLabel)
      throw Error(ErrorCode::InvalidLabel, "label longer than 63 characters");

    if (!out.empty()) out.push_back('.');
    out += lowered;
    start = end + 1;
  }
  return out;
}

bool domain_matches(std::string_view host, std::string_view domain) {
  if (host.size() == domain.size()) return host == domain;
  return host.size() > domain.size() && host.ends_with(domain) &&
         host[host.size() - domain.size() - 1] == '.';
}

}  // namespace cookieflow
