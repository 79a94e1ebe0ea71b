#include "cookieflow/cookie_parse.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <limits>

#include "cookieflow/host.hpp"

namespace cookieflow {
namespace {

std::string_view trim(std::string_view s) {
  const std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    char x = a[i], y = b[i];
    if (x >= 'A' && x <= 'Z') x = static_cast<char>(x - 'A' + 'a');
    if (y >= 'A' && y <= 'Z') y = static_cast<char>(y - 'A' + 'a');
    if (x != y) return false;
  }
  return true;
}

template <class Fn>
void for_each_segment(std::string_view text, char sep, Fn&& fn) {
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = text.find(sep, pos);
    fn(text.substr(pos, next == std::string_view::npos ? next : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
}

constexpr std::array<std::string_view, 12> kMonths = {"jan", "feb", "mar", "apr", "may", "jun",
                                                      "jul", "aug", "sep", "oct", "nov", "dec"};
constexpr std::array<std::string_view, 7> kWeekdays = {"Sun", "Mon", "Tue", "Wed",
                                                       "Thu", "Fri", "Sat"};

bool parse_uint(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && p == end;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      const int hi = hex_value(s[i + 1]), lo = hex_value(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
        continue;
      }
    }
    out.push_back(s[i]);
  }
  return out;
}

}  // namespace

CookieHeaderParse parse_cookie_header(std::string_view header) {
  CookieHeaderParse out;
  if (trim(header).empty()) return out;
  for_each_segment(header, ';', [&](std::string_view raw) {
    const std::string_view seg = trim(raw);
    if (seg.empty()) return;
    const std::size_t eq = seg.find('=');
    if (eq == std::string_view::npos) {
      out.errors.push_back({ErrorCode::MalformedPair, 0, "segment without '=': '" + std::string(seg) + "'"});
      return;
    }
    const std::string_view name = trim(seg.substr(0, eq));
    if (name.empty()) {
      out.errors.push_back({ErrorCode::MalformedPair, 0, "empty cookie name in '" + std::string(seg) + "'"});
      return;
    }
    out.pairs.push_back({std::string(name), std::string(seg.substr(eq + 1))});
  });
  return out;
}

std::string format_cookie_header(const std::vector<CookiePair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    if (!out.empty()) out += "; ";
    out += p.name;
    out += '=';
    out += p.value;
  }
  return out;
}

std::optional<Timestamp> parse_cookie_date(std::string_view text) {
  text = trim(text);
  if (const std::size_t comma = text.find(','); comma != std::string_view::npos)
    text = trim(text.substr(comma + 1));
  // day SEP month SEP year SP hh:mm:ss SP GMT
  std::size_t i = 0;
  auto take_while = [&](auto pred) {
    const std::size_t b = i;
    while (i < text.size() && pred(text[i])) ++i;
    return text.substr(b, i - b);
  };
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  auto is_alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
  auto expect = [&](auto pred) {
    if (i >= text.size() || !pred(text[i])) return false;
    ++i;
    return true;
  };
  auto is_sep = [](char c) { return c == ' ' || c == '-'; };

  int day = 0, year = 0, hh = 0, mm = 0, ss = 0;
  if (!parse_uint(take_while(is_digit), day) || !expect(is_sep)) return std::nullopt;
  const std::string_view mon = take_while(is_alpha);
  if (!expect(is_sep)) return std::nullopt;
  const std::string_view year_text = take_while(is_digit);
  if (!parse_uint(year_text, year)) return std::nullopt;
  if (year_text.size() == 2) year += year < 70 ? 2000 : 1900;
  if (!expect([](char c) { return c == ' '; })) return std::nullopt;
  if (!parse_uint(take_while(is_digit), hh) || !expect([](char c) { return c == ':'; })) return std::nullopt;
  if (!parse_uint(take_while(is_digit), mm) || !expect([](char c) { return c == ':'; })) return std::nullopt;
  if (!parse_uint(take_while(is_digit), ss)) return std::nullopt;
  if (!iequals(trim(text.substr(i)), "GMT")) return std::nullopt;

  int month = 0;
  for (std::size_t m = 0; m < kMonths.size(); ++m)
    if (iequals(mon, kMonths[m])) month = static_cast<int>(m) + 1;
  if (month == 0 || hh > 23 || mm > 59 || ss > 59 || year < 1601) return std::nullopt;

  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) return std::nullopt;
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return Timestamp{static_cast<std::int64_t>(days) * 86400 + hh * 3600 + mm * 60 + ss};
}

std::string format_cookie_date(Timestamp t) {
  using namespace std::chrono;
  const std::int64_t day_count = t.seconds >= 0 ? t.seconds / 86400 : (t.seconds - 86399) / 86400;
  const std::int64_t secs = t.seconds - day_count * 86400;
  const sys_days sd{days{day_count}};
  const year_month_day ymd{sd};
  const weekday wd{sd};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s, %02u %c%c%c %04d %02d:%02d:%02d GMT",
                std::string(kWeekdays[wd.c_encoding()]).c_str(), static_cast<unsigned>(ymd.day()),
                kMonths[static_cast<unsigned>(ymd.month()) - 1][0] - 'a' + 'A',
                kMonths[static_cast<unsigned>(ymd.month()) - 1][1],
                kMonths[static_cast<unsigned>(ymd.month()) - 1][2], static_cast<int>(ymd.year()),
                static_cast<int>(secs / 3600), static_cast<int>(secs / 60 % 60), static_cast<int>(secs % 60));
  return buf;
}

SetCookieParse parse_set_cookie(std::string_view header, std::string_view context_host, Timestamp now) {
  SetCookieParse out;
  const std::size_t semi = header.find(';');
  const std::string_view pair = trim(header.substr(0, semi));
  const std::size_t eq = pair.find('=');
  if (eq == std::string_view::npos || trim(pair.substr(0, eq)).empty())
    throw Error(ErrorCode::MissingName, "Set-Cookie without a cookie name: '" + std::string(header) + "'");
  out.cookie.name = std::string(trim(pair.substr(0, eq)));
  out.cookie.value = std::string(trim(pair.substr(eq + 1)));

  std::optional<std::string_view> domain;
  std::optional<Timestamp> max_age_expiry, expires;
  if (semi != std::string_view::npos) {
    for_each_segment(header.substr(semi + 1), ';', [&](std::string_view raw) {
      const std::string_view attr = trim(raw);
      if (attr.empty()) return;
      const std::size_t aeq = attr.find('=');
      const std::string_view key = trim(attr.substr(0, aeq));
      const std::string_view val = aeq == std::string_view::npos ? std::string_view{} : trim(attr.substr(aeq + 1));
      if (iequals(key, "domain")) {
        if (!val.empty()) domain = val;
      } else if (iequals(key, "max-age")) {
        std::string_view digits = val;
        const bool negative = digits.starts_with('-');
        if (negative) digits.remove_prefix(1);
        std::int64_t seconds = 0;
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), seconds);
        if (digits.empty() || ec == std::errc::invalid_argument || p != digits.data() + digits.size()) {
          out.warnings.push_back({ErrorCode::MalformedExpires, 0, "bad Max-Age '" + std::string(val) + "'"});
          return;
        }
        if (ec == std::errc::result_out_of_range) seconds = std::numeric_limits<std::int64_t>::max() / 2;
        if (negative || seconds == 0) {
          max_age_expiry = Timestamp{0};
        } else {
          seconds = std::min<std::int64_t>(seconds, std::numeric_limits<std::int64_t>::max() / 2);
          max_age_expiry = Timestamp{now.seconds + seconds};
        }
      } else if (iequals(key, "expires")) {
        if (auto t = parse_cookie_date(val)) {
          expires = t;
        } else {
          out.warnings.push_back({ErrorCode::MalformedExpires, 0, "bad Expires '" + std::string(val) + "'"});
        }
      } else if (iequals(key, "partitioned")) {
        out.cookie.partitioned = true;
      }
    });
  }

  out.cookie.host = canonicalize_host(domain ? *domain : context_host);
  if (max_age_expiry) {
    out.cookie.original_expiry = *max_age_expiry;
  } else if (expires) {
    out.cookie.original_expiry = *expires;
  }
  return out;
}

std::string url_host(std::string_view url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string_view::npos) return {};
  std::string_view rest = url.substr(scheme + 3);
  rest = rest.substr(0, rest.find_first_of("/?#"));
  if (const std::size_t at = rest.rfind('@'); at != std::string_view::npos) rest = rest.substr(at + 1);
  rest = rest.substr(0, rest.find(':'));
  return std::string(rest);
}

std::vector<QueryParam> url_query_params(std::string_view url) {
  std::vector<QueryParam> out;
  const std::size_t q = url.find('?');
  if (q == std::string_view::npos) return out;
  std::string_view query = url.substr(q + 1);
  query = query.substr(0, query.find('#'));
  for_each_segment(query, '&', [&](std::string_view seg) {
    if (seg.empty()) return;
    const std::size_t eq = seg.find('=');
    out.push_back({percent_decode(seg.substr(0, eq)),
                   eq == std::string_view::npos ? std::string{} : percent_decode(seg.substr(eq + 1))});
  });
  return out;
}

}  // namespace cookieflow
