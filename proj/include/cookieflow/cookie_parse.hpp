#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cookieflow/error.hpp"
#include "cookieflow/model.hpp"

namespace cookieflow {

struct CookiePair {
  std::string name;
  std::string value;
  friend bool operator==(const CookiePair&, const CookiePair&) = default;
};

struct CookieHeaderParse {
  std::vector<CookiePair> pairs;
  Diagnostics errors;  // MalformedPair for segments without '='
};

// Request "Cookie:" header value -> ordered (name, value) pairs.
CookieHeaderParse parse_cookie_header(std::string_view header);

// Inverse of parse_cookie_header for well-formed pairs.
std::string format_cookie_header(const std::vector<CookiePair>& pairs);

struct SetCookieFragment {
  std::string name;
  std::string value;
  std::string host;
  Expiry original_expiry = SessionExpiry{};
  bool partitioned = false;
};

struct SetCookieParse {
  SetCookieFragment cookie;
  Diagnostics warnings;  // MalformedExpires
};

// `now` resolves Max-Age into an absolute expiry. Max-Age wins over Expires;
// Max-Age <= 0 yields an expiry in the past.
// Throws Error{MissingName}, and Error{EmptyHost|InvalidLabel} for a bad host.
SetCookieParse parse_set_cookie(std::string_view header, std::string_view context_host, Timestamp now);

// Accepts the IMF-fixdate form ("Sat, 01 Jan 2028 12:12:12 GMT") and the
// dashed RFC 850 variant ("Sat, 01-Jan-2028 12:12:12 GMT").
std::optional<Timestamp> parse_cookie_date(std::string_view text);
std::string format_cookie_date(Timestamp t);

struct QueryParam {
  std::string name;
  std::string value;  // percent-decoded
};

// Host part of an absolute http(s) URL, empty when absent.
std::string url_host(std::string_view url);
std::vector<QueryParam> url_query_params(std::string_view url);

}  // namespace cookieflow
