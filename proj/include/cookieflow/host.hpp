#pragma once

#include <string>
#include <string_view>

namespace cookieflow {

// Lowercases, strips one leading and one trailing dot, and converts
// non-ASCII labels to their "xn--" punycode form.
// Throws Error{EmptyHost} or Error{InvalidLabel}.
std::string canonicalize_host(std::string_view raw);

// RFC 3492 encoder for a single label given as UTF-8. Returns the bare
// punycode (without the "xn--" prefix). Throws Error{InvalidLabel} on bad UTF-8.
std::string punycode_encode(std::string_view utf8_label);

// `host` equals `domain` or ends with "." + domain.
bool domain_matches(std::string_view host, std::string_view domain);

}  // namespace cookieflow
