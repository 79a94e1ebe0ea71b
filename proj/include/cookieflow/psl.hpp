#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>

#include "cookieflow/model.hpp"

namespace cookieflow {

/// Public Suffix List rules, bucketed by kind. Wildcard rules are stored
/// without their leading "*." and exception rules without their "!".
struct PslRuleSet {
  std::unordered_set<std::string> normal_rules;
  std::unordered_set<std::string> wildcard_rules;
  std::unordered_set<std::string> exception_rules;

  bool empty() const {
    return normal_rules.empty() && wildcard_rules.empty() && exception_rules.empty();
  }
  friend bool operator==(const PslRuleSet&, const PslRuleSet&) = default;
};

struct PslLoadOptions {
  // Keep rules from the "===BEGIN PRIVATE DOMAINS===" section.
  bool include_private = true;
};

// Throws Error{MalformedRule} on a rule with an empty label.
PslRuleSet load_psl(std::string_view text, PslLoadOptions options = {});
// Throws Error{IoError} when the file cannot be read.
PslRuleSet load_psl_file(const std::filesystem::path& path, PslLoadOptions options = {});

// Public suffix of a canonical host under the standard algorithm: exception
// rules win, otherwise the longest matching rule, otherwise the implicit "*".
std::string public_suffix(std::string_view host, const PslRuleSet& rules);

// Registrable domain of a canonical host.
// Throws Error{EmptyHost} or Error{HostIsPublicSuffix}.
SiteId etld_plus_one(std::string_view host, const PslRuleSet& rules);

// Lookup for raw, possibly malformed input (leading dots, empty labels,
// mixed case, Unicode). Returns nullopt where etld_plus_one would throw or
// the input is not a valid host name.
std::optional<SiteId> registrable_domain(std::string_view raw_host, const PslRuleSet& rules);

Party party_of(std::string_view cookie_host, const SiteId& visit_site, const PslRuleSet& rules);

}  // namespace cookieflow
