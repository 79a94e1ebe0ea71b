#include "cookieflow/psl.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "cookieflow/error.hpp"
#include "cookieflow/host.hpp"

namespace cookieflow {
namespace {

std::string canonical_rule(std::string_view rule, std::size_t line_no) {
  try {
    return canonicalize_host(rule);
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedRule,
                "line " + std::to_string(line_no) + ": '" + std::string(rule) + "': " + e.what());
  }
}

bool has_empty_label(std::string_view rule) {
  return rule.empty() || rule.front() == '.' || rule.back() == '.' ||
         rule.find("..") != std::string_view::npos;
}

std::vector<std::string_view> split_labels(std::string_view host) {
  std::vector<std::string_view> labels;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = host.find('.', start);
    labels.push_back(host.substr(start, dot == std::string_view::npos ? dot : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return labels;
}

// Number of labels in the public suffix of `labels`.
std::size_t suffix_label_count(const std::vector<std::string_view>& labels,
                               std::string_view host, const PslRuleSet& rules) {
  std::size_t best = 1;  // implicit "*" rule
  std::size_t offset = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::string suffix(host.substr(offset));
    const std::size_t count = labels.size() - i;
    if (rules.exception_rules.contains(suffix)) return count - 1;
    if (count > best && rules.normal_rules.contains(suffix)) best = count;
    if (count > best && i + 1 < labels.size()) {
      const std::string parent(host.substr(offset + labels[i].size() + 1));
      if (rules.wildcard_rules.contains(parent)) best = count;
    }
    offset += labels[i].size() + 1;
  }
  return best;
}

}  // namespace

PslRuleSet load_psl(std::string_view text, PslLoadOptions options) {
  PslRuleSet rules;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    if (line.starts_with("//")) {
      if (!options.include_private && line.find("===BEGIN PRIVATE DOMAINS===") != std::string_view::npos)
        break;
      continue;
    }
    // A rule is the first whitespace-delimited token on the line.
    const std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    line.remove_prefix(first);
    line = line.substr(0, line.find_first_of(" \t\r"));

    const auto malformed = [&] {
      return Error(ErrorCode::MalformedRule,
                   "line " + std::to_string(line_no) + ": '" + std::string(line) + "'");
    };
    if (line.starts_with("!")) {
      std::string_view body = line.substr(1);
      if (has_empty_label(body)) throw malformed();
      rules.exception_rules.insert(canonical_rule(body, line_no));
    } else if (line.starts_with("*.")) {
      std::string_view body = line.substr(2);
      if (has_empty_label(body) || body.find('*') != std::string_view::npos) throw malformed();
      rules.wildcard_rules.insert(canonical_rule(body, line_no));
    } else {
      if (has_empty_label(line) || line.find('*') != std::string_view::npos) throw malformed();
      rules.normal_rules.insert(canonical_rule(line, line_no));
    }
    if (eol == text.size()) break;
  }
  return rules;
}

PslRuleSet load_psl_file(const std::filesystem::path& path, PslLoadOptions options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read PSL file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_psl(ss.str(), options);
}

std::string public_suffix(std::string_view host, const PslRuleSet& rules) {
  if (host.empty()) throw Error(ErrorCode::EmptyHost, "empty host");
  const auto labels = split_labels(host);
  const std::size_t n = suffix_label_count(labels, host, rules);
  std::size_t offset = 0;
  for (std::size_t i = 0; i + n < labels.size(); ++i) offset += labels[i].size() + 1;
  return std::string(host.substr(offset));
}

SiteId etld_plus_one(std::string_view host, const PslRuleSet& rules) {
  if (host.empty()) throw Error(ErrorCode::EmptyHost, "empty host");
  const auto labels = split_labels(host);
  const std::size_t n = suffix_label_count(labels, host, rules);
  if (labels.size() <= n)
    throw Error(ErrorCode::HostIsPublicSuffix, "'" + std::string(host) + "' is a public suffix");
  std::size_t offset = 0;
  for (std::size_t i = 0; i + n + 1 < labels.size(); ++i) offset += labels[i].size() + 1;
  return SiteId(host.substr(offset));
}

std::optional<SiteId> registrable_domain(std::string_view raw_host, const PslRuleSet& rules) {
  if (has_empty_label(raw_host)) return std::nullopt;
  try {
    return etld_plus_one(canonicalize_host(raw_host), rules);
  } catch (const Error&) {
    return std::nullopt;
  }
}

Party party_of(std::string_view cookie_host, const SiteId& visit_site, const PslRuleSet& rules) {
  return etld_plus_one(cookie_host, rules) == visit_site ? Party::FirstParty : Party::ThirdParty;
}

}  // namespace cookieflow
