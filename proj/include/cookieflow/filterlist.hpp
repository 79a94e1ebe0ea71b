#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cookieflow/error.hpp"

namespace cookieflow {

/// Deduplicated set of canonical tracker domains with a reversed-label
/// trie for suffix lookup.
class TrackerDomainSet {
 public:
  TrackerDomainSet();
  explicit TrackerDomainSet(std::string source_label);
  TrackerDomainSet(const TrackerDomainSet& other);
  TrackerDomainSet& operator=(const TrackerDomainSet& other);
  TrackerDomainSet(TrackerDomainSet&&) noexcept;
  TrackerDomainSet& operator=(TrackerDomainSet&&) noexcept;
  ~TrackerDomainSet();

  // Canonicalizes; throws Error{EmptyHost|InvalidLabel}. Returns false on duplicate.
  bool insert(std::string_view domain);
  void merge(const TrackerDomainSet& other);

  // host == entry or host ends with "." + entry, for some entry.
  bool contains_suffix_of(std::string_view canonical_host) const;

  const std::set<std::string>& domains() const noexcept { return domains_; }
  const std::string& source_label() const noexcept { return source_label_; }
  std::size_t size() const noexcept { return domains_.size(); }

 private:
  struct Node;
  void insert_into_trie(const std::string& domain);

  std::set<std::string> domains_;
  std::string source_label_;
  std::unique_ptr<Node> root_;
};

struct DomainListParse {
  TrackerDomainSet set;
  Diagnostics errors;  // MalformedDomain, one per offending line
};

// One domain per line, '#' comments and blank lines allowed.
DomainListParse parse_domain_list(std::string_view text, std::string source_label = {});

struct AdblockExtraction {
  TrackerDomainSet set;
  std::size_t ignored_lines = 0;
};

// Keeps only whole-domain blocking rules "||domain^" and "||domain^$third-party".
AdblockExtraction extract_domains_from_adblock(std::string_view text, std::string source_label = {});

bool is_tracker(std::string_view host, const TrackerDomainSet& set);

// Batch classification. The parallel kernel must agree with the serial one
// element for element.
std::vector<char> classify_hosts_serial(std::span<const std::string> hosts, const TrackerDomainSet& set);
std::vector<char> classify_hosts(std::span<const std::string> hosts, const TrackerDomainSet& set);

}  // namespace cookieflow
