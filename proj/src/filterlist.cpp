#include "cookieflow/filterlist.hpp"

#include <map>

#include "cookieflow/host.hpp"

namespace cookieflow {

struct TrackerDomainSet::Node {
  bool terminal = false;
  std::map<std::string, std::unique_ptr<Node>, std::less<>> children;
};

TrackerDomainSet::TrackerDomainSet() : root_(std::make_unique<Node>()) {}

TrackerDomainSet::TrackerDomainSet(std::string source_label)
    : source_label_(std::move(source_label)), root_(std::make_unique<Node>()) {}

TrackerDomainSet::TrackerDomainSet(const TrackerDomainSet& other)
    : source_label_(other.source_label_), root_(std::make_unique<Node>()) {
  for (const auto& d : other.domains_) {
    domains_.insert(d);
    insert_into_trie(d);
  }
}

TrackerDomainSet& TrackerDomainSet::operator=(const TrackerDomainSet& other) {
  if (this != &other) {
    TrackerDomainSet copy(other);
    *this = std::move(copy);
  }
  return *this;
}

TrackerDomainSet::TrackerDomainSet(TrackerDomainSet&&) noexcept = default;
TrackerDomainSet& TrackerDomainSet::operator=(TrackerDomainSet&&) noexcept = default;
TrackerDomainSet::~TrackerDomainSet() = default;

void TrackerDomainSet::insert_into_trie(const std::string& domain) {
  Node* node = root_.get();
  std::size_t end = domain.size();
  while (true) {
    const std::size_t dot = domain.rfind('.', end == 0 ? 0 : end - 1);
    const std::size_t start = dot == std::string::npos ? 0 : dot + 1;
    const std::string label = domain.substr(start, end - start);
    auto& child = node->children[label];
    if (!child) child = std::make_unique<Node>();
    node = child.get();
    if (dot == std::string::npos) break;
    end = dot;
  }
  node->terminal = true;
}

bool TrackerDomainSet::insert(std::string_view domain) {
  std::string canonical = canonicalize_host(domain);
  if (!domains_.insert(canonical).second) return false;
  insert_into_trie(canonical);
  return true;
}

void TrackerDomainSet::merge(const TrackerDomainSet& other) {
  for (const auto& d : other.domains_)
    if (domains_.insert(d).second) insert_into_trie(d);
}

bool TrackerDomainSet::contains_suffix_of(std::string_view host) const {
  const Node* node = root_.get();
  std::size_t end = host.size();
  while (end > 0) {
    const std::size_t dot = host.rfind('.', end - 1);
    const std::size_t start = dot == std::string_view::npos ? 0 : dot + 1;
    auto it = node->children.find(host.substr(start, end - start));
    if (it == node->children.end()) return false;
    node = it->second.get();
    if (node->terminal) return true;
    if (dot == std::string_view::npos) break;
    end = dot;
  }
  return false;
}

namespace {

std::string_view trim(std::string_view s) {
  const std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    fn(text.substr(pos, eol - pos), ++line_no);
    pos = eol + 1;
  }
}

}  // namespace

DomainListParse parse_domain_list(std::string_view text, std::string source_label) {
  DomainListParse out{TrackerDomainSet(std::move(source_label)), {}};
  for_each_line(text, [&](std::string_view raw, std::size_t line_no) {
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') return;
    if (line.find_first_of(" \t") != std::string_view::npos) {
      out.errors.push_back({ErrorCode::MalformedDomain, line_no, "whitespace inside entry"});
      return;
    }
    try {
      out.set.insert(line);
    } catch (const Error& e) {
      out.errors.push_back({ErrorCode::MalformedDomain, line_no, e.what()});
    }
  });
  return out;
}

AdblockExtraction extract_domains_from_adblock(std::string_view text, std::string source_label) {
  AdblockExtraction out{TrackerDomainSet(std::move(source_label)), 0};
  for_each_line(text, [&](std::string_view raw, std::size_t) {
    std::string_view line = trim(raw);
    if (line.empty()) return;
    if (!line.starts_with("||")) {
      ++out.ignored_lines;
      return;
    }
    line.remove_prefix(2);
    const std::size_t caret = line.find('^');
    if (caret == std::string_view::npos) {
      ++out.ignored_lines;
      return;
    }
    const std::string_view domain = line.substr(0, caret);
    const std::string_view tail = line.substr(caret + 1);
    const bool shape_ok = tail.empty() || tail == "$third-party";
    if (!shape_ok || domain.empty() || domain.find_first_of("/*:?=&|$") != std::string_view::npos) {
      ++out.ignored_lines;
      return;
    }
    try {
      out.set.insert(domain);
    } catch (const Error&) {
      ++out.ignored_lines;
    }
  });
  return out;
}

bool is_tracker(std::string_view host, const TrackerDomainSet& set) {
  return set.contains_suffix_of(host);
}

std::vector<char> classify_hosts_serial(std::span<const std::string> hosts, const TrackerDomainSet& set) {
  std::vector<char> out(hosts.size());
  for (std::size_t i = 0; i < hosts.size(); ++i) out[i] = is_tracker(hosts[i], set) ? 1 : 0;
  return out;
}

std::vector<char> classify_hosts(std::span<const std::string> hosts, const TrackerDomainSet& set) {
  std::vector<char> out(hosts.size());
  const auto n = static_cast<std::ptrdiff_t>(hosts.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = is_tracker(hosts[i], set) ? 1 : 0;
  return out;
}

}  // namespace cookieflow
