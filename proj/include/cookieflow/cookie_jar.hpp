#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cookieflow/crawl_log.hpp"
#include "cookieflow/error.hpp"
#include "cookieflow/model.hpp"

namespace cookieflow {

inline constexpr int kJarFormatVersion = 1;

struct JarHistoryRow {
  CookieKey key;
  SiteId setter_site;
  std::uint64_t event_index = 0;
  bool deletion = false;
  friend bool operator==(const JarHistoryRow&, const JarHistoryRow&) = default;
};

// What the stateful phase learned about a visited site.
struct SiteMeta {
  std::uint32_t rank = 1;
  BannerType banner_type = BannerType::None;
  VisitOutcome outcome = VisitOutcome::NoBanner;
  friend bool operator==(const SiteMeta&, const SiteMeta&) = default;
};

/// Cookies accumulated during the stateful accept phase.
///
/// Every live entry carries the fixed override expiry; a set whose own
/// expiry is already in the past removes the key instead. History keeps one
/// row per processed set, deletions flagged.
class CookieJar {
 public:
  // Throws Error{WrongPhase} unless record.phase is STATEFUL_ACCEPT.
  void upsert(CookieRecord record);
  void record_visit(const SiteId& site, SiteMeta meta);

  // Keeps only rows whose setter is in a seeded uniform sample of n accepted
  // sites. Throws Error{SampleTooLarge}.
  CookieJar normalize_sample(std::size_t n, std::uint64_t seed) const;

  const std::map<CookieKey, CookieRecord>& entries() const noexcept { return entries_; }
  const std::vector<JarHistoryRow>& history() const noexcept { return history_; }
  const std::set<SiteId>& accepted_sites() const noexcept { return accepted_; }
  const std::map<SiteId, SiteMeta>& site_meta() const noexcept { return sites_; }

  std::string serialize() const;
  // Throws Error{CorruptSnapshot}.
  static CookieJar deserialize(std::string_view bytes);
  // Throws Error{IoError}.
  void save(const std::filesystem::path& path) const;
  // Throws Error{IoError} or Error{CorruptSnapshot}.
  static CookieJar load(const std::filesystem::path& path);

  friend bool operator==(const CookieJar&, const CookieJar&) = default;

 private:
  std::map<CookieKey, CookieRecord> entries_;
  std::vector<JarHistoryRow> history_;
  std::set<SiteId> accepted_;
  std::map<SiteId, SiteMeta> sites_;
};

// Seeded uniform sample of n sites: Fisher-Yates over the sorted list driven
// by mt19937_64(seed) with rejection-sampled bounded draws, first n kept.
std::vector<SiteId> sample_sites(const std::set<SiteId>& sites, std::size_t n, std::uint64_t seed);

// Uniform integer in [0, bound) from a 64-bit engine without modulo bias.
template <class Engine>
std::uint64_t bounded_draw(Engine& engine, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine();
  } while (x >= limit);
  return x % bound;
}

// Replays the STATEFUL_ACCEPT visits of a parsed log into a jar. Unparsable
// Set-Cookie headers are skipped and reported in `warnings`.
CookieJar build_jar(std::span<const CrawlEvent> events, Diagnostics* warnings = nullptr);

}  // namespace cookieflow
