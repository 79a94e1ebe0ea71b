#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cookieflow/cookie_jar.hpp"
#include "cookieflow/crawl_log.hpp"
#include "cookieflow/filterlist.hpp"
#include "cookieflow/model.hpp"
#include "cookieflow/psl.hpp"

namespace cookieflow {

inline constexpr int kFindingsFormatVersion = 1;

/// Everything the log says about one visit, gathered in one pass.
struct VisitInfo {
  VisitId visit_id = 0;
  SiteId site;
  std::uint32_t rank = 1;
  Phase phase = Phase::StatelessMeasure;
  Iteration iteration = Iteration::RejectIter;
  bool gpc_enabled = false;
  BannerType banner_type = BannerType::None;
  VisitOutcome outcome = VisitOutcome::LoadFailed;
  std::uint64_t sent_total = 0;              // cookie pairs sent, all stages
  std::uint64_t sent_before_interaction = 0;

  // A banner that was successfully rejected in the reject iteration of the
  // stateless phase: the only visits that yield canonical findings.
  bool rejected_measurement() const {
    return phase == Phase::StatelessMeasure && iteration == Iteration::RejectIter &&
           outcome == VisitOutcome::Rejected;
  }
  friend bool operator==(const VisitInfo&, const VisitInfo&) = default;
};

using VisitTable = std::map<VisitId, VisitInfo>;

VisitTable summarize_visits(std::span<const CrawlEvent> events);

struct IntractableFinding {
  CookieKey key;
  std::string value_at_send;
  SiteId sender_site;
  SiteId tracker_domain;
  std::vector<SiteId> setter_sites;
  InteractionStage stage = InteractionStage::BeforeInteraction;
  Channel channel = Channel::ResourceFetch;
  VisitId visit_id = 0;
  std::uint64_t event_index = 0;
  bool canonical = false;
  friend bool operator==(const IntractableFinding&, const IntractableFinding&) = default;
};

struct ResetFinding {
  CookieKey key;
  SiteId sender_site;
  VisitId visit_id = 0;
  std::uint64_t event_index = 0;
  friend bool operator==(const ResetFinding&, const ResetFinding&) = default;
};

struct SyncFinding {
  CookieKey source_key;
  std::string carrying_url;
  SiteId origin_tracker;
  SiteId destination_tracker;
  std::string parameter_name;
  VisitId visit_id = 0;
  std::uint64_t event_index = 0;
  friend bool operator==(const SyncFinding&, const SyncFinding&) = default;
};

struct CookieFlags {
  Party party = Party::ThirdParty;
  bool is_tracking = false;
  friend bool operator==(const CookieFlags&, const CookieFlags&) = default;
};

// First- and third-party cookies are both eligible for the tracking flag.
CookieFlags classify_cookie(const CookieRecord& record, const SiteId& visit_site, const PslRuleSet& psl,
                            const TrackerDomainSet& trackers);

// eTLD+1 of a cookie host, falling back to the host itself when the host is
// a bare public suffix.
SiteId tracker_domain_of(std::string_view host, const PslRuleSet& psl);

/// Name-indexed view over the non-partitioned jar entries.
class JarIndex {
 public:
  explicit JarIndex(const CookieJar& jar);

  // Candidates share the name, are unpartitioned and domain-match the
  // target host. Preference: equal value, then longest host.
  std::optional<CookieKey> match(const SentCookieObservation& obs) const;
  const std::vector<SiteId>& setters_of(const CookieKey& key) const;
  const CookieJar& jar() const noexcept { return *jar_; }

 private:
  const CookieJar* jar_;
  std::unordered_map<std::string, std::vector<const CookieRecord*>> by_name_;
  std::map<CookieKey, std::vector<SiteId>> setters_;
};

std::optional<CookieKey> match_sent_to_jar(const SentCookieObservation& obs, const CookieJar& jar);

struct IntractableDetection {
  std::vector<IntractableFinding> canonical;  // BEFORE_INTERACTION in rejected measurement visits
  std::vector<IntractableFinding> staged;     // every other matched tracking send of the stateless phase
  friend bool operator==(const IntractableDetection&, const IntractableDetection&) = default;
};

// Parallel kernel over observations; output order is observation order, so
// it matches detect_intractable_serial exactly.
IntractableDetection detect_intractable(const CookieJar& jar, std::span<const SentCookieObservation> observations,
                                        const VisitTable& visits, const PslRuleSet& psl,
                                        const TrackerDomainSet& trackers);
IntractableDetection detect_intractable_serial(const CookieJar& jar,
                                               std::span<const SentCookieObservation> observations,
                                               const VisitTable& visits, const PslRuleSet& psl,
                                               const TrackerDomainSet& trackers);

// Jar-side route to the intractable key set: every tracking jar entry that
// some canonical-eligible send resolves to.
std::set<CookieKey> jar_intractable_keys(const CookieJar& jar, std::span<const SentCookieObservation> observations,
                                         const VisitTable& visits, const TrackerDomainSet& trackers);

std::vector<ResetFinding> detect_reset(std::span<const IntractableFinding> findings, std::span<const CrawlEvent> events,
                                       const VisitTable& visits);

// Values of length <= 10, all-digit values and flag-like values are never
// treated as identifiers.
bool is_sync_candidate_value(std::string_view value);

std::vector<SyncFinding> detect_sync(std::span<const IntractableFinding> findings, std::span<const CrawlEvent> events,
                                     const PslRuleSet& psl, const TrackerDomainSet& trackers);

struct ChannelSplit {
  double resource_fraction = 0.0;
  double api_fraction = 0.0;
  bool empty = true;
};

ChannelSplit channel_split(std::span<const IntractableFinding> findings);

/// Full detection output for one or more stateless-phase logs.
struct DetectionResult {
  VisitTable visits;  // stateless-phase visits only
  IntractableDetection intractable;
  std::vector<ResetFinding> resets;
  std::vector<SyncFinding> syncs;
  std::uint64_t sent_unique_before_interaction = 0;  // unique (name, target host) in rejected visits
  Diagnostics warnings;
  friend bool operator==(const DetectionResult& a, const DetectionResult& b) {
    return a.visits == b.visits && a.intractable == b.intractable && a.resets == b.resets && a.syncs == b.syncs &&
           a.sent_unique_before_interaction == b.sent_unique_before_interaction;
  }
};

struct DetectOptions {
  bool parallel = true;
};

DetectionResult detect(const CookieJar& jar, std::span<const CrawlEvent> events, const PslRuleSet& psl,
                       const TrackerDomainSet& trackers, DetectOptions options = {});

void write_findings(std::ostream& out, const DetectionResult& result);
// Throws Error{MalformedRecord}.
DetectionResult read_findings(std::istream& in);

}  // namespace cookieflow
