#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cookieflow/cookie_jar.hpp"
#include "cookieflow/detector.hpp"
#include "cookieflow/filterlist.hpp"
#include "cookieflow/psl.hpp"

namespace cookieflow {

enum class ExpiryBucket { Session, D1, D10, M3, Y1, OverY1 };
enum class SetterBucket { ExactlyOne, Le0_1Pct, Le1Pct, Le10Pct, Gt10Pct };

std::string_view to_string(ExpiryBucket v);
std::string_view to_string(SetterBucket v);

struct EcdfPoint {
  double x = 0;
  double fraction = 0;
  friend bool operator==(const EcdfPoint&, const EcdfPoint&) = default;
};

// Step points of the empirical CDF, one per distinct value; the last
// fraction is exactly 1.
std::vector<EcdfPoint> ecdf(std::span<const double> values);

// Lifetime measured from the virtual time of the set event. Boundaries are
// inclusive upper bounds: 1 d, 10 d, 90 d, 365 d.
ExpiryBucket expiry_bucket(const Expiry& original_expiry, std::uint64_t set_at);

// EXACTLY_ONE for a single setter, otherwise the share of accepted sites
// (<= 0.1 %, <= 1 %, <= 10 %, > 10 %).
SetterBucket setter_bucket(std::size_t setters, std::size_t accepted_count);

struct HeatmapCell {
  ExpiryBucket expiry = ExpiryBucket::Session;
  SetterBucket setters = SetterBucket::ExactlyOne;
  std::uint64_t count = 0;
  friend bool operator==(const HeatmapCell&, const HeatmapCell&) = default;
};

// All 30 cells in enum order; counts sum to the number of unique canonical keys.
std::vector<HeatmapCell> renewal_heatmap(const CookieJar& jar, std::span<const IntractableFinding> canonical,
                                         std::size_t accepted_count);

struct TrackerRow {
  SiteId tracker_domain;
  std::uint64_t total_cookies = 0;
  std::uint64_t unique_cookies = 0;
  std::uint64_t senders = 0;
  friend bool operator==(const TrackerRow&, const TrackerRow&) = default;
};

// Sorted by senders desc, then tracker domain asc.
std::vector<TrackerRow> tracker_table(std::span<const IntractableFinding> findings);

struct FiveNumber {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  friend bool operator==(const FiveNumber&, const FiveNumber&) = default;
};

// Quartiles by linear interpolation between order statistics.
std::optional<FiveNumber> five_number(std::vector<double> values);

struct TierAverage {
  std::uint32_t lower = 0;  // exclusive
  std::optional<std::uint32_t> upper;  // inclusive; none for the overflow tier
  std::size_t rejected_sites = 0;
  std::size_t accepted_sites = 0;
  std::optional<double> avg_sent;  // none = empty tier
  std::optional<double> avg_set;
  std::optional<FiveNumber> sent_summary;
  std::optional<FiveNumber> set_summary;
};

// avg_sent: canonical findings per rejected measurement visit in the tier.
// avg_set: distinct intractable keys each accepted site in the tier set.
std::vector<TierAverage> rank_tier_averages(const DetectionResult& detection, const CookieJar& jar,
                                            std::span<const std::uint32_t> cutoffs);

struct PaywallShare {
  double threshold = 0;     // sites sending <= threshold findings
  std::size_t sites = 0;
  std::uint64_t findings = 0;
  double share = 0;         // fraction of those findings with a paywall setter
};

struct BannerTypeReport {
  std::optional<double> cmp_avg;
  std::optional<double> native_avg;
  std::optional<double> ratio;  // none when native_avg is 0 or missing
  std::size_t cmp_sites = 0;
  std::size_t native_sites = 0;
  std::vector<PaywallShare> paywall_share;
};

BannerTypeReport banner_type_report(const DetectionResult& detection, const CookieJar& jar);

struct GpcReport {
  std::size_t matched_sites = 0;
  std::uint64_t baseline_findings = 0;
  std::uint64_t gpc_findings = 0;
  std::optional<double> reduction_fraction;
  std::optional<double> overlap_with_reloaded_reject;
};

// Both runs restricted to sender sites rejected in both. Overlap is over
// unique keys: gpc canonical keys that also reach AFTER_RELOADED_REJECT in
// the baseline run.
GpcReport gpc_report(const DetectionResult& baseline, const DetectionResult& gpc);

struct PartitionedSummary {
  std::uint64_t total_unique = 0;
  std::uint64_t partitioned = 0;
  std::uint64_t tracking_unique = 0;
  std::uint64_t tracking_partitioned = 0;
  std::uint64_t along_with_np = 0;
  friend bool operator==(const PartitionedSummary&, const PartitionedSummary&) = default;
};

// Unique over (name, host, partition) jar keys.
PartitionedSummary partitioned_summary(const CookieJar& jar, const TrackerDomainSet& trackers, const PslRuleSet& psl);

struct StageCounts {
  std::uint64_t before_interaction = 0;  // canonical
  std::uint64_t after_reject = 0;
  std::uint64_t after_reloaded_reject = 0;
  std::uint64_t after_accept = 0;
  std::optional<double> reload_reduction;  // 1 - reloaded / before_interaction
};

// Sends of matched tracking cookies per stage, over rejected measurement
// visits (AFTER_ACCEPT over accept-iteration visits).
StageCounts stage_counts(const DetectionResult& detection);

struct AccountingColumn {
  std::string_view database;  // "COOKIE_JAR" or "SENT_COOKIES"
  std::string_view column;
  std::uint64_t aggregate = 0;
  std::uint64_t unique = 0;  // distinct (name, host)
  std::optional<double> average;  // aggregate per accepted (jar) or rejected (sent) site
};

// Jar columns count non-deleting history rows, party relative to the setter.
// Sent columns count BEFORE_INTERACTION sends in rejected measurement visits.
std::vector<AccountingColumn> accounting_table(const DetectionResult& detection, const CookieJar& jar,
                                               const PslRuleSet& psl, const TrackerDomainSet& trackers);

// Canonical findings per rejected measurement visit.
std::vector<double> findings_per_rejected_site(const DetectionResult& detection);

}  // namespace cookieflow
