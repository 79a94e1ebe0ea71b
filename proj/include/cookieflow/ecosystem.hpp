#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cookieflow/filterlist.hpp"
#include "cookieflow/model.hpp"

namespace cookieflow {

enum class LoadPolicy { Always, PostAcceptOnly };
enum class PartitionMode { None, Only, Both };

std::string_view to_string(LoadPolicy v);
std::string_view to_string(PartitionMode v);

struct Embed {
  SiteId tracker;
  LoadPolicy policy = LoadPolicy::Always;
  Channel channel = Channel::ResourceFetch;
  friend bool operator==(const Embed&, const Embed&) = default;
};

struct SiteSpec {
  SiteId site;
  std::uint32_t rank = 1;
  BannerDescriptor banner;
  bool paywall = false;     // requires banner_type PAYWALL
  bool load_fails = false;
  std::vector<Embed> embeds;
  friend bool operator==(const SiteSpec&, const SiteSpec&) = default;
};

// "fixed:<v>" or "random:<len>".
struct ValueSpec {
  bool random = false;
  std::string fixed;
  std::size_t length = 0;
  friend bool operator==(const ValueSpec&, const ValueSpec&) = default;
};

struct TrackerCookieSpec {
  std::string name;
  ValueSpec value;
  std::optional<std::int64_t> lifetime;  // seconds; none = session cookie
  std::vector<SiteId> deleted_on;        // sites where the tracker expires it instead
  friend bool operator==(const TrackerCookieSpec&, const TrackerCookieSpec&) = default;
};

struct TrackerSpec {
  SiteId domain;
  std::vector<TrackerCookieSpec> cookies;
  bool honors_gpc = false;
  PartitionMode partition = PartitionMode::None;
  bool renews = false;  // re-sets cookies it already holds
  std::vector<SiteId> sync_partners;
  std::string sync_cookie;  // cookie whose value is passed to partners
  double drop_after_reject_prob = 0.0;
  bool listed = true;  // appears in the tracker list handed to the detector
  friend bool operator==(const TrackerSpec&, const TrackerSpec&) = default;
};

struct Schedule {
  std::vector<SiteId> phase1_sites;
  std::vector<SiteId> phase2_sites;
  bool gpc_enabled = false;
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct EcosystemConfig {
  std::vector<SiteSpec> sites;
  std::vector<TrackerSpec> trackers;
  Schedule schedule;

  // Throws Error{InvalidConfig}.
  void validate() const;
  const SiteSpec& site(const SiteId& id) const;
  const TrackerSpec& tracker(const SiteId& domain) const;
  friend bool operator==(const EcosystemConfig&, const EcosystemConfig&) = default;
};

// Throws Error{InvalidConfig}; the result is validated.
EcosystemConfig parse_ecosystem(std::string_view json_text);
EcosystemConfig load_ecosystem(const std::filesystem::path& path);
std::string ecosystem_to_json(const EcosystemConfig& config);

// Listed tracker domains, as the detector's tracker list.
TrackerDomainSet listed_trackers(const EcosystemConfig& config);

// Request hosts the simulated pages contact.
std::string embed_host(const SiteId& tracker, Channel channel);
std::string sync_host(const SiteId& partner);

struct RandomEcosystemParams {
  std::size_t sites = 60;
  std::size_t trackers = 12;
  double phase1_fraction = 0.5;
  std::size_t max_embeds = 5;
  double native_share = 0.35;
  double cmp_share = 0.35;
  double paywall_share = 0.1;  // remainder: no banner
  double settings_only_share = 0.3;  // banners without a main-layer reject
  double load_fail_share = 0.03;
  double post_accept_share = 0.2;
  double api_share = 0.25;
  double gpc_honor_fraction = 0.0;  // exact share of trackers, rounded
  double drop_after_reject_prob = 0.25;
  double partitioned_share = 0.15;
  double renew_share = 0.3;
  double sync_share = 0.3;
  double unlisted_share = 0.1;
  double deletion_share = 0.05;
  bool gpc_enabled = false;
};

EcosystemConfig random_ecosystem(const RandomEcosystemParams& params, std::uint64_t seed);

/// SplitMix64, the simulator's only random source.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  std::uint64_t next();
  double uniform();  // [0, 1)
  std::uint64_t below(std::uint64_t bound);
  std::uint64_t operator()() { return next(); }

 private:
  std::uint64_t state_;
};

// Independent stream for a tagged purpose: SplitMix64 seeded with
// seed ^ FNV-1a(tags joined by '\x1f').
SplitMix64 substream(std::uint64_t seed, std::initializer_list<std::string_view> tags);

// Whether the reload after a rejection on `site` drops the embed of `tracker`.
bool embed_dropped(std::uint64_t seed, const SiteId& site, const TrackerSpec& tracker);

}  // namespace cookieflow
