#include "cookieflow/analytics.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace cookieflow {

std::string_view to_string(ExpiryBucket v) {
  switch (v) {
    case ExpiryBucket::Session: return "SESSION";
    case ExpiryBucket::D1: return "D1";
    case ExpiryBucket::D10: return "D10";
    case ExpiryBucket::M3: return "M3";
    case ExpiryBucket::Y1: return "Y1";
    case ExpiryBucket::OverY1: return "OVER_Y1";
  }
  return "SESSION";
}

std::string_view to_string(SetterBucket v) {
  switch (v) {
    case SetterBucket::ExactlyOne: return "EXACTLY_ONE";
    case SetterBucket::Le0_1Pct: return "LE_0_1_PCT";
    case SetterBucket::Le1Pct: return "LE_1_PCT";
    case SetterBucket::Le10Pct: return "LE_10_PCT";
    case SetterBucket::Gt10Pct: return "GT_10_PCT";
  }
  return "EXACTLY_ONE";
}

std::vector<EcdfPoint> ecdf(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<EcdfPoint> out;
  const auto n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.push_back({sorted[i], static_cast<double>(i + 1) / n});
  }
  if (!out.empty()) out.back().fraction = 1.0;
  return out;
}

ExpiryBucket expiry_bucket(const Expiry& original_expiry, std::uint64_t set_at) {
  const auto* t = std::get_if<Timestamp>(&original_expiry);
  if (t == nullptr) return ExpiryBucket::Session;
  constexpr std::int64_t kDay = 86400;
  const std::int64_t life = t->seconds - virtual_time(set_at).seconds;
  if (life <= kDay) return ExpiryBucket::D1;
  if (life <= 10 * kDay) return ExpiryBucket::D10;
  if (life <= 90 * kDay) return ExpiryBucket::M3;
  if (life <= 365 * kDay) return ExpiryBucket::Y1;
  return ExpiryBucket::OverY1;
}

SetterBucket setter_bucket(std::size_t setters, std::size_t accepted_count) {
  if (setters <= 1) return SetterBucket::ExactlyOne;
  const auto s = static_cast<std::uint64_t>(setters);
  const auto a = static_cast<std::uint64_t>(accepted_count);
  if (s * 1000 <= a) return SetterBucket::Le0_1Pct;
  if (s * 100 <= a) return SetterBucket::Le1Pct;
  if (s * 10 <= a) return SetterBucket::Le10Pct;
  return SetterBucket::Gt10Pct;
}

namespace {

std::set<CookieKey> unique_keys(std::span<const IntractableFinding> findings) {
  std::set<CookieKey> out;
  for (const auto& f : findings) out.insert(f.key);
  return out;
}

std::map<CookieKey, std::set<SiteId>> setters_by_key(const CookieJar& jar) {
  std::map<CookieKey, std::set<SiteId>> out;
  for (const auto& row : jar.history())
    if (!row.deletion) out[row.key].insert(row.setter_site);
  return out;
}

// Distinct canonical keys per rejected measurement visit, zero-filled.
std::map<VisitId, std::set<CookieKey>> keys_per_rejected_visit(const DetectionResult& d) {
  std::map<VisitId, std::set<CookieKey>> out;
  for (const auto& [id, v] : d.visits)
    if (v.rejected_measurement()) out[id];
  for (const auto& f : d.intractable.canonical) out[f.visit_id].insert(f.key);
  return out;
}

std::optional<double> mean(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double sum = 0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

std::vector<HeatmapCell> renewal_heatmap(const CookieJar& jar, std::span<const IntractableFinding> canonical,
                                         std::size_t accepted_count) {
  constexpr std::size_t kExpiry = 6, kSetter = 5;
  std::vector<HeatmapCell> cells;
  for (std::size_t e = 0; e < kExpiry; ++e)
    for (std::size_t s = 0; s < kSetter; ++s)
      cells.push_back({static_cast<ExpiryBucket>(e), static_cast<SetterBucket>(s), 0});

  const auto setters = setters_by_key(jar);
  for (const auto& key : unique_keys(canonical)) {
    auto entry = jar.entries().find(key);
    if (entry == jar.entries().end()) continue;
    auto it = setters.find(key);
    const std::size_t n = it == setters.end() ? 1 : it->second.size();
    const auto e = expiry_bucket(entry->second.original_expiry, entry->second.set_at);
    const auto s = setter_bucket(n, accepted_count);
    ++cells[static_cast<std::size_t>(e) * kSetter + static_cast<std::size_t>(s)].count;
  }
  return cells;
}

std::vector<TrackerRow> tracker_table(std::span<const IntractableFinding> findings) {
  struct Acc {
    std::uint64_t total = 0;
    std::set<CookieKey> keys;
    std::set<SiteId> senders;
  };
  std::map<SiteId, Acc> by_tracker;
  for (const auto& f : findings) {
    Acc& a = by_tracker[f.tracker_domain];
    ++a.total;
    a.keys.insert(f.key);
    a.senders.insert(f.sender_site);
  }
  std::vector<TrackerRow> rows;
  for (const auto& [domain, a] : by_tracker) rows.push_back({domain, a.total, a.keys.size(), a.senders.size()});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const TrackerRow& a, const TrackerRow& b) { return a.senders > b.senders; });
  return rows;
}

std::optional<FiveNumber> five_number(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
  };
  return FiveNumber{values.front(), q(0.25), q(0.5), q(0.75), values.back()};
}

std::vector<TierAverage> rank_tier_averages(const DetectionResult& detection, const CookieJar& jar,
                                            std::span<const std::uint32_t> cutoffs) {
  std::vector<std::uint32_t> bounds(cutoffs.begin(), cutoffs.end());
  std::sort(bounds.begin(), bounds.end());
  bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
  const std::size_t n_tiers = bounds.size() + 1;
  auto tier_of = [&](std::uint32_t rank) {
    return static_cast<std::size_t>(std::lower_bound(bounds.begin(), bounds.end(), rank) - bounds.begin());
  };

  std::vector<std::vector<double>> sent(n_tiers), set(n_tiers);
  for (const auto& [id, keys] : keys_per_rejected_visit(detection))
    sent[tier_of(detection.visits.at(id).rank)].push_back(static_cast<double>(keys.size()));

  const auto intractable = unique_keys(detection.intractable.canonical);
  std::map<SiteId, std::set<CookieKey>> set_by_site;
  for (const auto& row : jar.history())
    if (!row.deletion && intractable.contains(row.key)) set_by_site[row.setter_site].insert(row.key);
  for (const auto& site : jar.accepted_sites()) {
    auto meta = jar.site_meta().find(site);
    const std::uint32_t rank = meta == jar.site_meta().end() ? 1 : meta->second.rank;
    auto it = set_by_site.find(site);
    set[tier_of(rank)].push_back(it == set_by_site.end() ? 0.0 : static_cast<double>(it->second.size()));
  }

  std::vector<TierAverage> out;
  for (std::size_t t = 0; t < n_tiers; ++t) {
    TierAverage tier;
    tier.lower = t == 0 ? 0 : bounds[t - 1];
    if (t < bounds.size()) tier.upper = bounds[t];
    tier.rejected_sites = sent[t].size();
    tier.accepted_sites = set[t].size();
    tier.avg_sent = mean(sent[t]);
    tier.avg_set = mean(set[t]);
    tier.sent_summary = five_number(sent[t]);
    tier.set_summary = five_number(set[t]);
    out.push_back(std::move(tier));
  }
  return out;
}

std::vector<double> findings_per_rejected_site(const DetectionResult& detection) {
  std::vector<double> out;
  for (const auto& [id, keys] : keys_per_rejected_visit(detection)) out.push_back(static_cast<double>(keys.size()));
  return out;
}

BannerTypeReport banner_type_report(const DetectionResult& detection, const CookieJar& jar) {
  BannerTypeReport report;
  const auto per_visit = keys_per_rejected_visit(detection);
  std::vector<double> cmp, native;
  for (const auto& [id, keys] : per_visit) {
    const auto type = detection.visits.at(id).banner_type;
    if (type == BannerType::Cmp) cmp.push_back(static_cast<double>(keys.size()));
    if (type == BannerType::Native) native.push_back(static_cast<double>(keys.size()));
  }
  report.cmp_sites = cmp.size();
  report.native_sites = native.size();
  report.cmp_avg = mean(cmp);
  report.native_avg = mean(native);
  if (report.cmp_avg && report.native_avg && *report.native_avg > 0)
    report.ratio = *report.cmp_avg / *report.native_avg;

  std::set<SiteId> paywall_setters;
  for (const auto& [site, meta] : jar.site_meta())
    if (meta.banner_type == BannerType::Paywall) paywall_setters.insert(site);
  std::map<VisitId, std::pair<std::uint64_t, std::uint64_t>> findings_by_visit;  // (all, paywall-set)
  for (const auto& f : detection.intractable.canonical) {
    auto& [all, paywall] = findings_by_visit[f.visit_id];
    ++all;
    if (std::any_of(f.setter_sites.begin(), f.setter_sites.end(),
                    [&](const SiteId& s) { return paywall_setters.contains(s); }))
      ++paywall;
  }
  std::vector<double> counts;
  for (const auto& [id, keys] : per_visit) counts.push_back(static_cast<double>(keys.size()));
  for (const auto& point : ecdf(counts)) {
    PaywallShare share;
    share.threshold = point.x;
    std::uint64_t paywall = 0;
    for (const auto& [id, keys] : per_visit) {
      if (static_cast<double>(keys.size()) > point.x) continue;
      ++share.sites;
      if (auto it = findings_by_visit.find(id); it != findings_by_visit.end()) {
        share.findings += it->second.first;
        paywall += it->second.second;
      }
    }
    share.share = share.findings == 0 ? 0.0 : static_cast<double>(paywall) / static_cast<double>(share.findings);
    report.paywall_share.push_back(share);
  }
  return report;
}

namespace {

std::set<SiteId> rejected_sites(const DetectionResult& d) {
  std::set<SiteId> out;
  for (const auto& [id, v] : d.visits)
    if (v.rejected_measurement()) out.insert(v.site);
  return out;
}

}  // namespace

GpcReport gpc_report(const DetectionResult& baseline, const DetectionResult& gpc) {
  GpcReport report;
  std::set<SiteId> matched;
  const auto gpc_sites = rejected_sites(gpc);
  for (const auto& s : rejected_sites(baseline))
    if (gpc_sites.contains(s)) matched.insert(s);
  report.matched_sites = matched.size();

  auto pairs = [&](const DetectionResult& d) {
    std::set<std::pair<SiteId, CookieKey>> out;
    for (const auto& f : d.intractable.canonical)
      if (matched.contains(f.sender_site)) out.emplace(f.sender_site, f.key);
    return out;
  };
  const auto base = pairs(baseline);
  const auto with_gpc = pairs(gpc);
  report.baseline_findings = base.size();
  report.gpc_findings = with_gpc.size();
  if (!base.empty())
    report.reduction_fraction = 1.0 - static_cast<double>(with_gpc.size()) / static_cast<double>(base.size());

  std::set<CookieKey> reloaded;
  for (const auto& f : baseline.intractable.staged)
    if (f.stage == InteractionStage::AfterReloadedReject && matched.contains(f.sender_site)) reloaded.insert(f.key);
  std::set<CookieKey> gpc_keys;
  for (const auto& [site, key] : with_gpc) gpc_keys.insert(key);
  if (!gpc_keys.empty()) {
    const auto overlap = std::count_if(gpc_keys.begin(), gpc_keys.end(),
                                       [&](const CookieKey& k) { return reloaded.contains(k); });
    report.overlap_with_reloaded_reject = static_cast<double>(overlap) / static_cast<double>(gpc_keys.size());
  }
  return report;
}

PartitionedSummary partitioned_summary(const CookieJar& jar, const TrackerDomainSet& trackers, const PslRuleSet& psl) {
  PartitionedSummary s;
  std::set<SiteId> np_tracking_domains;
  for (const auto& [key, record] : jar.entries())
    if (!key.partition && is_tracker(key.host, trackers)) np_tracking_domains.insert(tracker_domain_of(key.host, psl));
  for (const auto& [key, record] : jar.entries()) {
    ++s.total_unique;
    const bool tracking = is_tracker(key.host, trackers);
    if (key.partition) ++s.partitioned;
    if (!tracking) continue;
    ++s.tracking_unique;
    if (!key.partition) continue;
    ++s.tracking_partitioned;
    if (np_tracking_domains.contains(tracker_domain_of(key.host, psl))) ++s.along_with_np;
  }
  return s;
}

StageCounts stage_counts(const DetectionResult& detection) {
  using S = InteractionStage;
  std::map<S, std::set<std::pair<VisitId, CookieKey>>> seen;
  for (const auto& f : detection.intractable.canonical) seen[f.stage].emplace(f.visit_id, f.key);
  for (const auto& f : detection.intractable.staged) {
    auto v = detection.visits.find(f.visit_id);
    if (v == detection.visits.end()) continue;
    const bool counted = f.stage == S::AfterAccept ? v->second.iteration == Iteration::AcceptIter
                                                   : v->second.rejected_measurement();
    if (counted) seen[f.stage].emplace(f.visit_id, f.key);
  }
  StageCounts c;
  c.before_interaction = seen[S::BeforeInteraction].size();
  c.after_reject = seen[S::AfterReject].size();
  c.after_reloaded_reject = seen[S::AfterReloadedReject].size();
  c.after_accept = seen[S::AfterAccept].size();
  if (c.before_interaction > 0)
    c.reload_reduction =
        1.0 - static_cast<double>(c.after_reloaded_reject) / static_cast<double>(c.before_interaction);
  return c;
}

std::vector<AccountingColumn> accounting_table(const DetectionResult& detection, const CookieJar& jar,
                                               const PslRuleSet& psl, const TrackerDomainSet& trackers) {
  struct Acc {
    std::uint64_t aggregate = 0;
    std::set<std::pair<std::string, std::string>> unique;
    void add(const CookieKey& k) {
      ++aggregate;
      unique.emplace(k.name, k.host);
    }
  };
  const auto intractable = unique_keys(detection.intractable.canonical);
  Acc total, first, third, tracking, intr;
  for (const auto& row : jar.history()) {
    if (row.deletion) continue;
    total.add(row.key);
    (party_of(row.key.host, row.setter_site, psl) == Party::FirstParty ? first : third).add(row.key);
    if (is_tracker(row.key.host, trackers)) tracking.add(row.key);
    if (!row.key.partition && intractable.contains(row.key)) intr.add(row.key);
  }

  std::uint64_t sent_total = 0;
  std::size_t rejected = 0;
  for (const auto& [id, v] : detection.visits)
    if (v.rejected_measurement()) {
      ++rejected;
      sent_total += v.sent_before_interaction;
    }
  Acc sent_intr, resets;
  for (const auto& f : detection.intractable.canonical) sent_intr.add(f.key);
  for (const auto& r : detection.resets) resets.add(r.key);

  auto avg = [](std::uint64_t n, std::size_t sites) -> std::optional<double> {
    if (sites == 0) return std::nullopt;
    return static_cast<double>(n) / static_cast<double>(sites);
  };
  const std::size_t jar_sites = jar.site_meta().size();
  auto jar_col = [&](std::string_view name, const Acc& a) {
    return AccountingColumn{"COOKIE_JAR", name, a.aggregate, a.unique.size(), avg(a.aggregate, jar_sites)};
  };
  auto sent_col = [&](std::string_view name, const Acc& a) {
    return AccountingColumn{"SENT_COOKIES", name, a.aggregate, a.unique.size(), avg(a.aggregate, rejected)};
  };
  return {jar_col("TOTAL", total),
          jar_col("FIRST_PARTY", first),
          jar_col("THIRD_PARTY", third),
          jar_col("TRACKING", tracking),
          jar_col("INTRACTABLE", intr),
          AccountingColumn{"SENT_COOKIES", "TOTAL", sent_total, detection.sent_unique_before_interaction,
                           avg(sent_total, rejected)},
          sent_col("INTRACTABLE", sent_intr),
          sent_col("RESET", resets)};
}

}  // namespace cookieflow
