#include <gtest/gtest.h>

#include <numeric>

#include "cookieflow/analytics.hpp"
#include "cookieflow/report.hpp"

using namespace cookieflow;

namespace {

constexpr std::int64_t kDay = 86400;

VisitInfo rejected_visit(VisitId id, const char* site, std::uint32_t rank = 1, BannerType type = BannerType::Cmp) {
  VisitInfo v;
  v.visit_id = id;
  v.site = SiteId(site);
  v.rank = rank;
  v.banner_type = type;
  v.outcome = VisitOutcome::Rejected;
  return v;
}

IntractableFinding finding(VisitId visit, const char* sender, const char* name, const char* tracker,
                           InteractionStage stage = InteractionStage::BeforeInteraction) {
  IntractableFinding f;
  f.key = {name, tracker, std::nullopt};
  f.sender_site = SiteId(sender);
  f.tracker_domain = SiteId(tracker);
  f.visit_id = visit;
  f.stage = stage;
  f.canonical = stage == InteractionStage::BeforeInteraction;
  return f;
}

CookieRecord record(const char* name, const char* host, const char* setter, std::optional<std::int64_t> life,
                    std::uint64_t at = 0, std::optional<const char*> partition = std::nullopt) {
  CookieRecord r;
  r.key = {name, host, partition ? std::optional<SiteId>(SiteId(*partition)) : std::nullopt};
  r.value = "v";
  if (life) r.original_expiry = Timestamp{kCrawlEpoch + static_cast<std::int64_t>(at) + *life};
  r.setter_site = SiteId(setter);
  r.set_at = at;
  return r;
}

}  // namespace

TEST(Ecdf, Examples) {
  const std::vector<double> a{0, 0, 1};
  const auto e = ecdf(a);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].x, 0);
  EXPECT_DOUBLE_EQ(e[0].fraction, 2.0 / 3.0);
  EXPECT_EQ(e[1], (EcdfPoint{1, 1.0}));
  EXPECT_TRUE(ecdf({}).empty());
  const std::vector<double> one{5};
  EXPECT_EQ(ecdf(one), (std::vector<EcdfPoint>{{5, 1.0}}));
}

TEST(ExpiryBucket, Boundaries) {
  EXPECT_EQ(expiry_bucket(SessionExpiry{}, 0), ExpiryBucket::Session);
  EXPECT_EQ(expiry_bucket(Timestamp{kCrawlEpoch + 7 + 365 * kDay}, 7), ExpiryBucket::Y1);
  EXPECT_EQ(expiry_bucket(Timestamp{kCrawlEpoch + 7 + 366 * kDay}, 7), ExpiryBucket::OverY1);
  EXPECT_EQ(expiry_bucket(Timestamp{kCrawlEpoch + kDay}, 0), ExpiryBucket::D1);
  EXPECT_EQ(expiry_bucket(Timestamp{kCrawlEpoch + kDay + 1}, 0), ExpiryBucket::D10);
  EXPECT_EQ(expiry_bucket(Timestamp{kCrawlEpoch + 90 * kDay}, 0), ExpiryBucket::M3);
}

TEST(SetterBucket, Arithmetic) {
  EXPECT_EQ(setter_bucket(1, 1000), SetterBucket::ExactlyOne);
  EXPECT_EQ(setter_bucket(2, 1000), SetterBucket::Le1Pct);
  EXPECT_EQ(setter_bucket(2, 2000), SetterBucket::Le0_1Pct);
  EXPECT_EQ(setter_bucket(100, 1000), SetterBucket::Le10Pct);
  EXPECT_EQ(setter_bucket(101, 1000), SetterBucket::Gt10Pct);
}

TEST(RenewalHeatmap, SingleSetterOverOneYear) {
  CookieJar jar;
  jar.upsert(record("id", "t.net", "a.com", 400 * kDay));
  const std::vector<IntractableFinding> f{finding(1, "b.com", "id", "t.net")};
  const auto cells = renewal_heatmap(jar, f, 10);
  ASSERT_EQ(cells.size(), 30u);
  std::uint64_t sum = 0;
  for (const auto& c : cells) {
    sum += c.count;
    if (c.count) EXPECT_EQ(std::make_pair(c.expiry, c.setters), std::make_pair(ExpiryBucket::OverY1, SetterBucket::ExactlyOne));
  }
  EXPECT_EQ(sum, 1u);
}

TEST(TrackerTable, Examples) {
  std::vector<IntractableFinding> f{
      finding(1, "s1.com", "id", "x.net"), finding(1, "s1.com", "id", "x.net"), finding(2, "s2.com", "id", "x.net"),
      finding(3, "s3.com", "id", "x.net"), finding(3, "s3.com", "id", "x.net"), finding(4, "s1.com", "k", "a.net")};
  const auto rows = tracker_table(f);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (TrackerRow{SiteId("x.net"), 5, 1, 3}));
  EXPECT_EQ(rows[1].tracker_domain.str(), "a.net");
  EXPECT_TRUE(tracker_table({}).empty());

  std::vector<IntractableFinding> tie{finding(1, "s.com", "id", "b.net"), finding(1, "s.com", "id", "a.net")};
  EXPECT_EQ(tracker_table(tie)[0].tracker_domain.str(), "a.net");
}

TEST(FiveNumber, LinearInterpolation) {
  EXPECT_FALSE(five_number({}));
  EXPECT_EQ(*five_number({1, 2, 3, 4}), (FiveNumber{1, 1.75, 2.5, 3.25, 4}));
}

TEST(RankTiers, Examples) {
  DetectionResult d;
  d.visits[1] = rejected_visit(1, "a.com", 10);
  d.visits[2] = rejected_visit(2, "b.com", 20);
  for (const char* n : {"k1", "k2", "k3", "k4"}) d.intractable.canonical.push_back(finding(1, "a.com", n, "t.net"));
  CookieJar jar;
  jar.record_visit(SiteId("s.com"), {5, BannerType::Cmp, VisitOutcome::Accepted});
  for (const char* n : {"k1", "k2", "k3", "k4", "other"}) jar.upsert(record(n, "t.net", "s.com", 100));
  const std::vector<std::uint32_t> cutoffs{100};
  auto tiers = rank_tier_averages(d, jar, cutoffs);
  ASSERT_EQ(tiers.size(), 2u);
  EXPECT_EQ(tiers[0].avg_sent, 2.0);
  EXPECT_EQ(tiers[0].avg_set, 4.0);
  EXPECT_FALSE(tiers[1].avg_sent);
  EXPECT_FALSE(tiers[1].avg_set);

  // One setter setting five intractable keys.
  d.intractable.canonical.push_back(finding(2, "b.com", "other", "t.net"));
  tiers = rank_tier_averages(d, jar, cutoffs);
  EXPECT_EQ(tiers[0].avg_set, 5.0);
}

TEST(BannerTypes, Ratio) {
  DetectionResult d;
  d.visits[1] = rejected_visit(1, "c.com", 1, BannerType::Cmp);
  d.intractable.canonical.push_back(finding(1, "c.com", "id", "t.net"));
  auto r = banner_type_report(d, CookieJar{});
  EXPECT_FALSE(r.ratio);
  EXPECT_FALSE(r.native_avg);

  d.visits[2] = rejected_visit(2, "n.com", 1, BannerType::Native);
  d.intractable.canonical.push_back(finding(2, "n.com", "id", "t.net"));
  EXPECT_EQ(banner_type_report(d, CookieJar{}).ratio, 1.0);

  // 2:1 construction: two CMP sites sending 4 and 2, two native sites sending 1 and 2.
  DetectionResult c;
  int id = 0;
  auto site = [&](BannerType t, int n) {
    ++id;
    const std::string s = "s" + std::to_string(id) + ".com";
    c.visits[id] = rejected_visit(id, s.c_str(), 1, t);
    for (int k = 0; k < n; ++k)
      c.intractable.canonical.push_back(finding(id, s.c_str(), ("k" + std::to_string(k)).c_str(), "t.net"));
  };
  site(BannerType::Cmp, 4);
  site(BannerType::Cmp, 2);
  site(BannerType::Native, 1);
  site(BannerType::Native, 2);
  EXPECT_DOUBLE_EQ(*banner_type_report(c, CookieJar{}).ratio, (4.0 + 2.0) / 2 / ((1.0 + 2.0) / 2));
}

TEST(PaywallShare, CountsPaywallSetters) {
  DetectionResult d;
  d.visits[1] = rejected_visit(1, "a.com");
  auto f = finding(1, "a.com", "id", "t.net");
  f.setter_sites = {SiteId("pay.com")};
  d.intractable.canonical.push_back(f);
  auto g = finding(1, "a.com", "x", "t.net");
  g.setter_sites = {SiteId("free.com")};
  d.intractable.canonical.push_back(g);
  CookieJar jar;
  jar.record_visit(SiteId("pay.com"), {1, BannerType::Paywall, VisitOutcome::Accepted});
  jar.record_visit(SiteId("free.com"), {1, BannerType::Cmp, VisitOutcome::Accepted});
  const auto r = banner_type_report(d, jar);
  ASSERT_EQ(r.paywall_share.size(), 1u);
  EXPECT_EQ(r.paywall_share[0].threshold, 2.0);
  EXPECT_DOUBLE_EQ(r.paywall_share[0].share, 0.5);
}

TEST(Gpc, Examples) {
  DetectionResult base;
  for (int i = 1; i <= 10; ++i) {
    const std::string s = "s" + std::to_string(i) + ".com";
    base.visits[i] = rejected_visit(i, s.c_str());
    base.intractable.canonical.push_back(finding(i, s.c_str(), "id", "t.net"));
  }
  EXPECT_EQ(gpc_report(base, base).reduction_fraction, 0.0);

  DetectionResult empty = base;
  empty.intractable.canonical.clear();
  EXPECT_EQ(gpc_report(base, empty).reduction_fraction, 1.0);
  EXPECT_FALSE(gpc_report(base, empty).overlap_with_reloaded_reject);

  DetectionResult drop = base;
  drop.intractable.canonical.resize(7);
  const auto r = gpc_report(base, drop);
  EXPECT_EQ(r.matched_sites, 10u);
  EXPECT_NEAR(*r.reduction_fraction, 0.30, 1e-12);
}

TEST(Gpc, OverlapOnUniqueKeys) {
  DetectionResult base;
  base.visits[1] = rejected_visit(1, "a.com");
  base.intractable.canonical = {finding(1, "a.com", "id", "t.net"), finding(1, "a.com", "k", "t.net")};
  base.intractable.staged = {finding(1, "a.com", "id", "t.net", InteractionStage::AfterReloadedReject)};
  const auto r = gpc_report(base, base);
  EXPECT_DOUBLE_EQ(*r.overlap_with_reloaded_reject, 0.5);
}

TEST(PartitionedSummary, Examples) {
  const auto psl = load_psl("com\nnet");
  TrackerDomainSet t;
  t.insert("t.net");
  CookieJar jar;
  jar.upsert(record("id", "t.net", "a.com", 100, 0, "a.com"));
  jar.upsert(record("id", "t.net", "a.com", 100, 1));
  jar.upsert(record("fp", "a.com", "a.com", 100, 2));
  EXPECT_EQ(partitioned_summary(jar, t, psl), (PartitionedSummary{3, 1, 2, 1, 1}));

  CookieJar plain;
  plain.upsert(record("id", "t.net", "a.com", 100, 1));
  plain.upsert(record("fp", "a.com", "a.com", 100, 2));
  EXPECT_EQ(partitioned_summary(plain, t, psl), (PartitionedSummary{2, 0, 1, 0, 0}));
}

TEST(StageCounts, DistinctPairsAndReduction) {
  DetectionResult d;
  d.visits[1] = rejected_visit(1, "a.com");
  d.intractable.canonical = {finding(1, "a.com", "id", "t.net"), finding(1, "a.com", "id", "t.net"),
                             finding(1, "a.com", "k", "t.net"), finding(1, "a.com", "j", "t.net")};
  d.intractable.staged = {finding(1, "a.com", "id", "t.net", InteractionStage::AfterReject),
                          finding(1, "a.com", "id", "t.net", InteractionStage::AfterReloadedReject)};
  const auto c = stage_counts(d);
  EXPECT_EQ(c.before_interaction, 3u);
  EXPECT_EQ(c.after_reject, 1u);
  EXPECT_EQ(c.after_reloaded_reject, 1u);
  EXPECT_DOUBLE_EQ(*c.reload_reduction, 1.0 - 1.0 / 3.0);
  EXPECT_FALSE(stage_counts(DetectionResult{}).reload_reduction);
}

TEST(Accounting, IntractableUniqueMatchesSent) {
  const auto psl = load_psl("com\nnet");
  TrackerDomainSet t;
  t.insert("t.net");
  CookieJar jar;
  jar.record_visit(SiteId("a.com"), {1, BannerType::Cmp, VisitOutcome::Accepted});
  jar.upsert(record("id", "t.net", "a.com", 100, 0));
  jar.upsert(record("id", "t.net", "a.com", 100, 1));
  jar.upsert(record("fp", "a.com", "a.com", 100, 2));
  DetectionResult d;
  d.visits[1] = rejected_visit(1, "b.com");
  d.visits[1].sent_before_interaction = 3;
  d.intractable.canonical = {finding(1, "b.com", "id", "t.net")};
  const auto cols = accounting_table(d, jar, psl, t);
  ASSERT_EQ(cols.size(), 8u);
  EXPECT_EQ(cols[0].aggregate, 3u);
  EXPECT_EQ(cols[1].aggregate, 1u);
  EXPECT_EQ(cols[2].aggregate, 2u);
  EXPECT_EQ(cols[4].column, "INTRACTABLE");
  EXPECT_EQ(cols[4].unique, cols[6].unique);
  EXPECT_EQ(cols[5].aggregate, 3u);
}

TEST(Report, ConservationAndSkips) {
  DetectionResult d;
  d.visits[1] = rejected_visit(1, "a.com");
  d.visits[2] = rejected_visit(2, "b.com");
  d.intractable.canonical = {finding(1, "a.com", "id", "t.net"), finding(2, "b.com", "id", "t.net")};
  ReportInputs in;
  in.findings = &d;
  const auto files = build_report(in);
  EXPECT_TRUE(files.contains("tracker_table.csv"));
  EXPECT_FALSE(files.contains("renewal_heatmap.csv"));
  EXPECT_NE(files.at("manifest.json").find("\"skipped\""), std::string::npos);
  EXPECT_EQ(files.at("intractable_ecdf.csv"), "intractable_cookies,cumulative_fraction\n1.000000,1.000000\n");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}
