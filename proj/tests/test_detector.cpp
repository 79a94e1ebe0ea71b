#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cookieflow/detector.hpp"

using namespace cookieflow;

namespace {

const PslRuleSet& psl() {
  static const PslRuleSet rules = load_psl("com\nnet\norg");
  return rules;
}

TrackerDomainSet trackers(std::initializer_list<const char*> domains) {
  TrackerDomainSet s;
  for (const char* d : domains) s.insert(d);
  return s;
}

CookieRecord jar_record(const char* name, const char* host, const char* value, const char* setter,
                        std::optional<const char*> partition = std::nullopt) {
  CookieRecord r;
  r.key = {name, host, partition ? std::optional<SiteId>(SiteId(*partition)) : std::nullopt};
  r.value = value;
  r.original_expiry = Timestamp{kCrawlEpoch + 1000000};
  r.setter_site = SiteId(setter);
  r.phase = Phase::StatefulAccept;
  return r;
}

/// Builds stateless-phase visits event by event.
class LogBuilder {
 public:
  VisitId visit(const char* site, Iteration iter = Iteration::RejectIter) {
    ++id_;
    push(VisitStart{id_, SiteId(site), 1, Phase::StatelessMeasure, iter, false});
    return id_;
  }
  void request(InteractionStage stage, const char* host, const char* cookies, const char* url = nullptr,
               Channel channel = Channel::ResourceFetch, std::optional<std::string> parent = std::nullopt) {
    push(HttpRequest{id_, stage, host, url ? url : std::string("https://") + host + "/", channel, parent, cookies});
  }
  void set(InteractionStage stage, const char* header, const char* host) { push(CookieSet{id_, stage, header, host}); }
  void interact(InteractionAction a, InteractionStage s) { push(Interaction{id_, a, s}); }
  void end(VisitOutcome o) { push(VisitEnd{id_, o}); }
  const std::vector<CrawlEvent>& events() const { return events_; }

 private:
  void push(EventPayload p) { events_.push_back({events_.size(), std::move(p)}); }
  VisitId id_ = 0;
  std::vector<CrawlEvent> events_;
};

SentCookieObservation obs(const char* name, const char* value, const char* target) {
  SentCookieObservation o;
  o.name = name;
  o.value = value;
  o.target_host = target;
  o.sender_site = SiteId("new.com");
  return o;
}

}  // namespace

TEST(ClassifyCookie, Examples) {
  auto r = jar_record("id", "tracker.net", "1", "shop.com");
  EXPECT_EQ(classify_cookie(r, SiteId("shop.com"), psl(), trackers({"tracker.net"})),
            (CookieFlags{Party::ThirdParty, true}));
  r.key.host = "shop.com";
  EXPECT_EQ(classify_cookie(r, SiteId("shop.com"), psl(), trackers({"shop.com"})),
            (CookieFlags{Party::FirstParty, true}));
  r.key.host = "cdn.shop.com";
  EXPECT_EQ(classify_cookie(r, SiteId("shop.com"), psl(), trackers({})), (CookieFlags{Party::FirstParty, false}));
}

TEST(MatchSentToJar, Examples) {
  CookieJar jar;
  jar.upsert(jar_record("id", "tracker.net", "123", "basic.com"));
  EXPECT_EQ(match_sent_to_jar(obs("id", "123", "a.tracker.net"), jar), (CookieKey{"id", "tracker.net", {}}));

  CookieJar partitioned;
  partitioned.upsert(jar_record("id", "tracker.net", "123", "shop.com", "shop.com"));
  EXPECT_FALSE(match_sent_to_jar(obs("id", "123", "tracker.net"), partitioned));

  CookieJar two;
  two.upsert(jar_record("id", "tracker.net", "123", "basic.com"));
  two.upsert(jar_record("id", "a.tracker.net", "999", "basic.com"));
  EXPECT_EQ(match_sent_to_jar(obs("id", "999", "a.tracker.net"), two), (CookieKey{"id", "a.tracker.net", {}}));
  two.upsert(jar_record("id", "a.tracker.net", "555", "basic.com"));
  EXPECT_EQ(match_sent_to_jar(obs("id", "123", "a.tracker.net"), two), (CookieKey{"id", "tracker.net", {}}));
}

// The tie-break against brute force over every candidate set.
TEST(MatchSentToJar, TieBreakBruteForce) {
  const char* hosts[] = {"net", "t.net", "a.t.net", "b.a.t.net", "x.net"};
  const char* values[] = {"1", "2"};
  std::mt19937_64 rng(3);
  for (int round = 0; round < 2000; ++round) {
    CookieJar jar;
    for (const char* h : hosts)
      if (rng() % 2) jar.upsert(jar_record("id", h, values[rng() % 2], "s.com", rng() % 4 == 0 ? std::optional<const char*>("p.com") : std::nullopt));
    const auto o = obs("id", values[rng() % 2], "b.a.t.net");
    std::optional<CookieKey> best;
    std::pair<bool, std::size_t> best_rank{false, 0};
    for (const auto& [k, r] : jar.entries()) {
      if (k.partition || !(o.target_host == k.host || o.target_host.ends_with("." + k.host))) continue;
      const std::pair<bool, std::size_t> rank{r.value == o.value, k.host.size()};
      if (!best || rank > best_rank) {
        best = k;
        best_rank = rank;
      }
    }
    ASSERT_EQ(match_sent_to_jar(o, jar), best);
  }
}

namespace {

struct Scenario {
  CookieJar jar;
  LogBuilder log;
};

Scenario basic_scenario() {
  Scenario s;
  s.jar.upsert(jar_record("id", "tracker.net", "123", "basic.com"));
  s.jar.record_visit(SiteId("basic.com"), {1, BannerType::Cmp, VisitOutcome::Accepted});
  s.log.visit("new.com");
  s.log.request(InteractionStage::BeforeInteraction, "px.tracker.net", "id=123");
  s.log.interact(InteractionAction::RejectClicked, InteractionStage::AfterReject);
  s.log.request(InteractionStage::AfterReject, "px.tracker.net", "id=123");
  s.log.end(VisitOutcome::Rejected);
  return s;
}

}  // namespace

TEST(DetectIntractable, DefinitionalCase) {
  auto s = basic_scenario();
  const auto r = detect(s.jar, s.log.events(), psl(), trackers({"tracker.net"}));
  ASSERT_EQ(r.intractable.canonical.size(), 1u);
  const auto& f = r.intractable.canonical[0];
  EXPECT_EQ(f.key, (CookieKey{"id", "tracker.net", {}}));
  EXPECT_EQ(f.sender_site.str(), "new.com");
  EXPECT_EQ(f.tracker_domain.str(), "tracker.net");
  EXPECT_EQ(f.setter_sites, (std::vector<SiteId>{SiteId("basic.com")}));
  ASSERT_EQ(r.intractable.staged.size(), 1u);
  EXPECT_EQ(r.intractable.staged[0].stage, InteractionStage::AfterReject);
}

TEST(DetectIntractable, EmptyJar) {
  auto s = basic_scenario();
  const auto r = detect(CookieJar{}, s.log.events(), psl(), trackers({"tracker.net"}));
  EXPECT_TRUE(r.intractable.canonical.empty());
  EXPECT_TRUE(r.intractable.staged.empty());
}

TEST(DetectIntractable, AcceptStageOnlyIsStaged) {
  CookieJar jar;
  jar.upsert(jar_record("id", "tracker.net", "123", "basic.com"));
  LogBuilder log;
  log.visit("new.com", Iteration::AcceptIter);
  log.interact(InteractionAction::AcceptClicked, InteractionStage::AfterAccept);
  log.request(InteractionStage::AfterAccept, "px.tracker.net", "id=123");
  log.end(VisitOutcome::Accepted);
  const auto r = detect(jar, log.events(), psl(), trackers({"tracker.net"}));
  EXPECT_TRUE(r.intractable.canonical.empty());
  ASSERT_EQ(r.intractable.staged.size(), 1u);
  EXPECT_EQ(r.intractable.staged[0].stage, InteractionStage::AfterAccept);
}

TEST(DetectIntractable, FailedRejectionExcluded) {
  CookieJar jar;
  jar.upsert(jar_record("id", "tracker.net", "123", "basic.com"));
  LogBuilder log;
  log.visit("new.com");
  log.request(InteractionStage::BeforeInteraction, "px.tracker.net", "id=123");
  log.end(VisitOutcome::InteractionFailed);
  const auto r = detect(jar, log.events(), psl(), trackers({"tracker.net"}));
  EXPECT_TRUE(r.intractable.canonical.empty());
}

TEST(DetectIntractable, ParallelMatchesSerial) {
  CookieJar jar;
  LogBuilder log;
  for (int i = 0; i < 40; ++i)
    jar.upsert(jar_record(("c" + std::to_string(i)).c_str(), i % 2 ? "t.net" : "u.org", "v", "basic.com"));
  for (int v = 0; v < 200; ++v) {
    const std::string site = "s" + std::to_string(v) + ".com";
    log.visit(site.c_str());
    std::string header;
    for (int i = v % 7; i < 40; i += 7) header += (header.empty() ? "" : "; ") + ("c" + std::to_string(i)) + "=v";
    log.request(InteractionStage::BeforeInteraction, v % 3 ? "px.t.net" : "u.org", header.c_str());
    log.end(v % 5 ? VisitOutcome::Rejected : VisitOutcome::InteractionFailed);
  }
  const auto visits = summarize_visits(log.events());
  const auto sent = extract_sent(log.events());
  const auto t = trackers({"t.net", "u.org"});
  const auto par = detect_intractable(jar, sent, visits, psl(), t);
  EXPECT_EQ(par, detect_intractable_serial(jar, sent, visits, psl(), t));
  EXPECT_FALSE(par.canonical.empty());
}

TEST(AccountingIdentity, JarKeysEqualCanonicalKeys) {
  auto s = basic_scenario();
  s.jar.upsert(jar_record("other", "tracker.net", "1", "basic.com"));
  const auto t = trackers({"tracker.net"});
  const auto r = detect(s.jar, s.log.events(), psl(), t);
  std::set<CookieKey> canonical;
  for (const auto& f : r.intractable.canonical) canonical.insert(f.key);
  const auto sent = extract_sent(s.log.events());
  EXPECT_EQ(jar_intractable_keys(s.jar, sent, r.visits, t), canonical);
}

TEST(DetectReset, Examples) {
  auto s = basic_scenario();
  auto t = trackers({"tracker.net"});
  {
    LogBuilder log;
    log.visit("new.com");
    log.request(InteractionStage::BeforeInteraction, "px.tracker.net", "id=123");
    log.set(InteractionStage::BeforeInteraction, "id=456; Domain=tracker.net", "px.tracker.net");
    log.end(VisitOutcome::Rejected);
    log.visit("other.com");
    log.request(InteractionStage::BeforeInteraction, "px.tracker.net", "id=123");
    log.set(InteractionStage::BeforeInteraction, "id=789; Domain=tracker.net", "px.tracker.net");
    log.end(VisitOutcome::Rejected);
    const auto r = detect(s.jar, log.events(), psl(), t);
    EXPECT_EQ(r.resets.size(), 2u);
  }
  {
    LogBuilder log;
    log.visit("new.com");
    log.request(InteractionStage::BeforeInteraction, "px.tracker.net", "id=123");
    log.set(InteractionStage::BeforeInteraction, "zz=1; Domain=tracker.net", "px.tracker.net");
    log.end(VisitOutcome::Rejected);
    EXPECT_TRUE(detect(s.jar, log.events(), psl(), t).resets.empty());
  }
}

TEST(SyncCandidate, ValueFilter) {
  EXPECT_TRUE(is_sync_candidate_value("AbCdEf123456"));
  EXPECT_FALSE(is_sync_candidate_value("true"));
  EXPECT_FALSE(is_sync_candidate_value("1234567890"));
  EXPECT_FALSE(is_sync_candidate_value("short"));
}

TEST(DetectSync, Examples) {
  CookieJar jar;
  jar.upsert(jar_record("uid", "tracker.net", "AbCdEf123456", "basic.com"));
  const auto t = trackers({"tracker.net", "other-tracker.com"});
  auto run = [&](const char* dest_host, const char* url) {
    LogBuilder log;
    log.visit("new.com");
    log.request(InteractionStage::BeforeInteraction, "px.tracker.net", "uid=AbCdEf123456");
    log.request(InteractionStage::BeforeInteraction, dest_host, "", url, Channel::ResourceFetch,
                std::string("https://px.tracker.net/"));
    log.end(VisitOutcome::Rejected);
    return detect(jar, log.events(), psl(), t).syncs;
  };
  const auto syncs = run("other-tracker.com", "https://other-tracker.com/?uid=AbCdEf123456");
  ASSERT_EQ(syncs.size(), 1u);
  EXPECT_EQ(syncs[0].origin_tracker.str(), "tracker.net");
  EXPECT_EQ(syncs[0].destination_tracker.str(), "other-tracker.com");
  EXPECT_EQ(syncs[0].parameter_name, "uid");
  EXPECT_TRUE(run("sync.tracker.net", "https://sync.tracker.net/?uid=AbCdEf123456").empty());

  CookieJar flag;
  flag.upsert(jar_record("uid", "tracker.net", "true", "basic.com"));
  LogBuilder log;
  log.visit("new.com");
  log.request(InteractionStage::BeforeInteraction, "px.tracker.net", "uid=true");
  log.request(InteractionStage::BeforeInteraction, "other-tracker.com", "", "https://other-tracker.com/?uid=true",
              Channel::ResourceFetch, std::string("https://px.tracker.net/"));
  log.end(VisitOutcome::Rejected);
  EXPECT_TRUE(detect(flag, log.events(), psl(), t).syncs.empty());
}

TEST(ChannelSplit, Examples) {
  std::vector<IntractableFinding> f(100);
  EXPECT_EQ(channel_split(f).resource_fraction, 1.0);
  EXPECT_EQ(channel_split(f).api_fraction, 0.0);
  for (int i = 0; i < 27; ++i) f[i].channel = Channel::ApiCall;
  EXPECT_DOUBLE_EQ(channel_split(f).resource_fraction, 0.73);
  EXPECT_DOUBLE_EQ(channel_split(f).api_fraction, 0.27);
  const auto e = channel_split({});
  EXPECT_TRUE(e.empty);
  EXPECT_EQ(e.resource_fraction + e.api_fraction, 0.0);
}

TEST(Findings, WriteReadRoundTrip) {
  auto s = basic_scenario();
  const auto r = detect(s.jar, s.log.events(), psl(), trackers({"tracker.net"}));
  std::stringstream buf;
  write_findings(buf, r);
  const auto back = read_findings(buf);
  EXPECT_EQ(back, r);
}
