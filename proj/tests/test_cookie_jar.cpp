#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "cookieflow/cookie_jar.hpp"

using namespace cookieflow;

namespace {

CookieRecord record(const std::string& name, const std::string& host, const char* setter, std::int64_t max_age,
                    std::uint64_t at, std::optional<std::string> partition = std::nullopt) {
  CookieRecord r;
  r.key = {name, host, partition ? std::optional<SiteId>(SiteId(*partition)) : std::nullopt};
  r.value = "v";
  r.original_expiry = Timestamp{kCrawlEpoch + static_cast<std::int64_t>(at) + max_age};
  r.setter_site = SiteId(setter);
  r.set_at = at;
  r.phase = Phase::StatefulAccept;
  return r;
}

}  // namespace

TEST(Upsert, StoresWithFixedExpiry) {
  CookieJar jar;
  jar.upsert(record("id", "t.net", "a.com", 365 * 86400, 3));
  ASSERT_EQ(jar.entries().size(), 1u);
  const auto& e = jar.entries().begin()->second;
  EXPECT_EQ(e.effective_expiry, Timestamp{kFixedExpiry});
  EXPECT_EQ(e.original_expiry, Expiry(Timestamp{kCrawlEpoch + 3 + 365 * 86400}));
}

TEST(Upsert, LatestWriteWins) {
  CookieJar jar;
  jar.upsert(record("id", "t.net", "a.com", 100, 1));
  jar.upsert(record("id", "t.net", "b.com", 100, 2));
  EXPECT_EQ(jar.entries().size(), 1u);
  EXPECT_EQ(jar.history().size(), 2u);
  EXPECT_EQ(jar.entries().begin()->second.setter_site.str(), "b.com");
}

TEST(Upsert, PastExpiryDeletes) {
  CookieJar jar;
  jar.upsert(record("id", "t.net", "a.com", 100, 1));
  jar.upsert(record("id", "t.net", "a.com", -1, 2));
  EXPECT_TRUE(jar.entries().empty());
  ASSERT_EQ(jar.history().size(), 2u);
  EXPECT_TRUE(jar.history()[1].deletion);
}

TEST(Upsert, PartitionIsPartOfIdentity) {
  CookieJar jar;
  jar.upsert(record("id", "t.net", "a.com", 100, 1, "a.com"));
  jar.upsert(record("id", "t.net", "a.com", 100, 2));
  EXPECT_EQ(jar.entries().size(), 2u);
  jar.upsert(record("id", "t.net", "a.com", 100, 3, "a.com"));
  EXPECT_EQ(jar.entries().size(), 2u);
  jar.upsert(record("id", "t.net", "b.com", 100, 4, "b.com"));
  EXPECT_EQ(jar.entries().size(), 3u);
}

TEST(Upsert, WrongPhase) {
  CookieJar jar;
  auto r = record("id", "t.net", "a.com", 100, 1);
  r.phase = Phase::StatelessMeasure;
  try {
    jar.upsert(r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WrongPhase);
  }
}

namespace {

CookieJar jar_with_sites(int sites) {
  CookieJar jar;
  for (int s = 0; s < sites; ++s) {
    const std::string site = "s" + std::to_string(s) + ".com";
    jar.record_visit(SiteId(site), {static_cast<std::uint32_t>(s + 1), BannerType::Cmp, VisitOutcome::Accepted});
    jar.upsert(record("c" + std::to_string(s), "t.net", site.c_str(), 100, s));
  }
  return jar;
}

}  // namespace

TEST(NormalizeSample, Examples) {
  const auto jar = jar_with_sites(6);
  EXPECT_EQ(jar.normalize_sample(6, 1), jar);
  EXPECT_TRUE(jar.normalize_sample(0, 1).entries().empty());
  EXPECT_EQ(jar.normalize_sample(3, 42), jar.normalize_sample(3, 42));
  const auto once = jar.normalize_sample(3, 42);
  EXPECT_EQ(once.accepted_sites().size(), 3u);
  EXPECT_EQ(once.normalize_sample(3, 42), once);
  try {
    jar.normalize_sample(7, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SampleTooLarge);
  }
}

TEST(Snapshot, RoundTrip) {
  CookieJar empty;
  EXPECT_EQ(CookieJar::deserialize(empty.serialize()), empty);

  CookieJar big;
  for (int i = 0; i < 10000; ++i)
    big.upsert(record("n" + std::to_string(i), "h" + std::to_string(i % 97) + ".net", "a.com", 100, i,
                      i % 5 == 0 ? std::optional<std::string>("p.com") : std::nullopt));
  const auto bytes = big.serialize();
  const auto back = CookieJar::deserialize(bytes);
  EXPECT_EQ(back, big);
  EXPECT_EQ(back.serialize(), bytes);

  const auto path = std::filesystem::temp_directory_path() / "cookieflow_jar_test.jar";
  big.save(path);
  EXPECT_EQ(CookieJar::load(path), big);
  std::filesystem::remove(path);
}

TEST(Snapshot, TruncatedIsCorrupt) {
  const auto bytes = jar_with_sites(3).serialize();
  try {
    CookieJar::deserialize(std::string_view(bytes).substr(0, bytes.size() / 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CorruptSnapshot);
  }
}

// Random set/delete sequences against a plain map model.
TEST(Upsert, RandomSequencesMatchModel) {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 200; ++round) {
    CookieJar jar;
    std::map<CookieKey, std::string> model;
    std::size_t live_sets = 0;
    for (int i = 0; i < 50; ++i) {
      const std::string name = "n" + std::to_string(rng() % 4);
      const std::optional<std::string> part =
          rng() % 3 == 0 ? std::optional<std::string>("p" + std::to_string(rng() % 2) + ".com") : std::nullopt;
      const bool del = rng() % 4 == 0;
      auto r = record(name, "t.net", "a.com", del ? -5 : 1000, i, part);
      r.value = std::to_string(i);
      jar.upsert(r);
      if (del) {
        model.erase(r.key);
      } else {
        model[r.key] = r.value;
        ++live_sets;
      }
    }
    ASSERT_EQ(jar.entries().size(), model.size());
    std::size_t non_deletion_rows = 0;
    for (const auto& h : jar.history()) non_deletion_rows += h.deletion ? 0 : 1;
    EXPECT_EQ(non_deletion_rows, live_sets);
    for (const auto& [k, v] : jar.entries()) {
      ASSERT_TRUE(model.contains(k));
      EXPECT_EQ(model[k], v.value);
      EXPECT_EQ(v.effective_expiry, Timestamp{kFixedExpiry});
    }
  }
}

TEST(SampleSites, DeterministicAndSized) {
  std::set<SiteId> sites;
  for (int i = 0; i < 20; ++i) sites.insert(SiteId("s" + std::to_string(i) + ".com"));
  const auto a = sample_sites(sites, 5, 9);
  EXPECT_EQ(a.size(), 5u);
  EXPECT_EQ(a, sample_sites(sites, 5, 9));
  EXPECT_EQ(std::set<SiteId>(a.begin(), a.end()).size(), 5u);
}

TEST(BuildJar, ReplaysOnlyStatefulPhase) {
  const std::string log =
      "{\"format_version\":1}\n"
      "{\"kind\":\"VISIT_START\",\"visit_id\":1,\"site\":\"basic.com\",\"rank\":1,\"phase\":\"STATEFUL_ACCEPT\","
      "\"iteration\":\"ACCEPT_ITER\",\"gpc_enabled\":false}\n"
      "{\"kind\":\"BANNER_OBSERVED\",\"visit_id\":1,\"banner\":{\"banner_type\":\"CMP\",\"layers\":[{\"buttons\":"
      "[{\"label\":\"Accept\",\"action\":\"ACCEPT\"}],\"toggles\":[]}]}}\n"
      "{\"kind\":\"INTERACTION\",\"visit_id\":1,\"action\":\"ACCEPT_CLICKED\",\"resulting_stage\":\"AFTER_ACCEPT\"}\n"
      "{\"kind\":\"COOKIE_SET\",\"visit_id\":1,\"stage\":\"AFTER_ACCEPT\",\"set_cookie_header\":\"id=123; "
      "Domain=tracker.net; Max-Age=31536000\",\"setter_context_host\":\"px.tracker.net\"}\n"
      "{\"kind\":\"VISIT_END\",\"visit_id\":1,\"outcome\":\"ACCEPTED\"}\n"
      "{\"kind\":\"VISIT_START\",\"visit_id\":2,\"site\":\"new.com\",\"rank\":2,\"phase\":\"STATELESS_MEASURE\","
      "\"iteration\":\"REJECT_ITER\",\"gpc_enabled\":false}\n"
      "{\"kind\":\"COOKIE_SET\",\"visit_id\":2,\"stage\":\"BEFORE_INTERACTION\",\"set_cookie_header\":\"x=1\","
      "\"setter_context_host\":\"px.tracker.net\"}\n"
      "{\"kind\":\"VISIT_END\",\"visit_id\":2,\"outcome\":\"NO_BANNER\"}\n";
  const auto jar = build_jar(parse_log(log));
  ASSERT_EQ(jar.entries().size(), 1u);
  const auto& [key, rec] = *jar.entries().begin();
  EXPECT_EQ(key, (CookieKey{"id", "tracker.net", std::nullopt}));
  EXPECT_EQ(rec.consent_state_at_set, ConsentState::PostAccept);
  EXPECT_EQ(jar.accepted_sites(), (std::set<SiteId>{SiteId("basic.com")}));
}
