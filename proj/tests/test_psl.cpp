#include <gtest/gtest.h>

#include <fstream>
#include <optional>
#include <regex>
#include <sstream>

#include "cookieflow/error.hpp"
#include "cookieflow/host.hpp"
#include "cookieflow/psl.hpp"

using namespace cookieflow;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const PslRuleSet& real_psl() {
  static const PslRuleSet rules = load_psl_file(COOKIEFLOW_TEST_DATA "/public_suffix_list.dat");
  return rules;
}

}  // namespace

TEST(LoadPsl, BucketsRules) {
  const auto r = load_psl("com\n// comment\n*.ck\n!www.ck");
  EXPECT_EQ(r.normal_rules, (std::unordered_set<std::string>{"com"}));
  EXPECT_EQ(r.wildcard_rules, (std::unordered_set<std::string>{"ck"}));
  EXPECT_EQ(r.exception_rules, (std::unordered_set<std::string>{"www.ck"}));
  EXPECT_TRUE(load_psl("").empty());
  EXPECT_EQ(load_psl("co.uk\ncom").normal_rules, (std::unordered_set<std::string>{"co.uk", "com"}));
}

TEST(EtldPlusOne, Examples) {
  const auto r = load_psl("co.uk\ncom\nuk");
  EXPECT_EQ(etld_plus_one("www.example.co.uk", r).str(), "example.co.uk");
  EXPECT_EQ(etld_plus_one("example.com", r).str(), "example.com");
  try {
    etld_plus_one("co.uk", r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::HostIsPublicSuffix);
  }
}

TEST(EtldPlusOne, WildcardAndException) {
  const auto r = load_psl("*.ck\n!www.ck");
  EXPECT_EQ(etld_plus_one("www.ck", r).str(), "www.ck");
  EXPECT_EQ(etld_plus_one("a.b.ck", r).str(), "a.b.ck");
  EXPECT_EQ(public_suffix("a.b.ck", r), "b.ck");
}

TEST(PartyOf, Examples) {
  const auto r = load_psl("com\nnet\nco.uk\nuk");
  EXPECT_EQ(party_of("cdn.shop.com", SiteId("shop.com"), r), Party::FirstParty);
  EXPECT_EQ(party_of("tracker.net", SiteId("shop.com"), r), Party::ThirdParty);
  EXPECT_EQ(party_of("shop.co.uk", SiteId("other.co.uk"), r), Party::ThirdParty);
}

// The published checkPublicSuffix suite against the bundled list. Expected
// Unicode results are compared in their punycode form.
TEST(PslSuite, PublishedTestVectors) {
  const std::regex line(R"re(^checkPublicSuffix\((null|'([^']*)'),\s*(null|'([^']*)')\);)re");
  std::istringstream in(slurp(COOKIEFLOW_TEST_DATA "/test_psl.txt"));
  std::string text;
  int checked = 0;
  while (std::getline(in, text)) {
    std::smatch m;
    if (!std::regex_search(text, m, line)) continue;
    if (m[1] == "null") continue;  // no input to resolve
    const std::optional<std::string> expected =
        m[3] == "null" ? std::nullopt : std::optional<std::string>(canonicalize_host(m[4].str()));
    const auto got = registrable_domain(m[2].str(), real_psl());
    const std::optional<std::string> got_str = got ? std::optional<std::string>(got->str()) : std::nullopt;
    EXPECT_EQ(got_str, expected) << text;
    ++checked;
  }
  EXPECT_GT(checked, 60);
}
