#include <gtest/gtest.h>

#include <sstream>

#include "cookieflow/crawl_log.hpp"

using namespace cookieflow;

namespace {

const std::string kHeader = "{\"format_version\":1}\n";

std::string start(int id, const char* phase = "STATELESS_MEASURE", const char* iter = "REJECT_ITER") {
  return std::string("{\"kind\":\"VISIT_START\",\"visit_id\":") + std::to_string(id) +
         ",\"site\":\"shop.com\",\"rank\":1,\"phase\":\"" + phase + "\",\"iteration\":\"" + iter +
         "\",\"gpc_enabled\":false}\n";
}
std::string request(int id, const char* stage, const char* cookies, const char* host = "px.tracker.net") {
  return std::string("{\"kind\":\"HTTP_REQUEST\",\"visit_id\":") + std::to_string(id) + ",\"stage\":\"" + stage +
         "\",\"target_host\":\"" + host + "\",\"target_url\":\"https://" + host +
         "/px\",\"channel\":\"RESOURCE_FETCH\",\"cookie_header\":\"" + cookies + "\"}\n";
}
std::string interaction(int id, const char* action, const char* stage) {
  return std::string("{\"kind\":\"INTERACTION\",\"visit_id\":") + std::to_string(id) + ",\"action\":\"" + action +
         "\",\"resulting_stage\":\"" + stage + "\"}\n";
}
std::string banner(int id) {
  return "{\"kind\":\"BANNER_OBSERVED\",\"visit_id\":" + std::to_string(id) +
         ",\"banner\":{\"banner_type\":\"NATIVE\",\"layers\":[{\"buttons\":[{\"label\":\"Reject all\",\"action\":"
         "\"REJECT\"}],\"toggles\":[]}]}}\n";
}
std::string end(int id, const char* outcome = "REJECTED") {
  return "{\"kind\":\"VISIT_END\",\"visit_id\":" + std::to_string(id) + ",\"outcome\":\"" + outcome + "\"}\n";
}

std::string six_line_visit() {
  return kHeader + start(1) + banner(1) + request(1, "BEFORE_INTERACTION", "id=123") +
         interaction(1, "REJECT_CLICKED", "AFTER_REJECT") + request(1, "AFTER_REJECT", "") + end(1);
}

}  // namespace

TEST(ParseLog, WellFormedVisit) {
  const auto events = parse_log(six_line_visit());
  ASSERT_EQ(events.size(), 6u);
  for (std::size_t i = 0; i < events.size(); ++i) EXPECT_EQ(events[i].event_index, i);
  EXPECT_EQ(events.front().kind(), "VISIT_START");
  EXPECT_EQ(events.back().kind(), "VISIT_END");
}

TEST(ParseLog, EndBeforeStart) {
  try {
    parse_log(kHeader + end(1) + start(1) + end(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SequenceViolation);
  }
}

TEST(ParseLog, StageGoesBackwards) {
  const auto text = kHeader + start(1) + banner(1) + interaction(1, "REJECT_CLICKED", "AFTER_REJECT") +
                    request(1, "AFTER_REJECT", "") + request(1, "BEFORE_INTERACTION", "") + end(1);
  const auto r = parse_log_collect(text);
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.errors[0].code, ErrorCode::SequenceViolation);
  EXPECT_EQ(r.errors[0].line, 6u);
}

TEST(ParseLog, MalformedRecordAndTruncation) {
  auto r = parse_log_collect(kHeader + start(1) + "{\"kind\":\"HTTP_REQ\n");
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.errors[0].code, ErrorCode::MalformedRecord);

  r = parse_log_collect(kHeader + start(1) + banner(1));
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.errors[0].code, ErrorCode::SequenceViolation);
}

TEST(ParseLog, WrongFormatVersion) {
  auto r = parse_log_collect("{\"format_version\":99}\n" + start(1) + end(1, "NO_BANNER"));
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.errors[0].code, ErrorCode::MalformedRecord);
}

TEST(WriteLog, RoundTrip) {
  const auto events = parse_log(six_line_visit());
  std::ostringstream out;
  write_log(out, events);
  EXPECT_EQ(out.str(), six_line_visit());
  EXPECT_EQ(parse_log(out.str()), events);
}

TEST(ValidateCookieHeaders, MalformedPair) {
  const auto events = parse_log(kHeader + start(1) + request(1, "BEFORE_INTERACTION", "a=1; junk") +
                                end(1, "NO_BANNER"));
  const auto d = validate_cookie_headers(events);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].code, ErrorCode::MalformedPair);
}

TEST(ExtractSent, Examples) {
  auto events = parse_log(six_line_visit());
  auto sent = extract_sent(events);
  ASSERT_EQ(sent.size(), 1u);
  EXPECT_EQ(sent[0].stage, InteractionStage::BeforeInteraction);
  EXPECT_EQ(sent[0].name, "id");
  EXPECT_EQ(sent[0].sender_site.str(), "shop.com");

  events = parse_log(kHeader + start(1) + request(1, "BEFORE_INTERACTION", "") + end(1, "NO_BANNER"));
  EXPECT_TRUE(extract_sent(events).empty());

  events = parse_log(kHeader + start(1) + request(1, "BEFORE_INTERACTION", "id=1", "a.net") +
                     request(1, "BEFORE_INTERACTION", "id=1", "b.net") + end(1, "NO_BANNER"));
  sent = extract_sent(events);
  ASSERT_EQ(sent.size(), 2u);
  EXPECT_NE(sent[0].target_host, sent[1].target_host);
}
