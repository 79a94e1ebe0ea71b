#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cookieflow/error.hpp"
#include "cookieflow/model.hpp"

namespace cookieflow {

inline constexpr int kLogFormatVersion = 1;

using VisitId = std::uint64_t;

struct VisitStart {
  VisitId visit_id = 0;
  SiteId site;
  std::uint32_t rank = 1;
  Phase phase = Phase::StatelessMeasure;
  Iteration iteration = Iteration::RejectIter;
  bool gpc_enabled = false;
  friend bool operator==(const VisitStart&, const VisitStart&) = default;
};

struct BannerObserved {
  VisitId visit_id = 0;
  BannerDescriptor banner;
  friend bool operator==(const BannerObserved&, const BannerObserved&) = default;
};

struct Interaction {
  VisitId visit_id = 0;
  InteractionAction action = InteractionAction::RejectClicked;
  InteractionStage resulting_stage = InteractionStage::AfterReject;
  friend bool operator==(const Interaction&, const Interaction&) = default;
};

struct HttpRequest {
  VisitId visit_id = 0;
  InteractionStage stage = InteractionStage::BeforeInteraction;
  std::string target_host;
  std::string target_url;
  Channel channel = Channel::ResourceFetch;
  std::optional<std::string> redirect_parent_url;
  std::string cookie_header;
  friend bool operator==(const HttpRequest&, const HttpRequest&) = default;
};

struct CookieSet {
  VisitId visit_id = 0;
  InteractionStage stage = InteractionStage::BeforeInteraction;
  std::string set_cookie_header;
  std::string setter_context_host;
  friend bool operator==(const CookieSet&, const CookieSet&) = default;
};

struct VisitEnd {
  VisitId visit_id = 0;
  VisitOutcome outcome = VisitOutcome::Rejected;
  friend bool operator==(const VisitEnd&, const VisitEnd&) = default;
};

using EventPayload = std::variant<VisitStart, BannerObserved, Interaction, HttpRequest, CookieSet, VisitEnd>;

struct CrawlEvent {
  std::uint64_t event_index = 0;
  EventPayload payload;

  VisitId visit_id() const;
  std::string_view kind() const;
  friend bool operator==(const CrawlEvent&, const CrawlEvent&) = default;
};

struct SentCookieObservation {
  std::string name;
  std::string value;
  std::string target_host;
  SiteId sender_site;
  InteractionStage stage = InteractionStage::BeforeInteraction;
  Channel channel = Channel::ResourceFetch;
  VisitId visit_id = 0;
  std::uint64_t event_index = 0;
  friend bool operator==(const SentCookieObservation&, const SentCookieObservation&) = default;
};

// Serialization. One JSON object per line, fields in declaration order.
std::string serialize_event(const EventPayload& payload);
std::string log_header_line();
void write_log(std::ostream& out, std::span<const CrawlEvent> events);

struct LogParseResult {
  std::vector<CrawlEvent> events;
  std::vector<std::size_t> lines;  // 1-based source line per event
  Diagnostics errors;              // MalformedRecord / SequenceViolation, in line order
  bool ok() const { return errors.empty(); }
};

// Collects every malformed line and sequencing violation instead of throwing.
LogParseResult parse_log_collect(std::istream& in);
LogParseResult parse_log_collect(std::string_view text);

// Throws Error{MalformedRecord} or Error{SequenceViolation} for the first problem.
std::vector<CrawlEvent> parse_log(std::istream& in);
std::vector<CrawlEvent> parse_log(std::string_view text);

// Per-visit sequencing check. `lines` may be empty (diagnostics then carry
// event position + 1 as their line). Unterminated visits are reported at
// `eof_line`, derived from `lines` when 0.
Diagnostics validate_sequence(std::span<const CrawlEvent> events, std::span<const std::size_t> lines = {},
                              std::size_t eof_line = 0);

// Grammar check of every cookie_header (MalformedPair) and set_cookie_header (MissingName).
Diagnostics validate_cookie_headers(std::span<const CrawlEvent> events, std::span<const std::size_t> lines = {});

// One observation per (HTTP_REQUEST, cookie pair). Malformed pairs are
// skipped and reported through `warnings` when given.
std::vector<SentCookieObservation> extract_sent(std::span<const CrawlEvent> events, Diagnostics* warnings = nullptr);

}  // namespace cookieflow
