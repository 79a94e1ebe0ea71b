#include "cookieflow/crawl_log.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "cookieflow/cookie_parse.hpp"
#include "cookieflow/host.hpp"
#include "json_util.hpp"

namespace cookieflow {

namespace detail {

const Json& require(const Json& obj, std::string_view field, ErrorCode code) {
  auto it = obj.find(field);
  if (it == obj.end()) throw Error(code, "missing field '" + std::string(field) + "'");
  return *it;
}

std::string require_string(const Json& obj, std::string_view field, ErrorCode code) {
  const Json& v = require(obj, field, code);
  if (!v.is_string()) throw Error(code, "field '" + std::string(field) + "' must be a string");
  return v.get<std::string>();
}

bool require_bool(const Json& obj, std::string_view field, ErrorCode code) {
  const Json& v = require(obj, field, code);
  if (!v.is_boolean()) throw Error(code, "field '" + std::string(field) + "' must be a boolean");
  return v.get<bool>();
}

std::uint64_t require_uint(const Json& obj, std::string_view field, ErrorCode code) {
  const Json& v = require(obj, field, code);
  if (!v.is_number_unsigned())
    throw Error(code, "field '" + std::string(field) + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

OrderedJson banner_to_json(const BannerDescriptor& banner) {
  OrderedJson layers = OrderedJson::array();
  for (const auto& layer : banner.layers) {
    OrderedJson buttons = OrderedJson::array();
    for (const auto& b : layer.buttons)
      buttons.push_back({{"label", b.label}, {"action", to_string(b.action)}});
    OrderedJson toggles = OrderedJson::array();
    for (const auto& t : layer.toggles)
      toggles.push_back({{"category", t.category}, {"preselected", t.preselected}, {"essential", t.essential}});
    layers.push_back({{"buttons", std::move(buttons)}, {"toggles", std::move(toggles)}});
  }
  return {{"banner_type", to_string(banner.banner_type)}, {"layers", std::move(layers)}};
}

BannerDescriptor banner_from_json(const Json& j, ErrorCode code) {
  if (!j.is_object()) throw Error(code, "banner must be an object");
  BannerDescriptor banner;
  banner.banner_type = require_enum<BannerType>(j, "banner_type", code);
  if (auto it = j.find("layers"); it != j.end()) {
    if (!it->is_array()) throw Error(code, "banner.layers must be an array");
    for (const auto& lj : *it) {
      if (!lj.is_object()) throw Error(code, "banner layer must be an object");
      BannerLayer layer;
      if (auto b = lj.find("buttons"); b != lj.end()) {
        if (!b->is_array()) throw Error(code, "layer.buttons must be an array");
        for (const auto& bj : *b)
          layer.buttons.push_back({require_string(bj, "label", code), require_enum<ButtonAction>(bj, "action", code)});
      }
      if (auto t = lj.find("toggles"); t != lj.end()) {
        if (!t->is_array()) throw Error(code, "layer.toggles must be an array");
        for (const auto& tj : *t)
          layer.toggles.push_back({require_string(tj, "category", code), require_bool(tj, "preselected", code),
                                   require_bool(tj, "essential", code)});
      }
      banner.layers.push_back(std::move(layer));
    }
  }
  if (!banner.valid()) throw Error(code, "banner of type NONE must not have layers");
  return banner;
}

}  // namespace detail

using detail::Json;
using detail::OrderedJson;

namespace {

constexpr ErrorCode kBad = ErrorCode::MalformedRecord;

std::string canonical_or_throw(const std::string& host) {
  try {
    return canonicalize_host(host);
  } catch (const Error& e) {
    throw Error(kBad, e.what());
  }
}

EventPayload payload_from_json(const Json& j) {
  if (!j.is_object()) throw Error(kBad, "record is not an object");
  const std::string kind = detail::require_string(j, "kind", kBad);
  const VisitId visit = detail::require_uint(j, "visit_id", kBad);
  using detail::require_bool;
  using detail::require_enum;
  using detail::require_string;
  if (kind == "VISIT_START") {
    VisitStart e;
    e.visit_id = visit;
    e.site = SiteId(canonical_or_throw(require_string(j, "site", kBad)));
    const std::uint64_t rank = detail::require_uint(j, "rank", kBad);
    if (rank == 0 || rank > UINT32_MAX) throw Error(kBad, "rank must be a positive 32-bit integer");
    e.rank = static_cast<std::uint32_t>(rank);
    e.phase = require_enum<Phase>(j, "phase", kBad);
    e.iteration = require_enum<Iteration>(j, "iteration", kBad);
    e.gpc_enabled = require_bool(j, "gpc_enabled", kBad);
    return e;
  }
  if (kind == "BANNER_OBSERVED") {
    return BannerObserved{visit, detail::banner_from_json(detail::require(j, "banner", kBad), kBad)};
  }
  if (kind == "INTERACTION") {
    return Interaction{visit, require_enum<InteractionAction>(j, "action", kBad),
                       require_enum<InteractionStage>(j, "resulting_stage", kBad)};
  }
  if (kind == "HTTP_REQUEST") {
    HttpRequest e;
    e.visit_id = visit;
    e.stage = require_enum<InteractionStage>(j, "stage", kBad);
    e.target_host = canonical_or_throw(require_string(j, "target_host", kBad));
    e.target_url = require_string(j, "target_url", kBad);
    e.channel = require_enum<Channel>(j, "channel", kBad);
    if (auto it = j.find("redirect_parent_url"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) throw Error(kBad, "redirect_parent_url must be a string");
      e.redirect_parent_url = it->get<std::string>();
    }
    e.cookie_header = require_string(j, "cookie_header", kBad);
    return e;
  }
  if (kind == "COOKIE_SET") {
    CookieSet e;
    e.visit_id = visit;
    e.stage = require_enum<InteractionStage>(j, "stage", kBad);
    e.set_cookie_header = require_string(j, "set_cookie_header", kBad);
    e.setter_context_host = canonical_or_throw(require_string(j, "setter_context_host", kBad));
    return e;
  }
  if (kind == "VISIT_END") {
    return VisitEnd{visit, require_enum<VisitOutcome>(j, "outcome", kBad)};
  }
  throw Error(kBad, "unknown kind '" + kind + "'");
}

struct VisitState {
  bool ended = false;
  bool banner = false;
  bool accepted = false;
  bool rejected = false;
  std::size_t events = 0;
  Phase phase = Phase::StatelessMeasure;
  Iteration iteration = Iteration::RejectIter;
  InteractionStage stage = InteractionStage::BeforeInteraction;
};

std::string visit_label(VisitId id) { return "visit " + std::to_string(id) + ": "; }

}  // namespace

VisitId CrawlEvent::visit_id() const {
  return std::visit([](const auto& e) { return e.visit_id; }, payload);
}

std::string_view CrawlEvent::kind() const {
  static constexpr std::string_view kinds[] = {"VISIT_START", "BANNER_OBSERVED", "INTERACTION",
                                               "HTTP_REQUEST", "COOKIE_SET", "VISIT_END"};
  return kinds[payload.index()];
}

std::string serialize_event(const EventPayload& payload) {
  OrderedJson j;
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, VisitStart>) {
          j = {{"kind", "VISIT_START"}, {"visit_id", e.visit_id}, {"site", e.site.str()},
               {"rank", e.rank}, {"phase", to_string(e.phase)}, {"iteration", to_string(e.iteration)},
               {"gpc_enabled", e.gpc_enabled}};
        } else if constexpr (std::is_same_v<T, BannerObserved>) {
          j = {{"kind", "BANNER_OBSERVED"}, {"visit_id", e.visit_id}, {"banner", detail::banner_to_json(e.banner)}};
        } else if constexpr (std::is_same_v<T, Interaction>) {
          j = {{"kind", "INTERACTION"}, {"visit_id", e.visit_id}, {"action", to_string(e.action)},
               {"resulting_stage", to_string(e.resulting_stage)}};
        } else if constexpr (std::is_same_v<T, HttpRequest>) {
          j = {{"kind", "HTTP_REQUEST"}, {"visit_id", e.visit_id}, {"stage", to_string(e.stage)},
               {"target_host", e.target_host}, {"target_url", e.target_url}, {"channel", to_string(e.channel)}};
          if (e.redirect_parent_url) j["redirect_parent_url"] = *e.redirect_parent_url;
          j["cookie_header"] = e.cookie_header;
        } else if constexpr (std::is_same_v<T, CookieSet>) {
          j = {{"kind", "COOKIE_SET"}, {"visit_id", e.visit_id}, {"stage", to_string(e.stage)},
               {"set_cookie_header", e.set_cookie_header}, {"setter_context_host", e.setter_context_host}};
        } else {
          j = {{"kind", "VISIT_END"}, {"visit_id", e.visit_id}, {"outcome", to_string(e.outcome)}};
        }
      },
      payload);
  return j.dump();
}

std::string log_header_line() {
  return OrderedJson{{"format_version", kLogFormatVersion}}.dump();
}

void write_log(std::ostream& out, std::span<const CrawlEvent> events) {
  out << log_header_line() << '\n';
  for (const auto& e : events) out << serialize_event(e.payload) << '\n';
}

LogParseResult parse_log_collect(std::istream& in) {
  LogParseResult result;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      result.errors.push_back({kBad, line_no, std::string("invalid JSON: ") + e.what()});
      if (!header_seen) header_seen = true;
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      auto v = j.is_object() ? j.find("format_version") : j.end();
      if (!j.is_object() || v == j.end()) {
        result.errors.push_back({kBad, line_no, "missing format_version header record"});
      } else if (!v->is_number_integer() || v->get<long long>() != kLogFormatVersion) {
        result.errors.push_back({kBad, line_no, "unsupported format_version " + v->dump()});
      }
      if (j.is_object() && v != j.end()) continue;
    }
    try {
      result.events.push_back({result.events.size(), payload_from_json(j)});
      result.lines.push_back(line_no);
    } catch (const Error& e) {
      result.errors.push_back({e.code(), line_no, e.what()});
    }
  }
  if (!header_seen) result.errors.push_back({kBad, 1, "empty log: missing format_version header record"});

  auto seq = validate_sequence(result.events, result.lines, line_no + 1);
  result.errors.insert(result.errors.end(), seq.begin(), seq.end());
  std::stable_sort(result.errors.begin(), result.errors.end(),
                   [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
  return result;
}

LogParseResult parse_log_collect(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_log_collect(in);
}

std::vector<CrawlEvent> parse_log(std::istream& in) {
  auto result = parse_log_collect(in);
  if (!result.ok()) {
    const auto& first = result.errors.front();
    throw Error(first.code, "line " + std::to_string(first.line) + ": " + first.message);
  }
  return std::move(result.events);
}

std::vector<CrawlEvent> parse_log(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_log(in);
}

Diagnostics validate_sequence(std::span<const CrawlEvent> events, std::span<const std::size_t> lines,
                              std::size_t eof_line) {
  Diagnostics out;
  std::map<VisitId, VisitState> visits;
  auto line_of = [&](std::size_t i) { return lines.empty() ? i + 1 : lines[i]; };
  auto violation = [&](std::size_t i, VisitId id, const std::string& what) {
    out.push_back({ErrorCode::SequenceViolation, line_of(i), visit_label(id) + what});
  };

  for (std::size_t i = 0; i < events.size(); ++i) {
    const CrawlEvent& ev = events[i];
    const VisitId id = ev.visit_id();
    auto it = visits.find(id);

    if (const auto* start = std::get_if<VisitStart>(&ev.payload)) {
      if (it != visits.end()) {
        violation(i, id, "duplicate VISIT_START");
        continue;
      }
      VisitState st;
      st.phase = start->phase;
      st.iteration = start->iteration;
      st.events = 1;
      if (start->phase == Phase::StatefulAccept && start->iteration != Iteration::AcceptIter)
        violation(i, id, "STATEFUL_ACCEPT visits must use ACCEPT_ITER");
      visits.emplace(id, st);
      continue;
    }
    if (it == visits.end()) {
      violation(i, id, std::string(ev.kind()) + " before VISIT_START");
      continue;
    }
    VisitState& st = it->second;
    if (st.ended) {
      violation(i, id, std::string(ev.kind()) + " after VISIT_END");
      continue;
    }
    ++st.events;

    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, BannerObserved>) {
            if (st.banner) {
              violation(i, id, "second BANNER_OBSERVED");
            } else if (st.events != 2) {
              violation(i, id, "BANNER_OBSERVED must directly follow VISIT_START");
            }
            st.banner = true;
          } else if constexpr (std::is_same_v<T, Interaction>) {
            using enum InteractionAction;
            using S = InteractionStage;
            switch (e.action) {
              case AcceptClicked:
                if (!st.banner) violation(i, id, "ACCEPT_CLICKED without a banner");
                if (st.iteration != Iteration::AcceptIter) violation(i, id, "ACCEPT_CLICKED in REJECT_ITER");
                if (st.stage != S::BeforeInteraction) violation(i, id, "ACCEPT_CLICKED after an interaction");
                if (e.resulting_stage != S::AfterAccept) violation(i, id, "ACCEPT_CLICKED must lead to AFTER_ACCEPT");
                st.accepted = true;
                break;
              case RejectClicked:
                if (!st.banner) violation(i, id, "REJECT_CLICKED without a banner");
                if (st.iteration != Iteration::RejectIter) violation(i, id, "REJECT_CLICKED in ACCEPT_ITER");
                if (st.stage != S::BeforeInteraction) violation(i, id, "REJECT_CLICKED after an interaction");
                if (e.resulting_stage != S::AfterReject) violation(i, id, "REJECT_CLICKED must lead to AFTER_REJECT");
                st.rejected = true;
                break;
              case Reload:
                if (st.stage != S::AfterReject) violation(i, id, "RELOAD is only recorded after a rejection");
                if (e.resulting_stage != S::AfterReloadedReject)
                  violation(i, id, "RELOAD must lead to AFTER_RELOADED_REJECT");
                break;
            }
            if (e.resulting_stage <= st.stage) {
              violation(i, id, "stage " + std::string(to_string(e.resulting_stage)) + " does not advance from " +
                                   std::string(to_string(st.stage)));
            } else {
              st.stage = e.resulting_stage;
            }
          } else if constexpr (std::is_same_v<T, HttpRequest> || std::is_same_v<T, CookieSet>) {
            if (e.stage < st.stage) {
              violation(i, id, "stage " + std::string(to_string(e.stage)) + " after " + std::string(to_string(st.stage)));
            } else if (e.stage > st.stage) {
              violation(i, id, "stage " + std::string(to_string(e.stage)) + " without the interaction leading to it");
            }
          } else if constexpr (std::is_same_v<T, VisitEnd>) {
            st.ended = true;
            if (e.outcome == VisitOutcome::Accepted && !st.accepted)
              violation(i, id, "outcome ACCEPTED without ACCEPT_CLICKED");
            if (e.outcome == VisitOutcome::Rejected && !st.rejected)
              violation(i, id, "outcome REJECTED without REJECT_CLICKED");
            if (e.outcome == VisitOutcome::NoBanner && st.banner)
              violation(i, id, "outcome NO_BANNER after BANNER_OBSERVED");
          }
        },
        ev.payload);
  }

  if (eof_line == 0) eof_line = lines.empty() ? events.size() + 1 : lines.back() + 1;
  for (const auto& [id, st] : visits)
    if (!st.ended) out.push_back({ErrorCode::SequenceViolation, eof_line, visit_label(id) + "missing VISIT_END"});
  return out;
}

Diagnostics validate_cookie_headers(std::span<const CrawlEvent> events, std::span<const std::size_t> lines) {
  Diagnostics out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::size_t line = lines.empty() ? i + 1 : lines[i];
    if (const auto* req = std::get_if<HttpRequest>(&events[i].payload)) {
      for (auto& d : parse_cookie_header(req->cookie_header).errors) {
        d.line = line;
        out.push_back(std::move(d));
      }
    } else if (const auto* set = std::get_if<CookieSet>(&events[i].payload)) {
      try {
        parse_set_cookie(set->set_cookie_header, set->setter_context_host, virtual_time(events[i].event_index));
      } catch (const Error& e) {
        out.push_back({e.code() == ErrorCode::MissingName ? ErrorCode::MissingName : ErrorCode::MalformedRecord,
                       line, e.what()});
      }
    }
  }
  return out;
}

std::vector<SentCookieObservation> extract_sent(std::span<const CrawlEvent> events, Diagnostics* warnings) {
  std::vector<SentCookieObservation> out;
  std::map<VisitId, SiteId> site_of;
  for (const auto& ev : events) {
    if (const auto* start = std::get_if<VisitStart>(&ev.payload)) {
      site_of[start->visit_id] = start->site;
      continue;
    }
    const auto* req = std::get_if<HttpRequest>(&ev.payload);
    if (req == nullptr) continue;
    auto parsed = parse_cookie_header(req->cookie_header);
    if (warnings) {
      for (auto& d : parsed.errors) {
        d.line = ev.event_index + 1;
        warnings->push_back(std::move(d));
      }
    }
    const auto site = site_of.find(req->visit_id);
    for (auto& pair : parsed.pairs) {
      SentCookieObservation obs;
      obs.name = std::move(pair.name);
      obs.value = std::move(pair.value);
      obs.target_host = req->target_host;
      if (site != site_of.end()) obs.sender_site = site->second;
      obs.stage = req->stage;
      obs.channel = req->channel;
      obs.visit_id = req->visit_id;
      obs.event_index = ev.event_index;
      out.push_back(std::move(obs));
    }
  }
  return out;
}

}  // namespace cookieflow
