#include "cookieflow/detector.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <tuple>

#include "cookieflow/cookie_parse.hpp"
#include "cookieflow/host.hpp"
#include "json_util.hpp"

namespace cookieflow {

using detail::Json;
using detail::OrderedJson;

VisitTable summarize_visits(std::span<const CrawlEvent> events) {
  VisitTable visits;
  for (const auto& ev : events) {
    const VisitId id = ev.visit_id();
    if (const auto* start = std::get_if<VisitStart>(&ev.payload)) {
      VisitInfo info;
      info.visit_id = id;
      info.site = start->site;
      info.rank = start->rank;
      info.phase = start->phase;
      info.iteration = start->iteration;
      info.gpc_enabled = start->gpc_enabled;
      visits.insert_or_assign(id, info);
      continue;
    }
    auto it = visits.find(id);
    if (it == visits.end()) continue;
    VisitInfo& info = it->second;
    if (const auto* banner = std::get_if<BannerObserved>(&ev.payload)) {
      info.banner_type = banner->banner.banner_type;
    } else if (const auto* req = std::get_if<HttpRequest>(&ev.payload)) {
      const auto n = parse_cookie_header(req->cookie_header).pairs.size();
      info.sent_total += n;
      if (req->stage == InteractionStage::BeforeInteraction) info.sent_before_interaction += n;
    } else if (const auto* end = std::get_if<VisitEnd>(&ev.payload)) {
      info.outcome = end->outcome;
    }
  }
  return visits;
}

SiteId tracker_domain_of(std::string_view host, const PslRuleSet& psl) {
  try {
    return etld_plus_one(host, psl);
  } catch (const Error&) {
    return SiteId(host);
  }
}

CookieFlags classify_cookie(const CookieRecord& record, const SiteId& visit_site, const PslRuleSet& psl,
                            const TrackerDomainSet& trackers) {
  return {party_of(record.key.host, visit_site, psl), is_tracker(record.key.host, trackers)};
}

JarIndex::JarIndex(const CookieJar& jar) : jar_(&jar) {
  for (const auto& [key, record] : jar.entries())
    if (!key.partition) by_name_[key.name].push_back(&record);
  for (const auto& row : jar.history()) {
    if (row.deletion) continue;
    auto& setters = setters_[row.key];
    if (std::find(setters.begin(), setters.end(), row.setter_site) == setters.end())
      setters.push_back(row.setter_site);
  }
  for (auto& [key, setters] : setters_) std::sort(setters.begin(), setters.end());
}

std::optional<CookieKey> JarIndex::match(const SentCookieObservation& obs) const {
  auto it = by_name_.find(obs.name);
  if (it == by_name_.end()) return std::nullopt;
  const CookieRecord* best = nullptr;
  auto rank = [&](const CookieRecord* r) { return std::make_tuple(r->value == obs.value, r->key.host.size()); };
  for (const CookieRecord* r : it->second) {
    if (!domain_matches(obs.target_host, r->key.host)) continue;
    if (best == nullptr || rank(r) > rank(best)) best = r;
  }
  if (best == nullptr) return std::nullopt;
  return best->key;
}

const std::vector<SiteId>& JarIndex::setters_of(const CookieKey& key) const {
  static const std::vector<SiteId> none;
  auto it = setters_.find(key);
  return it == setters_.end() ? none : it->second;
}

std::optional<CookieKey> match_sent_to_jar(const SentCookieObservation& obs, const CookieJar& jar) {
  return JarIndex(jar).match(obs);
}

namespace {

struct Classified {
  bool matched = false;
  IntractableFinding finding;
};

Classified classify_observation(const SentCookieObservation& obs, const JarIndex& index, const VisitTable& visits,
                                const PslRuleSet& psl, const TrackerDomainSet& trackers) {
  Classified out;
  auto visit = visits.find(obs.visit_id);
  if (visit == visits.end() || visit->second.phase != Phase::StatelessMeasure) return out;
  auto key = index.match(obs);
  if (!key || !is_tracker(key->host, trackers)) return out;

  out.matched = true;
  IntractableFinding& f = out.finding;
  f.tracker_domain = tracker_domain_of(key->host, psl);
  f.setter_sites = index.setters_of(*key);
  f.key = std::move(*key);
  f.value_at_send = obs.value;
  f.sender_site = visit->second.site;
  f.stage = obs.stage;
  f.channel = obs.channel;
  f.visit_id = obs.visit_id;
  f.event_index = obs.event_index;
  f.canonical = obs.stage == InteractionStage::BeforeInteraction && visit->second.rejected_measurement();
  return out;
}

IntractableDetection split(std::vector<Classified>& classified) {
  IntractableDetection out;
  for (auto& c : classified) {
    if (!c.matched) continue;
    (c.finding.canonical ? out.canonical : out.staged).push_back(std::move(c.finding));
  }
  return out;
}

}  // namespace

IntractableDetection detect_intractable_serial(const CookieJar& jar,
                                               std::span<const SentCookieObservation> observations,
                                               const VisitTable& visits, const PslRuleSet& psl,
                                               const TrackerDomainSet& trackers) {
  const JarIndex index(jar);
  std::vector<Classified> classified;
  classified.reserve(observations.size());
  for (const auto& obs : observations) classified.push_back(classify_observation(obs, index, visits, psl, trackers));
  return split(classified);
}

IntractableDetection detect_intractable(const CookieJar& jar, std::span<const SentCookieObservation> observations,
                                        const VisitTable& visits, const PslRuleSet& psl,
                                        const TrackerDomainSet& trackers) {
  const JarIndex index(jar);
  std::vector<Classified> classified(observations.size());
  const auto n = static_cast<std::ptrdiff_t>(observations.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    classified[i] = classify_observation(observations[i], index, visits, psl, trackers);
  return split(classified);
}

std::set<CookieKey> jar_intractable_keys(const CookieJar& jar, std::span<const SentCookieObservation> observations,
                                         const VisitTable& visits, const TrackerDomainSet& trackers) {
  std::unordered_map<std::string, std::vector<const SentCookieObservation*>> eligible;
  for (const auto& obs : observations) {
    if (obs.stage != InteractionStage::BeforeInteraction) continue;
    auto v = visits.find(obs.visit_id);
    if (v == visits.end() || !v->second.rejected_measurement()) continue;
    eligible[obs.name].push_back(&obs);
  }
  const JarIndex index(jar);
  std::set<CookieKey> keys;
  for (const auto& [key, record] : jar.entries()) {
    if (key.partition || !is_tracker(key.host, trackers)) continue;
    auto it = eligible.find(key.name);
    if (it == eligible.end()) continue;
    for (const SentCookieObservation* obs : it->second) {
      if (!domain_matches(obs->target_host, key.host)) continue;
      if (index.match(*obs) == key) {
        keys.insert(key);
        break;
      }
    }
  }
  return keys;
}

std::vector<ResetFinding> detect_reset(std::span<const IntractableFinding> findings, std::span<const CrawlEvent> events,
                                       const VisitTable& visits) {
  std::set<std::pair<VisitId, CookieKey>> found;
  for (const auto& f : findings)
    if (f.canonical) found.emplace(f.visit_id, f.key);

  std::vector<ResetFinding> out;
  if (found.empty()) return out;
  for (const auto& ev : events) {
    const auto* set = std::get_if<CookieSet>(&ev.payload);
    if (set == nullptr) continue;
    auto visit = visits.find(set->visit_id);
    if (visit == visits.end()) continue;
    try {
      const auto parsed = parse_set_cookie(set->set_cookie_header, set->setter_context_host, virtual_time(ev.event_index));
      CookieKey key{parsed.cookie.name, parsed.cookie.host,
                    parsed.cookie.partitioned ? std::optional<SiteId>(visit->second.site) : std::nullopt};
      if (found.contains({set->visit_id, key}))
        out.push_back({std::move(key), visit->second.site, set->visit_id, ev.event_index});
    } catch (const Error&) {
    }
  }
  return out;
}

bool is_sync_candidate_value(std::string_view value) {
  if (value.size() <= 10) return false;
  static constexpr std::string_view simple[] = {"yes", "no", "true", "false", "0", "1"};
  std::string lowered(value);
  for (char& c : lowered)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  for (auto s : simple)
    if (lowered == s) return false;
  return !std::all_of(value.begin(), value.end(), [](char c) { return c >= '0' && c <= '9'; }) || value.size() > 10;
}

std::vector<SyncFinding> detect_sync(std::span<const IntractableFinding> findings, std::span<const CrawlEvent> events,
                                     const PslRuleSet& psl, const TrackerDomainSet& trackers) {
  struct Redirect {
    const HttpRequest* request;
    std::uint64_t event_index;
  };
  std::map<VisitId, std::vector<Redirect>> redirects;
  for (const auto& ev : events)
    if (const auto* req = std::get_if<HttpRequest>(&ev.payload); req && req->redirect_parent_url)
      redirects[req->visit_id].push_back({req, ev.event_index});

  std::vector<SyncFinding> out;
  std::set<std::tuple<CookieKey, std::string, std::string>> seen;
  for (const auto& f : findings) {
    if (!f.canonical || !is_sync_candidate_value(f.value_at_send)) continue;
    auto it = redirects.find(f.visit_id);
    if (it == redirects.end()) continue;
    for (const auto& r : it->second) {
      if (!is_tracker(r.request->target_host, trackers)) continue;
      const SiteId destination = tracker_domain_of(r.request->target_host, psl);
      if (destination == f.tracker_domain) continue;
      for (const auto& param : url_query_params(r.request->target_url)) {
        if (param.value != f.value_at_send) continue;
        if (!seen.emplace(f.key, r.request->target_url, param.name).second) continue;
        out.push_back({f.key, r.request->target_url, f.tracker_domain, destination, param.name, f.visit_id,
                       r.event_index});
      }
    }
  }
  return out;
}

ChannelSplit channel_split(std::span<const IntractableFinding> findings) {
  ChannelSplit out;
  if (findings.empty()) return out;
  const auto resource = std::count_if(findings.begin(), findings.end(),
                                      [](const IntractableFinding& f) { return f.channel == Channel::ResourceFetch; });
  out.empty = false;
  out.resource_fraction = static_cast<double>(resource) / static_cast<double>(findings.size());
  out.api_fraction = static_cast<double>(findings.size() - resource) / static_cast<double>(findings.size());
  return out;
}

DetectionResult detect(const CookieJar& jar, std::span<const CrawlEvent> events, const PslRuleSet& psl,
                       const TrackerDomainSet& trackers, DetectOptions options) {
  DetectionResult result;
  VisitTable all = summarize_visits(events);
  const auto observations = extract_sent(events, &result.warnings);

  result.intractable = options.parallel ? detect_intractable(jar, observations, all, psl, trackers)
                                        : detect_intractable_serial(jar, observations, all, psl, trackers);
  result.resets = detect_reset(result.intractable.canonical, events, all);
  result.syncs = detect_sync(result.intractable.canonical, events, psl, trackers);

  std::set<std::pair<std::string, std::string>> unique_sent;
  for (const auto& obs : observations) {
    if (obs.stage != InteractionStage::BeforeInteraction) continue;
    auto v = all.find(obs.visit_id);
    if (v != all.end() && v->second.rejected_measurement()) unique_sent.emplace(obs.name, obs.target_host);
  }
  result.sent_unique_before_interaction = unique_sent.size();

  for (auto& [id, info] : all)
    if (info.phase == Phase::StatelessMeasure) result.visits.emplace(id, std::move(info));
  return result;
}

namespace {

void put_key(OrderedJson& j, const CookieKey& key) {
  j["name"] = key.name;
  j["host"] = key.host;
  if (key.partition) j["partition"] = key.partition->str();
}

CookieKey get_key(const Json& j) {
  constexpr auto bad = ErrorCode::MalformedRecord;
  CookieKey key{detail::require_string(j, "name", bad), detail::require_string(j, "host", bad), std::nullopt};
  if (auto it = j.find("partition"); it != j.end()) key.partition = SiteId(it->get<std::string>());
  return key;
}

}  // namespace

void write_findings(std::ostream& out, const DetectionResult& result) {
  out << OrderedJson{{"format_version", kFindingsFormatVersion}, {"content", "findings"}}.dump() << '\n';
  out << OrderedJson{{"kind", "SUMMARY"}, {"sent_unique_before_interaction", result.sent_unique_before_interaction}}
             .dump()
      << '\n';
  for (const auto& [id, v] : result.visits) {
    out << OrderedJson{{"kind", "VISIT"},
                       {"visit_id", id},
                       {"site", v.site.str()},
                       {"rank", v.rank},
                       {"phase", to_string(v.phase)},
                       {"iteration", to_string(v.iteration)},
                       {"gpc_enabled", v.gpc_enabled},
                       {"banner_type", to_string(v.banner_type)},
                       {"outcome", to_string(v.outcome)},
                       {"sent_total", v.sent_total},
                       {"sent_before_interaction", v.sent_before_interaction}}
               .dump()
        << '\n';
  }
  auto write_finding = [&](const IntractableFinding& f) {
    OrderedJson j{{"kind", "FINDING"}, {"canonical", f.canonical}};
    put_key(j, f.key);
    j["value_at_send"] = f.value_at_send;
    j["sender_site"] = f.sender_site.str();
    j["tracker_domain"] = f.tracker_domain.str();
    OrderedJson setters = OrderedJson::array();
    for (const auto& s : f.setter_sites) setters.push_back(s.str());
    j["setter_sites"] = std::move(setters);
    j["stage"] = to_string(f.stage);
    j["channel"] = to_string(f.channel);
    j["visit_id"] = f.visit_id;
    j["event_index"] = f.event_index;
    out << j.dump() << '\n';
  };
  for (const auto& f : result.intractable.canonical) write_finding(f);
  for (const auto& f : result.intractable.staged) write_finding(f);
  for (const auto& r : result.resets) {
    OrderedJson j{{"kind", "RESET"}};
    put_key(j, r.key);
    j["sender_site"] = r.sender_site.str();
    j["visit_id"] = r.visit_id;
    j["event_index"] = r.event_index;
    out << j.dump() << '\n';
  }
  for (const auto& s : result.syncs) {
    OrderedJson j{{"kind", "SYNC"}};
    put_key(j, s.source_key);
    j["carrying_url"] = s.carrying_url;
    j["origin_tracker"] = s.origin_tracker.str();
    j["destination_tracker"] = s.destination_tracker.str();
    j["parameter_name"] = s.parameter_name;
    j["visit_id"] = s.visit_id;
    j["event_index"] = s.event_index;
    out << j.dump() << '\n';
  }
}

DetectionResult read_findings(std::istream& in) {
  constexpr auto bad = ErrorCode::MalformedRecord;
  using detail::require_bool;
  using detail::require_enum;
  using detail::require_string;
  using detail::require_uint;
  DetectionResult result;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      if (!header) {
        if (j.value("format_version", 0) != kFindingsFormatVersion || j.value("content", "") != "findings")
          throw Error(bad, "not a version-1 findings file");
        header = true;
        continue;
      }
      const std::string kind = require_string(j, "kind", bad);
      if (kind == "SUMMARY") {
        result.sent_unique_before_interaction = require_uint(j, "sent_unique_before_interaction", bad);
      } else if (kind == "VISIT") {
        VisitInfo v;
        v.visit_id = require_uint(j, "visit_id", bad);
        v.site = SiteId(require_string(j, "site", bad));
        v.rank = static_cast<std::uint32_t>(require_uint(j, "rank", bad));
        v.phase = require_enum<Phase>(j, "phase", bad);
        v.iteration = require_enum<Iteration>(j, "iteration", bad);
        v.gpc_enabled = require_bool(j, "gpc_enabled", bad);
        v.banner_type = require_enum<BannerType>(j, "banner_type", bad);
        v.outcome = require_enum<VisitOutcome>(j, "outcome", bad);
        v.sent_total = require_uint(j, "sent_total", bad);
        v.sent_before_interaction = require_uint(j, "sent_before_interaction", bad);
        result.visits.emplace(v.visit_id, v);
      } else if (kind == "FINDING") {
        IntractableFinding f;
        f.canonical = require_bool(j, "canonical", bad);
        f.key = get_key(j);
        f.value_at_send = require_string(j, "value_at_send", bad);
        f.sender_site = SiteId(require_string(j, "sender_site", bad));
        f.tracker_domain = SiteId(require_string(j, "tracker_domain", bad));
        for (const auto& s : detail::require(j, "setter_sites", bad)) f.setter_sites.emplace_back(s.get<std::string>());
        f.stage = require_enum<InteractionStage>(j, "stage", bad);
        f.channel = require_enum<Channel>(j, "channel", bad);
        f.visit_id = require_uint(j, "visit_id", bad);
        f.event_index = require_uint(j, "event_index", bad);
        (f.canonical ? result.intractable.canonical : result.intractable.staged).push_back(std::move(f));
      } else if (kind == "RESET") {
        result.resets.push_back({get_key(j), SiteId(require_string(j, "sender_site", bad)), require_uint(j, "visit_id", bad),
                                 require_uint(j, "event_index", bad)});
      } else if (kind == "SYNC") {
        result.syncs.push_back({get_key(j), require_string(j, "carrying_url", bad),
                                SiteId(require_string(j, "origin_tracker", bad)),
                                SiteId(require_string(j, "destination_tracker", bad)),
                                require_string(j, "parameter_name", bad), require_uint(j, "visit_id", bad),
                                require_uint(j, "event_index", bad)});
      } else {
        throw Error(bad, "unknown record kind '" + kind + "'");
      }
    } catch (const Json::exception& e) {
      throw Error(bad, "findings line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(bad, "findings line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header) throw Error(bad, "empty findings file");
  return result;
}

}  // namespace cookieflow
