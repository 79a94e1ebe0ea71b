#include "cookieflow/cookie_jar.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "cookieflow/cookie_parse.hpp"
#include "json_util.hpp"

namespace cookieflow {

using detail::Json;
using detail::OrderedJson;

void CookieJar::upsert(CookieRecord record) {
  if (record.phase != Phase::StatefulAccept)
    throw Error(ErrorCode::WrongPhase, "jar only accepts STATEFUL_ACCEPT cookies: " + to_string(record.key));
  const bool deletion = record.is_deletion();
  history_.push_back({record.key, record.setter_site, record.set_at, deletion});
  if (deletion) {
    entries_.erase(record.key);
    return;
  }
  record.effective_expiry = Timestamp{kFixedExpiry};
  const CookieKey key = record.key;
  entries_.insert_or_assign(key, std::move(record));
}

void CookieJar::record_visit(const SiteId& site, SiteMeta meta) {
  if (meta.outcome == VisitOutcome::Accepted) {
    accepted_.insert(site);
  } else {
    accepted_.erase(site);
  }
  sites_.insert_or_assign(site, meta);
}

std::vector<SiteId> sample_sites(const std::set<SiteId>& sites, std::size_t n, std::uint64_t seed) {
  if (n > sites.size())
    throw Error(ErrorCode::SampleTooLarge,
                "sample of " + std::to_string(n) + " from " + std::to_string(sites.size()) + " accepted sites");
  std::vector<SiteId> order(sites.begin(), sites.end());
  std::mt19937_64 engine(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = bounded_draw(engine, i);
    std::swap(order[i - 1], order[j]);
  }
  order.resize(n);
  std::sort(order.begin(), order.end());
  return order;
}

CookieJar CookieJar::normalize_sample(std::size_t n, std::uint64_t seed) const {
  const auto sample = sample_sites(accepted_, n, seed);
  const std::set<SiteId> keep(sample.begin(), sample.end());

  CookieJar out;
  for (const auto& [key, record] : entries_)
    if (keep.contains(record.setter_site)) out.entries_.emplace(key, record);
  for (const auto& row : history_)
    if (keep.contains(row.setter_site)) out.history_.push_back(row);
  out.accepted_ = keep;
  for (const auto& [site, meta] : sites_)
    if (meta.outcome != VisitOutcome::Accepted || keep.contains(site)) out.sites_.emplace(site, meta);
  return out;
}

namespace {

OrderedJson key_fields(const CookieKey& key) {
  OrderedJson j{{"name", key.name}, {"host", key.host}};
  if (key.partition) j["partition"] = key.partition->str();
  return j;
}

CookieKey key_from(const Json& j) {
  constexpr auto bad = ErrorCode::CorruptSnapshot;
  CookieKey key{detail::require_string(j, "name", bad), detail::require_string(j, "host", bad), std::nullopt};
  if (auto it = j.find("partition"); it != j.end()) key.partition = SiteId(it->get<std::string>());
  return key;
}

std::string crc_hex(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

}  // namespace

std::string CookieJar::serialize() const {
  std::string body;
  for (const auto& [site, meta] : sites_) {
    OrderedJson j{{"record", "site"}, {"site", site.str()}, {"rank", meta.rank},
                  {"banner_type", to_string(meta.banner_type)}, {"outcome", to_string(meta.outcome)}};
    body += j.dump() + '\n';
  }
  for (const auto& [key, r] : entries_) {
    OrderedJson j{{"record", "entry"}};
    j.update(key_fields(key));
    j["value"] = r.value;
    if (const auto* t = std::get_if<Timestamp>(&r.original_expiry)) {
      j["original_expiry"] = t->seconds;
    } else {
      j["original_expiry"] = "SESSION";
    }
    j["effective_expiry"] = r.effective_expiry.seconds;
    j["setter_site"] = r.setter_site.str();
    j["set_at"] = r.set_at;
    j["consent_state"] = to_string(r.consent_state_at_set);
    j["phase"] = to_string(r.phase);
    body += j.dump() + '\n';
  }
  for (const auto& row : history_) {
    OrderedJson j{{"record", "history"}};
    j.update(key_fields(row.key));
    j["setter_site"] = row.setter_site.str();
    j["event_index"] = row.event_index;
    j["deletion"] = row.deletion;
    body += j.dump() + '\n';
  }
  OrderedJson header{{"format_version", kJarFormatVersion},
                     {"kind", "COOKIE_JAR"},
                     {"body_bytes", body.size()},
                     {"checksum", crc_hex(body)}};
  return header.dump() + '\n' + body;
}

CookieJar CookieJar::deserialize(std::string_view bytes) {
  constexpr auto bad = ErrorCode::CorruptSnapshot;
  const std::size_t eol = bytes.find('\n');
  if (eol == std::string_view::npos) throw Error(bad, "missing snapshot header");
  Json header;
  try {
    header = Json::parse(bytes.substr(0, eol));
  } catch (const Json::exception&) {
    throw Error(bad, "unreadable snapshot header");
  }
  const std::string_view body = bytes.substr(eol + 1);
  try {
    if (header.value("format_version", 0) != kJarFormatVersion || header.value("kind", "") != "COOKIE_JAR")
      throw Error(bad, "not a version-1 cookie jar snapshot");
    if (header.at("body_bytes").get<std::size_t>() != body.size())
      throw Error(bad, "snapshot length mismatch (truncated?)");
    if (header.at("checksum").get<std::string>() != crc_hex(body)) throw Error(bad, "checksum mismatch");
  } catch (const Json::exception&) {
    throw Error(bad, "malformed snapshot header");
  }

  CookieJar jar;
  std::size_t pos = 0;
  try {
    while (pos < body.size()) {
      std::size_t end = body.find('\n', pos);
      if (end == std::string_view::npos) end = body.size();
      const Json j = Json::parse(body.substr(pos, end - pos));
      pos = end + 1;
      const std::string record = detail::require_string(j, "record", bad);
      if (record == "site") {
        SiteMeta meta{static_cast<std::uint32_t>(detail::require_uint(j, "rank", bad)),
                      detail::require_enum<BannerType>(j, "banner_type", bad),
                      detail::require_enum<VisitOutcome>(j, "outcome", bad)};
        jar.record_visit(SiteId(detail::require_string(j, "site", bad)), meta);
      } else if (record == "entry") {
        CookieRecord r;
        r.key = key_from(j);
        r.value = detail::require_string(j, "value", bad);
        const Json& exp = detail::require(j, "original_expiry", bad);
        if (exp.is_string()) {
          r.original_expiry = SessionExpiry{};
        } else {
          r.original_expiry = Timestamp{exp.get<std::int64_t>()};
        }
        r.effective_expiry = Timestamp{detail::require(j, "effective_expiry", bad).get<std::int64_t>()};
        r.setter_site = SiteId(detail::require_string(j, "setter_site", bad));
        r.set_at = detail::require_uint(j, "set_at", bad);
        r.consent_state_at_set = detail::require_enum<ConsentState>(j, "consent_state", bad);
        r.phase = detail::require_enum<Phase>(j, "phase", bad);
        const CookieKey key = r.key;
        jar.entries_.emplace(key, std::move(r));
      } else if (record == "history") {
        jar.history_.push_back({key_from(j), SiteId(detail::require_string(j, "setter_site", bad)),
                                detail::require_uint(j, "event_index", bad), detail::require_bool(j, "deletion", bad)});
      } else {
        throw Error(bad, "unknown record '" + record + "'");
      }
    }
  } catch (const Json::exception& e) {
    throw Error(bad, e.what());
  } catch (const Error& e) {
    if (e.code() == bad) throw;
    throw Error(bad, e.what());
  }
  return jar;
}

void CookieJar::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

CookieJar CookieJar::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

CookieJar build_jar(std::span<const CrawlEvent> events, Diagnostics* warnings) {
  struct OpenVisit {
    SiteId site;
    SiteMeta meta;
  };
  CookieJar jar;
  std::map<VisitId, OpenVisit> open;
  for (const auto& ev : events) {
    const VisitId id = ev.visit_id();
    if (const auto* start = std::get_if<VisitStart>(&ev.payload)) {
      if (start->phase == Phase::StatefulAccept) open[id] = {start->site, SiteMeta{start->rank, BannerType::None, {}}};
      continue;
    }
    auto it = open.find(id);
    if (it == open.end()) continue;
    if (const auto* banner = std::get_if<BannerObserved>(&ev.payload)) {
      it->second.meta.banner_type = banner->banner.banner_type;
    } else if (const auto* set = std::get_if<CookieSet>(&ev.payload)) {
      try {
        auto parsed = parse_set_cookie(set->set_cookie_header, set->setter_context_host, virtual_time(ev.event_index));
        if (warnings)
          for (auto& w : parsed.warnings) {
            w.line = ev.event_index + 1;
            warnings->push_back(std::move(w));
          }
        CookieRecord record;
        record.key = {parsed.cookie.name, parsed.cookie.host,
                      parsed.cookie.partitioned ? std::optional<SiteId>(it->second.site) : std::nullopt};
        record.value = std::move(parsed.cookie.value);
        record.original_expiry = parsed.cookie.original_expiry;
        record.setter_site = it->second.site;
        record.set_at = ev.event_index;
        record.consent_state_at_set = consent_state_for(set->stage);
        record.phase = Phase::StatefulAccept;
        jar.upsert(std::move(record));
      } catch (const Error& e) {
        if (warnings) warnings->push_back({e.code(), ev.event_index + 1, e.what()});
      }
    } else if (const auto* end = std::get_if<VisitEnd>(&ev.payload)) {
      it->second.meta.outcome = end->outcome;
      jar.record_visit(it->second.site, it->second.meta);
      open.erase(it);
    }
  }
  return jar;
}

}  // namespace cookieflow
