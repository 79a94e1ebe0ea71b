#include "cookieflow/ecosystem.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cookieflow/cookie_jar.hpp"
#include "cookieflow/error.hpp"
#include "cookieflow/host.hpp"
#include "json_util.hpp"

namespace cookieflow {

using detail::Json;
using detail::OrderedJson;

std::string_view to_string(LoadPolicy v) { return v == LoadPolicy::Always ? "ALWAYS" : "POST_ACCEPT_ONLY"; }

std::string_view to_string(PartitionMode v) {
  switch (v) {
    case PartitionMode::None: return "NONE";
    case PartitionMode::Only: return "ONLY";
    case PartitionMode::Both: return "BOTH";
  }
  return "NONE";
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t SplitMix64::below(std::uint64_t bound) { return bounded_draw(*this, bound); }

SplitMix64 substream(std::uint64_t seed, std::initializer_list<std::string_view> tags) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  bool first = true;
  for (auto tag : tags) {
    if (!first) h = (h ^ 0x1fu) * 0x100000001b3ULL;
    first = false;
    for (unsigned char c : tag) h = (h ^ c) * 0x100000001b3ULL;
  }
  return SplitMix64(seed ^ h);
}

bool embed_dropped(std::uint64_t seed, const SiteId& site, const TrackerSpec& tracker) {
  if (tracker.drop_after_reject_prob <= 0.0) return false;
  if (tracker.drop_after_reject_prob >= 1.0) return true;
  return substream(seed, {"reload-drop", site.str(), tracker.domain.str()}).uniform() < tracker.drop_after_reject_prob;
}

std::string embed_host(const SiteId& tracker, Channel channel) {
  return (channel == Channel::ApiCall ? "api." : "px.") + tracker.str();
}

std::string sync_host(const SiteId& partner) { return "sync." + partner.str(); }

const SiteSpec& EcosystemConfig::site(const SiteId& id) const {
  for (const auto& s : sites)
    if (s.site == id) return s;
  throw Error(ErrorCode::InvalidConfig, "unknown site " + id.str());
}

const TrackerSpec& EcosystemConfig::tracker(const SiteId& domain) const {
  for (const auto& t : trackers)
    if (t.domain == domain) return t;
  throw Error(ErrorCode::InvalidConfig, "unknown tracker " + domain.str());
}

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

bool is_cookie_token(std::string_view name) {
  if (name.empty()) return false;
  return std::none_of(name.begin(), name.end(), [](char c) {
    return c == '=' || c == ';' || c == ',' || c == ' ' || c == '\t' || static_cast<unsigned char>(c) < 0x21 ||
           static_cast<unsigned char>(c) > 0x7e;
  });
}

bool is_cookie_value(std::string_view value) {
  return std::none_of(value.begin(), value.end(), [](char c) {
    return c == ';' || c == ',' || c == ' ' || c == '"' || c == '\\' || static_cast<unsigned char>(c) < 0x21 ||
           static_cast<unsigned char>(c) > 0x7e;
  });
}

}  // namespace

void EcosystemConfig::validate() const {
  std::set<SiteId> site_ids;
  for (const auto& s : sites) {
    if (!site_ids.insert(s.site).second) invalid("duplicate site " + s.site.str());
    if (s.rank == 0) invalid("site " + s.site.str() + ": rank must be >= 1");
    if (!s.banner.valid()) invalid("site " + s.site.str() + ": NONE banner with layers");
    if (s.paywall != (s.banner.banner_type == BannerType::Paywall))
      invalid("site " + s.site.str() + ": paywall flag must match banner_type PAYWALL");
  }

  std::map<SiteId, const TrackerSpec*> by_domain;
  for (const auto& t : trackers) {
    if (!by_domain.emplace(t.domain, &t).second) invalid("duplicate tracker " + t.domain.str());
    if (!(t.drop_after_reject_prob >= 0.0 && t.drop_after_reject_prob <= 1.0))
      invalid("tracker " + t.domain.str() + ": drop_after_reject_prob outside [0,1]");
    std::set<std::string> names;
    for (const auto& c : t.cookies) {
      if (!is_cookie_token(c.name)) invalid("tracker " + t.domain.str() + ": bad cookie name '" + c.name + "'");
      if (!names.insert(c.name).second) invalid("tracker " + t.domain.str() + ": duplicate cookie " + c.name);
      if (c.value.random ? c.value.length == 0 : !is_cookie_value(c.value.fixed))
        invalid("tracker " + t.domain.str() + ": bad value for cookie " + c.name);
      if (c.lifetime && *c.lifetime <= 0)
        invalid("tracker " + t.domain.str() + ": lifetime must be positive (use deleted_on)");
      for (const auto& d : c.deleted_on)
        if (!site_ids.contains(d)) invalid("tracker " + t.domain.str() + ": deleted_on unknown site " + d.str());
    }
    if (!t.sync_partners.empty() && !names.contains(t.sync_cookie))
      invalid("tracker " + t.domain.str() + ": sync_cookie must name one of its cookies");
  }
  for (const auto& [a, ta] : by_domain)
    for (const auto& [b, tb] : by_domain)
      if (a != b && domain_matches(a.str(), b.str()))
        invalid("tracker " + a.str() + " lies under tracker " + b.str());
  for (const auto& t : trackers)
    for (const auto& p : t.sync_partners) {
      if (!by_domain.contains(p)) invalid("tracker " + t.domain.str() + ": unknown sync partner " + p.str());
      if (p == t.domain) invalid("tracker " + t.domain.str() + " syncs with itself");
    }

  for (const auto& s : sites) {
    std::set<SiteId> seen;
    for (const auto& e : s.embeds) {
      if (!by_domain.contains(e.tracker)) invalid("site " + s.site.str() + " embeds unknown tracker " + e.tracker.str());
      if (!seen.insert(e.tracker).second) invalid("site " + s.site.str() + " embeds " + e.tracker.str() + " twice");
    }
  }

  std::set<SiteId> scheduled;
  for (const auto* list : {&schedule.phase1_sites, &schedule.phase2_sites})
    for (const auto& s : *list) {
      if (!site_ids.contains(s)) invalid("schedule names unknown site " + s.str());
      if (!scheduled.insert(s).second) invalid("site " + s.str() + " scheduled twice (phases must be disjoint)");
    }
}

namespace {

template <class T>
T opt(const Json& j, const char* field, T fallback) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

std::vector<SiteId> site_list(const Json& j, const char* field) {
  std::vector<SiteId> out;
  if (auto it = j.find(field); it != j.end())
    for (const auto& s : *it) out.emplace_back(s.get<std::string>());
  return out;
}

template <class E>
E opt_enum(const Json& j, const char* field, E fallback) {
  auto it = j.find(field);
  if (it == j.end()) return fallback;
  const auto text = it->get<std::string>();
  if (auto v = parse_enum<E>(text)) return *v;
  invalid(std::string("unknown ") + field + " '" + text + "'");
}

LoadPolicy parse_policy(const std::string& s) {
  if (s == "ALWAYS") return LoadPolicy::Always;
  if (s == "POST_ACCEPT_ONLY") return LoadPolicy::PostAcceptOnly;
  invalid("unknown load policy '" + s + "'");
}

PartitionMode parse_partition(const std::string& s) {
  if (s == "NONE") return PartitionMode::None;
  if (s == "ONLY") return PartitionMode::Only;
  if (s == "BOTH") return PartitionMode::Both;
  invalid("unknown partition mode '" + s + "'");
}

ValueSpec parse_value(const std::string& s) {
  ValueSpec v;
  if (s.starts_with("fixed:")) {
    v.fixed = s.substr(6);
    return v;
  }
  if (s.starts_with("random:")) {
    v.random = true;
    try {
      std::size_t used = 0;
      v.length = std::stoul(s.substr(7), &used);
      if (used != s.size() - 7) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      invalid("bad value generator '" + s + "'");
    }
    return v;
  }
  invalid("value generator must be fixed:<v> or random:<len>, got '" + s + "'");
}

std::string value_text(const ValueSpec& v) {
  return v.random ? "random:" + std::to_string(v.length) : "fixed:" + v.fixed;
}

}  // namespace

EcosystemConfig parse_ecosystem(std::string_view json_text) {
  EcosystemConfig config;
  try {
    const Json j = Json::parse(json_text);
    for (const auto& sj : j.at("sites")) {
      SiteSpec s;
      s.site = SiteId(sj.at("site").get<std::string>());
      s.rank = opt<std::uint32_t>(sj, "rank", 1);
      if (auto b = sj.find("banner"); b != sj.end() && !b->is_null())
        s.banner = detail::banner_from_json(*b, ErrorCode::InvalidConfig);
      s.paywall = opt(sj, "paywall", false);
      s.load_fails = opt(sj, "load_fails", false);
      if (auto e = sj.find("embeds"); e != sj.end())
        for (const auto& ej : *e)
          s.embeds.push_back({SiteId(ej.at("tracker").get<std::string>()),
                              parse_policy(opt<std::string>(ej, "policy", "ALWAYS")),
                              opt_enum(ej, "channel", Channel::ResourceFetch)});
      config.sites.push_back(std::move(s));
    }
    for (const auto& tj : j.at("trackers")) {
      TrackerSpec t;
      t.domain = SiteId(tj.at("domain").get<std::string>());
      if (auto c = tj.find("cookies"); c != tj.end())
        for (const auto& cj : *c) {
          TrackerCookieSpec cookie;
          cookie.name = cj.at("name").get<std::string>();
          cookie.value = parse_value(cj.at("value").get<std::string>());
          const Json& life = cj.at("lifetime");
          if (life.is_string()) {
            if (life.get<std::string>() != "session") invalid("lifetime must be seconds or \"session\"");
          } else {
            cookie.lifetime = life.get<std::int64_t>();
          }
          cookie.deleted_on = site_list(cj, "deleted_on");
          t.cookies.push_back(std::move(cookie));
        }
      t.honors_gpc = opt(tj, "honors_gpc", false);
      t.partition = parse_partition(opt<std::string>(tj, "partition", "NONE"));
      t.renews = opt(tj, "renews", false);
      t.sync_partners = site_list(tj, "sync_partners");
      t.sync_cookie = opt<std::string>(tj, "sync_cookie", "");
      t.drop_after_reject_prob = opt(tj, "drop_after_reject_prob", 0.0);
      t.listed = opt(tj, "listed", true);
      config.trackers.push_back(std::move(t));
    }
    const Json& sched = j.at("schedule");
    config.schedule.phase1_sites = site_list(sched, "phase1_sites");
    config.schedule.phase2_sites = site_list(sched, "phase2_sites");
    config.schedule.gpc_enabled = opt(sched, "gpc_enabled", false);
  } catch (const Json::exception& e) {
    invalid(std::string("ecosystem config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw;
    invalid(std::string("ecosystem config: ") + e.what());
  }
  config.validate();
  return config;
}

EcosystemConfig load_ecosystem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ecosystem(ss.str());
}

std::string ecosystem_to_json(const EcosystemConfig& config) {
  auto ids = [](const std::vector<SiteId>& v) {
    OrderedJson out = OrderedJson::array();
    for (const auto& s : v) out.push_back(s.str());
    return out;
  };
  OrderedJson sites = OrderedJson::array();
  for (const auto& s : config.sites) {
    OrderedJson embeds = OrderedJson::array();
    for (const auto& e : s.embeds)
      embeds.push_back({{"tracker", e.tracker.str()}, {"policy", to_string(e.policy)}, {"channel", to_string(e.channel)}});
    sites.push_back({{"site", s.site.str()},
                     {"rank", s.rank},
                     {"banner", detail::banner_to_json(s.banner)},
                     {"paywall", s.paywall},
                     {"load_fails", s.load_fails},
                     {"embeds", std::move(embeds)}});
  }
  OrderedJson trackers = OrderedJson::array();
  for (const auto& t : config.trackers) {
    OrderedJson cookies = OrderedJson::array();
    for (const auto& c : t.cookies) {
      OrderedJson cj{{"name", c.name}, {"value", value_text(c.value)}};
      if (c.lifetime) {
        cj["lifetime"] = *c.lifetime;
      } else {
        cj["lifetime"] = "session";
      }
      cj["deleted_on"] = ids(c.deleted_on);
      cookies.push_back(std::move(cj));
    }
    trackers.push_back({{"domain", t.domain.str()},
                        {"cookies", std::move(cookies)},
                        {"honors_gpc", t.honors_gpc},
                        {"partition", to_string(t.partition)},
                        {"renews", t.renews},
                        {"sync_partners", ids(t.sync_partners)},
                        {"sync_cookie", t.sync_cookie},
                        {"drop_after_reject_prob", t.drop_after_reject_prob},
                        {"listed", t.listed}});
  }
  OrderedJson root{{"sites", std::move(sites)},
                   {"trackers", std::move(trackers)},
                   {"schedule",
                    {{"phase1_sites", ids(config.schedule.phase1_sites)},
                     {"phase2_sites", ids(config.schedule.phase2_sites)},
                     {"gpc_enabled", config.schedule.gpc_enabled}}}};
  return root.dump(2) + '\n';
}

TrackerDomainSet listed_trackers(const EcosystemConfig& config) {
  TrackerDomainSet set("ecosystem");
  for (const auto& t : config.trackers)
    if (t.listed) set.insert(t.domain.str());
  return set;
}

namespace {

BannerDescriptor make_banner(BannerType type, bool settings_only, SplitMix64& rng) {
  BannerDescriptor b;
  b.banner_type = type;
  if (type == BannerType::None) return b;
  if (type == BannerType::Paywall) {
    b.layers.push_back({{{"Accept all", ButtonAction::Accept}, {"Subscribe", ButtonAction::Other}}, {}});
    return b;
  }
  if (!settings_only) {
    b.layers.push_back({{{"Accept all", ButtonAction::Accept}, {"Reject all", ButtonAction::Reject}}, {}});
    return b;
  }
  b.layers.push_back({{{"Accept all", ButtonAction::Accept}, {"Settings", ButtonAction::Settings}}, {}});
  BannerLayer settings;
  settings.toggles.push_back({"necessary", true, true});
  switch (rng.below(4)) {
    case 0:
      settings.buttons.push_back({"Reject all", ButtonAction::Reject});
      settings.toggles.push_back({"analytics", false, false});
      break;
    case 1:
    case 2:
      settings.buttons.push_back({"Save & Exit", ButtonAction::Save});
      settings.toggles.push_back({"analytics", false, false});
      settings.toggles.push_back({"marketing", false, false});
      break;
    default:
      // Preselected-on toggle: the crawler will not risk SAVE here.
      settings.buttons.push_back({"Save & Exit", ButtonAction::Save});
      settings.toggles.push_back({"analytics", true, false});
      break;
  }
  b.layers.push_back(std::move(settings));
  return b;
}

}  // namespace

EcosystemConfig random_ecosystem(const RandomEcosystemParams& p, std::uint64_t seed) {
  SplitMix64 rng = substream(seed, {"random-ecosystem"});
  EcosystemConfig config;
  config.schedule.gpc_enabled = p.gpc_enabled;

  static constexpr const char* kNames[] = {"id", "uid", "_ga", "IDE", "tuuid", "sid", "visitor", "u", "ab", "consent"};
  static constexpr std::int64_t kDay = 86400;
  static constexpr std::int64_t kLifetimes[] = {3600, kDay, 5 * kDay, 30 * kDay, 180 * kDay, 365 * kDay, 400 * kDay};
  const std::size_t n_trackers = std::max<std::size_t>(p.trackers, 1);
  const std::size_t n_sites = std::max<std::size_t>(p.sites, 2);

  for (std::size_t i = 0; i < n_sites; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "site%04zu.com", i);
    config.sites.push_back({SiteId(buf), static_cast<std::uint32_t>(i + 1), {}, false, false, {}});
  }
  std::vector<std::size_t> site_order(n_sites);
  for (std::size_t i = 0; i < n_sites; ++i) site_order[i] = i;
  for (std::size_t i = n_sites; i > 1; --i) std::swap(site_order[i - 1], site_order[rng.below(i)]);
  const auto n_phase1 = std::clamp<std::size_t>(static_cast<std::size_t>(p.phase1_fraction * n_sites + 0.5), 1,
                                                n_sites - 1);
  std::vector<SiteId> phase1_candidates;
  for (std::size_t i = 0; i < n_sites; ++i) {
    const auto& id = config.sites[site_order[i]].site;
    (i < n_phase1 ? config.schedule.phase1_sites : config.schedule.phase2_sites).push_back(id);
    if (i < n_phase1) phase1_candidates.push_back(id);
  }

  std::vector<std::size_t> tracker_order(n_trackers);
  for (std::size_t i = 0; i < n_trackers; ++i) tracker_order[i] = i;
  for (std::size_t i = n_trackers; i > 1; --i) std::swap(tracker_order[i - 1], tracker_order[rng.below(i)]);
  const auto n_honoring = static_cast<std::size_t>(p.gpc_honor_fraction * n_trackers + 0.5);
  std::vector<bool> honors(n_trackers, false);
  for (std::size_t i = 0; i < n_honoring && i < n_trackers; ++i) honors[tracker_order[i]] = true;

  for (std::size_t i = 0; i < n_trackers; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "trk%03zu.net", i);
    TrackerSpec t;
    t.domain = SiteId(buf);
    const std::size_t n_cookies = 1 + rng.below(3);
    const std::size_t first_name = rng.below(std::size(kNames));
    for (std::size_t c = 0; c < n_cookies; ++c) {
      TrackerCookieSpec cookie;
      cookie.name = kNames[(first_name + c) % std::size(kNames)];
      const auto kind = rng.below(10);
      if (kind < 7) {
        cookie.value = {true, "", 12 + rng.below(20)};
      } else if (kind < 8) {
        cookie.value = {false, "1", 0};
      } else {
        cookie.value = {false, "v" + std::to_string(rng.below(1000000000)), 0};
      }
      const auto life = rng.below(std::size(kLifetimes) + 1);
      if (life < std::size(kLifetimes)) cookie.lifetime = kLifetimes[life];
      if (rng.uniform() < p.deletion_share) cookie.deleted_on.push_back(phase1_candidates[rng.below(phase1_candidates.size())]);
      t.cookies.push_back(std::move(cookie));
    }
    t.honors_gpc = honors[i];
    const double part = rng.uniform();
    t.partition = part < p.partitioned_share / 2 ? PartitionMode::Only
                  : part < p.partitioned_share   ? PartitionMode::Both
                                                 : PartitionMode::None;
    t.renews = rng.uniform() < p.renew_share;
    t.drop_after_reject_prob = p.drop_after_reject_prob;
    t.listed = rng.uniform() >= p.unlisted_share;
    config.trackers.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < n_trackers && n_trackers > 1; ++i) {
    if (rng.uniform() >= p.sync_share) continue;
    auto& t = config.trackers[i];
    const std::size_t partners = 1 + rng.below(2);
    for (std::size_t k = 0; k < partners; ++k) {
      const auto& candidate = config.trackers[(i + 1 + rng.below(n_trackers - 1)) % n_trackers].domain;
      if (std::find(t.sync_partners.begin(), t.sync_partners.end(), candidate) == t.sync_partners.end())
        t.sync_partners.push_back(candidate);
    }
    t.sync_cookie = t.cookies.front().name;
  }

  const double banner_total = p.native_share + p.cmp_share + p.paywall_share;
  for (auto& s : config.sites) {
    const double u = rng.uniform();
    BannerType type = BannerType::None;
    if (u < p.native_share) {
      type = BannerType::Native;
    } else if (u < p.native_share + p.cmp_share) {
      type = BannerType::Cmp;
    } else if (u < banner_total) {
      type = BannerType::Paywall;
    }
    s.banner = make_banner(type, rng.uniform() < p.settings_only_share, rng);
    s.paywall = type == BannerType::Paywall;
    s.load_fails = rng.uniform() < p.load_fail_share;
    const std::size_t n_embeds = std::min<std::size_t>(rng.below(p.max_embeds + 1), n_trackers);
    const std::size_t start = rng.below(n_trackers);
    const std::size_t step = 1 + rng.below(n_trackers);
    std::set<std::size_t> chosen;
    for (std::size_t k = 0; chosen.size() < n_embeds && k < 4 * n_trackers; ++k) chosen.insert((start + k * step) % n_trackers);
    for (std::size_t k = 0; chosen.size() < n_embeds; ++k) chosen.insert(k);
    for (std::size_t idx : chosen) {
      Embed e;
      e.tracker = config.trackers[idx].domain;
      e.policy = rng.uniform() < p.post_accept_share ? LoadPolicy::PostAcceptOnly : LoadPolicy::Always;
      e.channel = rng.uniform() < p.api_share ? Channel::ApiCall : Channel::ResourceFetch;
      s.embeds.push_back(std::move(e));
    }
  }
  config.validate();
  return config;
}

}  // namespace cookieflow
