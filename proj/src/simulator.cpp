#include "cookieflow/simulator.hpp"

#include <map>
#include <sstream>

#include "cookieflow/cookie_parse.hpp"
#include "cookieflow/host.hpp"

namespace cookieflow {

namespace {

constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";

// Cookie store of the simulated browser. Values only; every stored cookie
// is live because the crawl never outlasts the fixed override expiry.
class Browser {
 public:
  std::string cookie_header(const std::string& target_host, const SiteId& top_site) const {
    std::string out;
    for (const auto& [key, value] : store_) {
      if (!domain_matches(target_host, key.host)) continue;
      if (key.partition && *key.partition != top_site) continue;
      if (!out.empty()) out += "; ";
      out += key.name + '=' + value;
    }
    return out;
  }

  const std::string* find(const CookieKey& key) const {
    auto it = store_.find(key);
    return it == store_.end() ? nullptr : &it->second;
  }

  void apply(const std::string& header, const std::string& context_host, const SiteId& top_site,
             std::uint64_t event_index) {
    const auto parsed = parse_set_cookie(header, context_host, virtual_time(event_index));
    CookieRecord r;
    r.key = {parsed.cookie.name, parsed.cookie.host,
             parsed.cookie.partitioned ? std::optional<SiteId>(top_site) : std::nullopt};
    r.original_expiry = parsed.cookie.original_expiry;
    r.set_at = event_index;
    if (r.is_deletion()) {
      store_.erase(r.key);
    } else {
      store_[r.key] = parsed.cookie.value;
    }
  }

 private:
  std::map<CookieKey, std::string> store_;
};

class Generator {
 public:
  Generator(const EcosystemConfig& config, std::uint64_t seed, const SynonymTable& synonyms)
      : config_(config), seed_(seed), synonyms_(synonyms) {}

  std::vector<CrawlEvent> run() {
    Browser profile;
    for (const auto& id : config_.schedule.phase1_sites) visit(config_.site(id), Phase::StatefulAccept,
                                                                 Iteration::AcceptIter, profile);
    for (const auto& id : config_.schedule.phase2_sites) {
      const SiteSpec& site = config_.site(id);
      Browser reject_copy = profile;
      visit(site, Phase::StatelessMeasure, Iteration::RejectIter, reject_copy);
      Browser accept_copy = profile;
      visit(site, Phase::StatelessMeasure, Iteration::AcceptIter, accept_copy);
    }
    return std::move(events_);
  }

 private:
  void emit(EventPayload payload) { events_.push_back({events_.size(), std::move(payload)}); }

  bool suppressed(const TrackerSpec& t, Phase phase) const {
    return phase == Phase::StatelessMeasure && config_.schedule.gpc_enabled && t.honors_gpc;
  }

  std::string cookie_value(const TrackerCookieSpec& c, Phase phase, const SiteId& site, const TrackerSpec& t,
                           bool partitioned) const {
    if (!c.value.random) return c.value.fixed;
    auto rng = substream(seed_, {"cookie-value", to_string(phase), site.str(), t.domain.str(), c.name,
                                 partitioned ? "p" : "u"});
    std::string v(c.value.length, 'A');
    for (char& ch : v) ch = kAlphabet[rng.below(kAlphabet.size())];
    return v;
  }

  void load(const SiteSpec& site, const Embed& embed, InteractionStage stage, Phase phase, Browser& browser) {
    const VisitId vid = visit_id_;
    const TrackerSpec& t = config_.tracker(embed.tracker);
    const std::string host = embed_host(t.domain, embed.channel);
    const std::string url = "https://" + host + "/px?site=" + site.site.str();
    emit(HttpRequest{vid, stage, host, url, embed.channel, std::nullopt, browser.cookie_header(host, site.site)});

    std::optional<std::string> sync_value;
    if (!t.sync_partners.empty())
      if (const auto* v = browser.find({t.sync_cookie, t.domain.str(), std::nullopt})) sync_value = *v;

    for (const auto& c : t.cookies) {
      const std::string common = "; Domain=" + t.domain.str() + "; Path=/";
      if (std::find(c.deleted_on.begin(), c.deleted_on.end(), site.site) != c.deleted_on.end()) {
        set_cookie(c.name + "=" + common + "; Max-Age=0", host, stage, site, browser);
        continue;
      }
      for (const bool partitioned : {false, true}) {
        if (partitioned ? t.partition == PartitionMode::None : t.partition == PartitionMode::Only) continue;
        const CookieKey key{c.name, t.domain.str(),
                            partitioned ? std::optional<SiteId>(site.site) : std::nullopt};
        const std::string* existing = browser.find(key);
        if (existing && !t.renews) continue;
        std::string header = c.name + '=' + (existing ? *existing : cookie_value(c, phase, site.site, t, partitioned));
        header += common;
        if (c.lifetime) header += "; Max-Age=" + std::to_string(*c.lifetime);
        if (partitioned) header += "; Secure; SameSite=None; Partitioned";
        set_cookie(header, host, stage, site, browser);
      }
    }

    if (!sync_value) return;
    for (const auto& partner_id : t.sync_partners) {
      const TrackerSpec& partner = config_.tracker(partner_id);
      if (suppressed(partner, phase)) continue;
      const std::string phost = sync_host(partner.domain);
      emit(HttpRequest{vid, stage, phost,
                       "https://" + phost + "/sync?src=" + t.domain.str() + "&uid=" + *sync_value,
                       embed.channel, url, browser.cookie_header(phost, site.site)});
    }
  }

  void set_cookie(const std::string& header, const std::string& host, InteractionStage stage, const SiteSpec& site,
                  Browser& browser) {
    const std::uint64_t index = events_.size();
    emit(CookieSet{visit_id_, stage, header, host});
    browser.apply(header, host, site.site, index);
  }

  void load_all(const SiteSpec& site, InteractionStage stage, Phase phase, bool consented, Browser& browser,
                bool reloaded = false) {
    for (const auto& e : site.embeds) {
      if (e.policy == LoadPolicy::PostAcceptOnly && !consented) continue;
      const TrackerSpec& t = config_.tracker(e.tracker);
      if (suppressed(t, phase)) continue;
      if (reloaded && embed_dropped(seed_, site.site, t)) continue;
      load(site, e, stage, phase, browser);
    }
  }

  void visit(const SiteSpec& site, Phase phase, Iteration iteration, Browser& browser) {
    using S = InteractionStage;
    visit_id_ = ++visit_count_;
    const bool gpc = phase == Phase::StatelessMeasure && config_.schedule.gpc_enabled;
    emit(VisitStart{visit_id_, site.site, site.rank, phase, iteration, gpc});
    if (site.load_fails) {
      emit(VisitEnd{visit_id_, VisitOutcome::LoadFailed});
      return;
    }
    const bool has_banner = site.banner.banner_type != BannerType::None;
    if (has_banner) emit(BannerObserved{visit_id_, site.banner});
    load_all(site, S::BeforeInteraction, phase, false, browser);
    if (!has_banner) {
      emit(VisitEnd{visit_id_, VisitOutcome::NoBanner});
      return;
    }

    if (iteration == Iteration::AcceptIter) {
      if (!plan_accept(site.banner, synonyms_)) {
        emit(VisitEnd{visit_id_, VisitOutcome::InteractionFailed});
        return;
      }
      emit(Interaction{visit_id_, InteractionAction::AcceptClicked, S::AfterAccept});
      load_all(site, S::AfterAccept, phase, true, browser);
      emit(VisitEnd{visit_id_, VisitOutcome::Accepted});
      return;
    }

    if (plan_rejection(site.banner, synonyms_).outcome != RejectionOutcome::Rejected) {
      emit(VisitEnd{visit_id_, VisitOutcome::InteractionFailed});
      return;
    }
    emit(Interaction{visit_id_, InteractionAction::RejectClicked, S::AfterReject});
    load_all(site, S::AfterReject, phase, false, browser);
    emit(Interaction{visit_id_, InteractionAction::Reload, S::AfterReloadedReject});
    load_all(site, S::AfterReloadedReject, phase, false, browser, true);
    emit(VisitEnd{visit_id_, VisitOutcome::Rejected});
  }

  const EcosystemConfig& config_;
  std::uint64_t seed_;
  const SynonymTable& synonyms_;
  std::vector<CrawlEvent> events_;
  VisitId visit_count_ = 0;
  VisitId visit_id_ = 0;
};

}  // namespace

std::vector<CrawlEvent> generate(const EcosystemConfig& config, std::uint64_t seed, const SynonymTable& synonyms) {
  config.validate();
  return Generator(config, seed, synonyms).run();
}

std::string generate_log_text(const EcosystemConfig& config, std::uint64_t seed, const SynonymTable& synonyms) {
  const auto events = generate(config, seed, synonyms);
  std::ostringstream out;
  write_log(out, events);
  return out.str();
}

}  // namespace cookieflow
