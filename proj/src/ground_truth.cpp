#include <algorithm>

#include "cookieflow/simulator.hpp"

namespace cookieflow {

namespace {

using S = InteractionStage;

// Cookie presence only: which (name, tracker, partition) triples a browser holds.
using Presence = std::set<CookieKey>;

class Enumerator {
 public:
  Enumerator(const EcosystemConfig& config, std::uint64_t seed, const SynonymTable& synonyms)
      : config_(config), seed_(seed), synonyms_(synonyms) {}

  GroundTruth run() {
    Presence profile;
    for (const auto& id : config_.schedule.phase1_sites) phase1_visit(config_.site(id), profile);
    truth_.expected_jar_keys = profile;
    for (const auto& key : profile)
      if (!key.partition) jar_unpartitioned_.insert(key);

    for (const auto& id : config_.schedule.phase2_sites) {
      const SiteSpec& site = config_.site(id);
      if (site.load_fails) continue;
      reject_visit(site, profile);
      accept_visit(site, profile);
    }
    return std::move(truth_);
  }

 private:
  // Tracker cookie writes for one load of `t` on `site`.
  static void writes(const TrackerSpec& t, const SiteId& site, Presence& state) {
    for (const auto& c : t.cookies) {
      const CookieKey plain{c.name, t.domain.str(), std::nullopt};
      if (std::find(c.deleted_on.begin(), c.deleted_on.end(), site) != c.deleted_on.end()) {
        state.erase(plain);
        continue;
      }
      if (t.partition != PartitionMode::Only) state.insert(plain);
      if (t.partition != PartitionMode::None) state.insert({c.name, t.domain.str(), site});
    }
  }

  std::vector<const TrackerSpec*> loaded(const SiteSpec& site, bool consented, bool gpc) const {
    std::vector<const TrackerSpec*> out;
    for (const auto& e : site.embeds) {
      if (e.policy == LoadPolicy::PostAcceptOnly && !consented) continue;
      const TrackerSpec& t = config_.tracker(e.tracker);
      if (gpc && t.honors_gpc) continue;
      out.push_back(&t);
    }
    return out;
  }

  void phase1_visit(const SiteSpec& site, Presence& profile) const {
    if (site.load_fails) return;
    for (const auto* t : loaded(site, false, false)) writes(*t, site.site, profile);
    if (site.banner.banner_type == BannerType::None || !plan_accept(site.banner, synonyms_)) return;
    for (const auto* t : loaded(site, true, false)) writes(*t, site.site, profile);
  }

  // Records the jar keys a request to `tracker` carries from `state`.
  void sends(const TrackerSpec& tracker, const SiteId& site, const Presence& state, InteractionStage stage,
             bool canonical) {
    if (!tracker.listed) return;
    for (const auto& c : tracker.cookies) {
      const CookieKey plain{c.name, tracker.domain.str(), std::nullopt};
      if (!jar_unpartitioned_.contains(plain)) continue;
      const bool carried = state.contains(plain) || state.contains({c.name, tracker.domain.str(), site});
      if (!carried) continue;
      (canonical ? truth_.expected_findings : truth_.expected_staged).insert({plain, site, stage});
    }
  }

  void stage_loads(const SiteSpec& site, const std::vector<const TrackerSpec*>& trackers, InteractionStage stage,
                   bool canonical, Presence& state) {
    const bool gpc = config_.schedule.gpc_enabled;
    for (const auto* t : trackers) {
      const bool had_sync_id = !t->sync_partners.empty() && state.contains({t->sync_cookie, t->domain.str(), std::nullopt});
      sends(*t, site.site, state, stage, canonical);
      writes(*t, site.site, state);
      if (!had_sync_id) continue;
      for (const auto& p : t->sync_partners) {
        const TrackerSpec& partner = config_.tracker(p);
        if (gpc && partner.honors_gpc) continue;
        sends(partner, site.site, state, stage, canonical);
      }
    }
  }

  void reject_visit(const SiteSpec& site, const Presence& profile) {
    Presence state = profile;
    const bool gpc = config_.schedule.gpc_enabled;
    const bool banner = site.banner.banner_type != BannerType::None;
    const bool rejected = banner && plan_rejection(site.banner, synonyms_).outcome == RejectionOutcome::Rejected;
    const auto before = loaded(site, false, gpc);
    stage_loads(site, before, S::BeforeInteraction, rejected, state);
    if (!rejected) return;
    stage_loads(site, before, S::AfterReject, false, state);
    std::vector<const TrackerSpec*> kept;
    for (const auto* t : before)
      if (!embed_dropped(seed_, site.site, *t)) kept.push_back(t);
    stage_loads(site, kept, S::AfterReloadedReject, false, state);
  }

  void accept_visit(const SiteSpec& site, const Presence& profile) {
    Presence state = profile;
    const bool gpc = config_.schedule.gpc_enabled;
    stage_loads(site, loaded(site, false, gpc), S::BeforeInteraction, false, state);
    if (site.banner.banner_type == BannerType::None || !plan_accept(site.banner, synonyms_)) return;
    stage_loads(site, loaded(site, true, gpc), S::AfterAccept, false, state);
  }

  const EcosystemConfig& config_;
  std::uint64_t seed_;
  const SynonymTable& synonyms_;
  GroundTruth truth_;
  Presence jar_unpartitioned_;
};

}  // namespace

GroundTruth ground_truth(const EcosystemConfig& config, std::uint64_t seed, const SynonymTable& synonyms) {
  config.validate();
  return Enumerator(config, seed, synonyms).run();
}

}  // namespace cookieflow
