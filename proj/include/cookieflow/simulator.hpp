#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "cookieflow/banner.hpp"
#include "cookieflow/crawl_log.hpp"
#include "cookieflow/ecosystem.hpp"

namespace cookieflow {

// Full crawl log for the config: phase 1 (one ACCEPT_ITER visit per site,
// persistent profile) followed by phase 2 (REJECT_ITER then ACCEPT_ITER per
// site, each visit starting from a copy of the phase-1 profile).
// Throws Error{InvalidConfig}.
std::vector<CrawlEvent> generate(const EcosystemConfig& config, std::uint64_t seed,
                                 const SynonymTable& synonyms = SynonymTable::defaults());

// generate() serialized as a log file body.
std::string generate_log_text(const EcosystemConfig& config, std::uint64_t seed,
                              const SynonymTable& synonyms = SynonymTable::defaults());

struct ExpectedFinding {
  CookieKey key;
  SiteId sender_site;
  InteractionStage stage = InteractionStage::BeforeInteraction;
  friend auto operator<=>(const ExpectedFinding&, const ExpectedFinding&) = default;
  friend bool operator==(const ExpectedFinding&, const ExpectedFinding&) = default;
};

struct GroundTruth {
  std::set<ExpectedFinding> expected_findings;  // canonical
  std::set<ExpectedFinding> expected_staged;    // every other tracking send of phase 2
  std::set<CookieKey> expected_jar_keys;
};

// Derived from the config and the seeded streams by enumeration over cookie
// presence, without emitting or parsing events.
GroundTruth ground_truth(const EcosystemConfig& config, std::uint64_t seed,
                         const SynonymTable& synonyms = SynonymTable::defaults());

}  // namespace cookieflow
