#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cookieflow/model.hpp"

namespace cookieflow {

/// Normalized button labels per action, used by the simulated crawler to
/// recognize buttons the way a label-driven banner clicker would.
class SynonymTable {
 public:
  // English defaults plus a few other languages.
  static SynonymTable defaults();
  // JSON object {"reject": [...], "accept": [...], "settings": [...], "save": [...]}.
  // Throws Error{InvalidConfig}.
  static SynonymTable parse(std::string_view json_text);
  static SynonymTable load(const std::filesystem::path& path);

  void add(ButtonAction action, std::string_view label);
  // Label match first (case and whitespace insensitive); the declared
  // action only when no synonym matches.
  ButtonAction classify(const BannerButton& button) const;

  friend bool operator==(const SynonymTable&, const SynonymTable&) = default;

 private:
  std::map<std::string, ButtonAction> labels_;
};

enum class RejectionOutcome { Rejected, Failed, AcceptRisk };

std::string_view to_string(RejectionOutcome v);

struct PlannedClick {
  std::size_t layer = 0;
  std::size_t button = 0;
  ButtonAction action = ButtonAction::Reject;
  friend bool operator==(const PlannedClick&, const PlannedClick&) = default;
};

struct RejectionPlan {
  std::vector<PlannedClick> clicks;
  RejectionOutcome outcome = RejectionOutcome::Failed;
};

// Main-layer REJECT; else SETTINGS then a settings-layer REJECT; else SAVE,
// which counts as rejecting only when every non-essential toggle is
// preselected off. Never plans an ACCEPT click.
RejectionPlan plan_rejection(const BannerDescriptor& banner, const SynonymTable& synonyms = SynonymTable::defaults());

// Main-layer ACCEPT button, if the banner has one.
std::optional<PlannedClick> plan_accept(const BannerDescriptor& banner,
                                        const SynonymTable& synonyms = SynonymTable::defaults());

}  // namespace cookieflow
