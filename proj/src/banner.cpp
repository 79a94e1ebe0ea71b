#include "cookieflow/banner.hpp"

#include <fstream>
#include <sstream>

#include "cookieflow/error.hpp"
#include "json_util.hpp"

namespace cookieflow {

namespace {

// Kept in sync with data/banner_synonyms.json (a unit test compares them).
constexpr std::string_view kDefaultSynonyms = R"({
  "reject": ["reject all", "reject", "decline all", "decline", "deny all", "deny", "refuse all",
             "only necessary", "necessary only", "use necessary cookies only",
             "alle ablehnen", "ablehnen", "tout refuser", "refuser", "rechazar todo", "rechazar",
             "rifiuta tutto", "rifiuta", "alles weigeren", "weigeren"],
  "accept": ["accept all", "accept", "allow all", "agree", "i agree", "ok", "got it",
             "alle akzeptieren", "akzeptieren", "tout accepter", "accepter", "aceptar todo", "aceptar",
             "accetta tutto", "accetta", "alles accepteren", "accepteren"],
  "settings": ["settings", "cookie settings", "manage options", "manage preferences", "customize", "more options",
               "einstellungen", "paramètres", "personnaliser", "configuración", "impostazioni", "instellingen"],
  "save": ["confirm", "confirm my choices", "save", "save & exit", "save and exit", "save settings",
           "accept selected", "allow selection", "auswahl speichern", "speichern", "enregistrer",
           "guardar", "salva", "opslaan"]
})";

// ASCII lowercase, whitespace runs collapsed, ends trimmed.
std::string normalize_label(std::string_view label) {
  std::string out;
  bool pending_space = false;
  for (char c : label) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  }
  return out;
}

}  // namespace

void SynonymTable::add(ButtonAction action, std::string_view label) { labels_[normalize_label(label)] = action; }

ButtonAction SynonymTable::classify(const BannerButton& button) const {
  auto it = labels_.find(normalize_label(button.label));
  return it == labels_.end() ? button.action : it->second;
}

SynonymTable SynonymTable::parse(std::string_view json_text) {
  constexpr auto bad = ErrorCode::InvalidConfig;
  static const std::pair<const char*, ButtonAction> groups[] = {{"reject", ButtonAction::Reject},
                                                                {"accept", ButtonAction::Accept},
                                                                {"settings", ButtonAction::Settings},
                                                                {"save", ButtonAction::Save}};
  SynonymTable table;
  try {
    const auto j = detail::Json::parse(json_text);
    if (!j.is_object()) throw Error(bad, "synonym table must be a JSON object");
    for (const auto& [field, action] : groups) {
      auto it = j.find(field);
      if (it == j.end()) continue;
      if (!it->is_array()) throw Error(bad, std::string("synonyms.") + field + " must be an array");
      for (const auto& label : *it) table.add(action, label.get<std::string>());
    }
  } catch (const detail::Json::exception& e) {
    throw Error(bad, std::string("synonym table: ") + e.what());
  }
  return table;
}

SynonymTable SynonymTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

SynonymTable SynonymTable::defaults() {
  static const SynonymTable table = parse(kDefaultSynonyms);
  return table;
}

std::string_view to_string(RejectionOutcome v) {
  switch (v) {
    case RejectionOutcome::Rejected: return "REJECTED";
    case RejectionOutcome::Failed: return "FAILED";
    case RejectionOutcome::AcceptRisk: return "ACCEPT_RISK";
  }
  return "FAILED";
}

namespace {

std::optional<std::size_t> find_button(const BannerLayer& layer, ButtonAction action, const SynonymTable& synonyms) {
  for (std::size_t i = 0; i < layer.buttons.size(); ++i)
    if (synonyms.classify(layer.buttons[i]) == action) return i;
  return std::nullopt;
}

}  // namespace

RejectionPlan plan_rejection(const BannerDescriptor& banner, const SynonymTable& synonyms) {
  RejectionPlan plan;
  if (banner.banner_type == BannerType::None || banner.layers.empty()) return plan;

  const BannerLayer& main = banner.layers[0];
  if (auto b = find_button(main, ButtonAction::Reject, synonyms)) {
    plan.clicks.push_back({0, *b, ButtonAction::Reject});
    plan.outcome = RejectionOutcome::Rejected;
    return plan;
  }
  auto settings = find_button(main, ButtonAction::Settings, synonyms);
  if (!settings || banner.layers.size() < 2) return plan;
  plan.clicks.push_back({0, *settings, ButtonAction::Settings});

  const BannerLayer& layer = banner.layers[1];
  if (auto b = find_button(layer, ButtonAction::Reject, synonyms)) {
    plan.clicks.push_back({1, *b, ButtonAction::Reject});
    plan.outcome = RejectionOutcome::Rejected;
    return plan;
  }
  if (auto b = find_button(layer, ButtonAction::Save, synonyms)) {
    plan.clicks.push_back({1, *b, ButtonAction::Save});
    const bool risky = std::any_of(layer.toggles.begin(), layer.toggles.end(),
                                   [](const BannerToggle& t) { return !t.essential && t.preselected; });
    plan.outcome = risky ? RejectionOutcome::AcceptRisk : RejectionOutcome::Rejected;
    return plan;
  }
  plan.clicks.clear();
  return plan;
}

std::optional<PlannedClick> plan_accept(const BannerDescriptor& banner, const SynonymTable& synonyms) {
  if (banner.banner_type == BannerType::None || banner.layers.empty()) return std::nullopt;
  if (auto b = find_button(banner.layers[0], ButtonAction::Accept, synonyms))
    return PlannedClick{0, *b, ButtonAction::Accept};
  return std::nullopt;
}

}  // namespace cookieflow
