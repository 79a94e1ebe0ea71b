#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cookieflow {

/// Registrable domain (eTLD+1), always stored canonical.
class SiteId {
 public:
  SiteId() = default;
  // Canonicalizes `raw`; throws Error{EmptyHost|InvalidLabel}.
  explicit SiteId(std::string_view raw);

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const SiteId&, const SiteId&) = default;
  friend bool operator==(const SiteId&, const SiteId&) = default;

 private:
  std::string value_;
};

/// Cookie identity. Path and value are deliberately not part of it; the
/// partition key is.
struct CookieKey {
  std::string name;
  std::string host;
  std::optional<SiteId> partition;

  friend auto operator<=>(const CookieKey&, const CookieKey&) = default;
  friend bool operator==(const CookieKey&, const CookieKey&) = default;
};

struct SessionExpiry {
  friend auto operator<=>(const SessionExpiry&, const SessionExpiry&) = default;
};

// Seconds since the Unix epoch.
struct Timestamp {
  std::int64_t seconds = 0;
  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

using Expiry = std::variant<SessionExpiry, Timestamp>;

// Logs carry no wall clock; event i happens at kCrawlEpoch + i seconds.
inline constexpr std::int64_t kCrawlEpoch = 1738368000;  // 2025-02-01T00:00:00Z
// Every stored cookie's expiry is overwritten with this instant
// (Saturday, 01 Jan 2028, 12:12:12 GMT).
inline constexpr std::int64_t kFixedExpiry = 1830341532;

constexpr Timestamp virtual_time(std::uint64_t event_index) {
  return Timestamp{kCrawlEpoch + static_cast<std::int64_t>(event_index)};
}

enum class ConsentState { PreConsent, PostAccept, PostReject };
enum class Phase { StatefulAccept, StatelessMeasure };
enum class Iteration { RejectIter, AcceptIter };
enum class InteractionStage {
  BeforeInteraction,
  AfterReject,
  AfterAccept,
  AfterReloadedReject,
};
enum class Channel { ResourceFetch, ApiCall };
enum class InteractionAction { AcceptClicked, RejectClicked, Reload };
enum class VisitOutcome { Accepted, Rejected, NoBanner, InteractionFailed, LoadFailed };
enum class BannerType { None, Native, Cmp, Paywall };
enum class ButtonAction { Accept, Reject, Settings, Save, Other };
enum class Party { FirstParty, ThirdParty };

ConsentState consent_state_for(InteractionStage stage);

struct CookieRecord {
  CookieKey key;
  std::string value;
  Expiry original_expiry = SessionExpiry{};
  Timestamp effective_expiry{kFixedExpiry};
  SiteId setter_site;
  std::uint64_t set_at = 0;
  ConsentState consent_state_at_set = ConsentState::PreConsent;
  Phase phase = Phase::StatefulAccept;

  // Expiry strictly before the virtual time of the set event.
  bool is_deletion() const;

  friend bool operator==(const CookieRecord&, const CookieRecord&) = default;
};

struct BannerButton {
  std::string label;
  ButtonAction action = ButtonAction::Other;
  friend bool operator==(const BannerButton&, const BannerButton&) = default;
};

struct BannerToggle {
  std::string category;
  bool preselected = false;
  bool essential = false;
  friend bool operator==(const BannerToggle&, const BannerToggle&) = default;
};

struct BannerLayer {
  std::vector<BannerButton> buttons;
  std::vector<BannerToggle> toggles;
  friend bool operator==(const BannerLayer&, const BannerLayer&) = default;
};

struct BannerDescriptor {
  BannerType banner_type = BannerType::None;
  std::vector<BannerLayer> layers;

  // NONE banners carry no layers.
  bool valid() const { return banner_type != BannerType::None || layers.empty(); }
  friend bool operator==(const BannerDescriptor&, const BannerDescriptor&) = default;
};

// Wire names, e.g. "BEFORE_INTERACTION". Parsing is exact-match.
std::string_view to_string(ConsentState v);
std::string_view to_string(Phase v);
std::string_view to_string(Iteration v);
std::string_view to_string(InteractionStage v);
std::string_view to_string(Channel v);
std::string_view to_string(InteractionAction v);
std::string_view to_string(VisitOutcome v);
std::string_view to_string(BannerType v);
std::string_view to_string(ButtonAction v);
std::string_view to_string(Party v);

template <class E>
std::optional<E> parse_enum(std::string_view text);

std::string to_string(const CookieKey& key);

}  // namespace cookieflow

template <>
struct std::hash<cookieflow::SiteId> {
  std::size_t operator()(const cookieflow::SiteId& s) const noexcept {
    return std::hash<std::string>{}(s.str());
  }
};

template <>
struct std::hash<cookieflow::CookieKey> {
  std::size_t operator()(const cookieflow::CookieKey& k) const noexcept {
    std::size_t h = std::hash<std::string>{}(k.name);
    h = h * 1000003u ^ std::hash<std::string>{}(k.host);
    if (k.partition) h = h * 1000003u ^ std::hash<std::string>{}(k.partition->str());
    return h;
  }
};
