#include "cookieflow/model.hpp"

#include "cookieflow/error.hpp"
#include "cookieflow/host.hpp"

namespace cookieflow {
namespace {

template <class E>
struct EnumTable;

#define COOKIEFLOW_ENUM_TABLE(Type, ...)                              \
  template <>                                                         \
  struct EnumTable<Type> {                                            \
    static constexpr std::string_view names[] = {__VA_ARGS__};        \
  };

COOKIEFLOW_ENUM_TABLE(ConsentState, "PRE_CONSENT", "POST_ACCEPT", "POST_REJECT")
COOKIEFLOW_ENUM_TABLE(Phase, "STATEFUL_ACCEPT", "STATELESS_MEASURE")
COOKIEFLOW_ENUM_TABLE(Iteration, "REJECT_ITER", "ACCEPT_ITER")
COOKIEFLOW_ENUM_TABLE(InteractionStage, "BEFORE_INTERACTION", "AFTER_REJECT", "AFTER_ACCEPT",
                      "AFTER_RELOADED_REJECT")
COOKIEFLOW_ENUM_TABLE(Channel, "RESOURCE_FETCH", "API_CALL")
COOKIEFLOW_ENUM_TABLE(InteractionAction, "ACCEPT_CLICKED", "REJECT_CLICKED", "RELOAD")
COOKIEFLOW_ENUM_TABLE(VisitOutcome, "ACCEPTED", "REJECTED", "NO_BANNER", "INTERACTION_FAILED",
                      "LOAD_FAILED")
COOKIEFLOW_ENUM_TABLE(BannerType, "NONE", "NATIVE", "CMP", "PAYWALL")
COOKIEFLOW_ENUM_TABLE(ButtonAction, "ACCEPT", "REJECT", "SETTINGS", "SAVE", "OTHER")
COOKIEFLOW_ENUM_TABLE(Party, "FIRST_PARTY", "THIRD_PARTY")
COOKIEFLOW_ENUM_TABLE(ErrorCode, "EMPTY_HOST", "INVALID_LABEL", "MALFORMED_RULE",
                      "HOST_IS_PUBLIC_SUFFIX", "MALFORMED_DOMAIN", "MALFORMED_RECORD",
                      "SEQUENCE_VIOLATION", "MALFORMED_PAIR", "MISSING_NAME", "MALFORMED_EXPIRES",
                      "WRONG_PHASE", "SAMPLE_TOO_LARGE", "IO_ERROR", "CORRUPT_SNAPSHOT",
                      "INVALID_CONFIG")

#undef COOKIEFLOW_ENUM_TABLE

template <class E>
std::string_view name_of(E v) {
  return EnumTable<E>::names[static_cast<std::size_t>(v)];
}

}  // namespace

template <class E>
std::optional<E> parse_enum(std::string_view text) {
  const auto& names = EnumTable<E>::names;
  for (std::size_t i = 0; i < std::size(names); ++i)
    if (names[i] == text) return static_cast<E>(i);
  return std::nullopt;
}

template std::optional<ConsentState> parse_enum<ConsentState>(std::string_view);
template std::optional<Phase> parse_enum<Phase>(std::string_view);
template std::optional<Iteration> parse_enum<Iteration>(std::string_view);
template std::optional<InteractionStage> parse_enum<InteractionStage>(std::string_view);
template std::optional<Channel> parse_enum<Channel>(std::string_view);
template std::optional<InteractionAction> parse_enum<InteractionAction>(std::string_view);
template std::optional<VisitOutcome> parse_enum<VisitOutcome>(std::string_view);
template std::optional<BannerType> parse_enum<BannerType>(std::string_view);
template std::optional<ButtonAction> parse_enum<ButtonAction>(std::string_view);
template std::optional<Party> parse_enum<Party>(std::string_view);
template std::optional<ErrorCode> parse_enum<ErrorCode>(std::string_view);

std::string_view to_string(ErrorCode v) { return name_of(v); }
std::string_view to_string(ConsentState v) { return name_of(v); }
std::string_view to_string(Phase v) { return name_of(v); }
std::string_view to_string(Iteration v) { return name_of(v); }
std::string_view to_string(InteractionStage v) { return name_of(v); }
std::string_view to_string(Channel v) { return name_of(v); }
std::string_view to_string(InteractionAction v) { return name_of(v); }
std::string_view to_string(VisitOutcome v) { return name_of(v); }
std::string_view to_string(BannerType v) { return name_of(v); }
std::string_view to_string(ButtonAction v) { return name_of(v); }
std::string_view to_string(Party v) { return name_of(v); }

SiteId::SiteId(std::string_view raw) : value_(canonicalize_host(raw)) {}

ConsentState consent_state_for(InteractionStage stage) {
  switch (stage) {
    case InteractionStage::BeforeInteraction:
      return ConsentState::PreConsent;
    case InteractionStage::AfterAccept:
      return ConsentState::PostAccept;
    case InteractionStage::AfterReject:
    case InteractionStage::AfterReloadedReject:
      return ConsentState::PostReject;
  }
  return ConsentState::PreConsent;
}

bool CookieRecord::is_deletion() const {
  const auto* at = std::get_if<Timestamp>(&original_expiry);
  return at != nullptr && *at < virtual_time(set_at);
}

std::string to_string(const CookieKey& key) {
  std::string s = key.name + "@" + key.host;
  if (key.partition) s += "^" + key.partition->str();
  return s;
}

}  // namespace cookieflow
