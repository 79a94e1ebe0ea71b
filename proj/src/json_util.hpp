#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "cookieflow/error.hpp"
#include "cookieflow/model.hpp"

namespace cookieflow::detail {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

// Field accessors that turn shape errors into Error{code}.
const Json& require(const Json& obj, std::string_view field, ErrorCode code);
std::string require_string(const Json& obj, std::string_view field, ErrorCode code);
bool require_bool(const Json& obj, std::string_view field, ErrorCode code);
std::uint64_t require_uint(const Json& obj, std::string_view field, ErrorCode code);

template <class E>
E require_enum(const Json& obj, std::string_view field, ErrorCode code) {
  const std::string text = require_string(obj, field, code);
  if (auto v = parse_enum<E>(text)) return *v;
  throw Error(code, "field '" + std::string(field) + "' has unknown value '" + text + "'");
}

OrderedJson banner_to_json(const BannerDescriptor& banner);
BannerDescriptor banner_from_json(const Json& j, ErrorCode code);

}  // namespace cookieflow::detail
