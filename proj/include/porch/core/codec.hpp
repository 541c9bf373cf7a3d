#pragma once

#include "porch/core/model.hpp"

#include <json.hpp>

#include <string>
#include <string_view>

namespace porch {

using Json = nlohmann::json;

/// Compact JSON with lexicographically sorted keys and reals rendered with at
/// most six fractional digits, trailing zeros trimmed.
std::string canonical_dump(const Json& value);

/// Renders a real the way canonical_dump does ("0.5", "1", "0.333333").
std::string format_real(double v);

Json to_json(const BoundingBox& b);
Json to_json(const Detection& d);
Json to_json(const DetectionEvent& e);

/// These throw MalformedEvent for shape errors and InvariantViolation for
/// bound errors, naming the field.
BoundingBox bbox_from_json(const Json& j);
Detection detection_from_json(const Json& j);
DetectionEvent event_from_json(const Json& j);

std::string encode_event(const DetectionEvent& event);
DetectionEvent decode_event(std::string_view bytes);

}  // namespace porch
