#pragma once

#include "porch/core/codec.hpp"
#include "porch/core/model.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace porch {

/// A stored event as the hub returns it.
struct EventRecord {
    DetectionEvent event;
    TimestampMs received_at_ms = 0;
    std::uint64_t seq = 0;

    bool operator==(const EventRecord&) const = default;
};

enum class Order { NewestFirst, OldestFirst };

inline constexpr std::size_t kDefaultQueryLimit = 50;
inline constexpr std::size_t kMaxQueryLimit = 500;

/// Every present predicate must hold. label, identity_known and
/// min_confidence are each satisfied by any one detection of the event.
struct QueryFilter {
    std::optional<std::string> device_id;
    std::optional<TimestampMs> from_ms;  // inclusive, on captured_at_ms
    std::optional<TimestampMs> to_ms;    // exclusive
    std::optional<std::string> label;
    std::optional<bool> identity_known;
    std::optional<double> min_confidence;
    std::size_t limit = kDefaultQueryLimit;
    Order order = Order::NewestFirst;

    /// Throws BadFilter naming the field.
    void validate() const;

    bool operator==(const QueryFilter&) const = default;
};

struct Summary {
    std::optional<TimestampMs> from_ms;
    std::optional<TimestampMs> to_ms;
    std::size_t total_events = 0;
    /// Number of events carrying at least one detection with the label.
    std::map<std::string, std::size_t> counts_by_label;
    /// Person detections (not events) with and without a known identity.
    std::size_t known_count = 0;
    std::size_t unknown_count = 0;
    std::optional<TimestampMs> first_event_ms;
    std::optional<TimestampMs> last_event_ms;

    bool operator==(const Summary&) const = default;
};

bool matches(const QueryFilter& f, const DetectionEvent& e);

/// Strict weak order for `order`: captured_at_ms, then seq.
bool precedes(const EventRecord& a, const EventRecord& b, Order order) noexcept;

/// Aggregates `records`, which must already be the filtered set.
Summary summarize_records(std::span<const EventRecord> records, const QueryFilter& f);

Json to_json(const EventRecord& r);
EventRecord record_from_json(const Json& j);
Json to_json(const Summary& s);
Summary summary_from_json(const Json& j);

std::string to_string(Order o);

/// Query-string form used by GET /v1/events and /v1/summary. Unknown keys are
/// rejected so typos do not silently widen a query.
QueryFilter filter_from_params(const std::map<std::string, std::string>& params);
std::map<std::string, std::string> to_params(const QueryFilter& f);
std::string to_query_string(const QueryFilter& f);

std::string url_encode(std::string_view s);

}  // namespace porch
