#pragma once

#include "porch/core/clock.hpp"
#include "porch/core/query.hpp"
#include "porch/hub/blobs.hpp"
#include "porch/hub/journal.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <unordered_map>

namespace porch::hub {

enum class IngestStatus { Stored, Duplicate };

struct IngestResult {
    IngestStatus status;
    EventRecord record;
};

/// Called once per newly stored event, after it is durable.
using StoreHook = std::function<void(const EventRecord&)>;

/// Append-only event store: journal for durability, in-memory indexes by id,
/// by capture time and by device for queries.
class EventStore {
public:
    /// `journal` and `blobs` may be null for a purely in-memory store.
    /// `max_events` of 0 keeps everything; otherwise the event with the oldest
    /// capture time is evicted whenever an ingest goes over the limit.
    EventStore(Journal* journal, BlobStore* blobs, std::shared_ptr<const Clock> clock,
               std::size_t max_events = 0);

    void replay(const Json& record);
    void set_hook(StoreHook hook);

    /// Idempotent on event_id. Throws DeviceMismatch, InvariantViolation,
    /// MalformedEvent or BadContainer.
    IngestResult ingest(const std::string& device_id, DetectionEvent event,
                        const std::optional<std::string>& snapshot = std::nullopt);

    std::vector<EventRecord> query(const QueryFilter& filter) const;
    /// Over the same records query() would return with no limit.
    Summary summarize(const QueryFilter& filter) const;

    std::optional<EventRecord> get(const std::string& event_id) const;
    /// Snapshot bytes of an event, if it has one stored.
    std::optional<std::string> snapshot(const std::string& event_id) const;

    /// Live events, not counting evicted ones.
    std::size_t size() const;

private:
    using TimeKey = std::pair<TimestampMs, std::uint64_t>;  // captured_at_ms, seq

    void insert(EventRecord record);
    void evict(const std::string& event_id);
    template <typename Fn>
    void scan(const QueryFilter& filter, Fn&& visit) const;

    Journal* journal_;
    BlobStore* blobs_;
    std::shared_ptr<const Clock> clock_;
    std::size_t max_events_;
    StoreHook hook_;

    std::mutex ingest_mutex_;  // single writer
    mutable std::shared_mutex index_mutex_;
    std::vector<EventRecord> records_;  // seq - 1 == index; evicted slots stay
    std::unordered_map<std::string, std::size_t> by_id_;
    std::set<TimeKey> by_time_;
    std::map<std::string, std::set<TimeKey>> by_device_;
};

}  // namespace porch::hub
