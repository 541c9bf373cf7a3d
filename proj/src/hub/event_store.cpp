#include "porch/hub/event_store.hpp"

#include "porch/core/crypto.hpp"
#include "porch/core/error.hpp"
#include "porch/core/segment.hpp"

#include <spdlog/spdlog.h>

namespace porch::hub {

EventStore::EventStore(Journal* journal, BlobStore* blobs, std::shared_ptr<const Clock> clock,
                       std::size_t max_events)
    : journal_(journal), blobs_(blobs), clock_(std::move(clock)), max_events_(max_events) {}

void EventStore::set_hook(StoreHook hook) {
    std::lock_guard lock(ingest_mutex_);
    hook_ = std::move(hook);
}

void EventStore::replay(const Json& r) {
    if (r.at("type") == "evict") {
        std::lock_guard lock(ingest_mutex_);
        evict(r.at("event_id").get<std::string>());
        return;
    }
    if (r.at("type") != "event") return;
    auto rec = record_from_json(r.at("record"));
    std::lock_guard lock(ingest_mutex_);
    if (by_id_.count(rec.event.event_id)) return;
    insert(std::move(rec));
}

void EventStore::insert(EventRecord record) {
    std::unique_lock lock(index_mutex_);
    TimeKey key{record.event.captured_at_ms, record.seq};
    by_id_[record.event.event_id] = records_.size();
    by_time_.insert(key);
    by_device_[record.event.device_id].insert(key);
    records_.push_back(std::move(record));
}

// Snapshot blobs are left on disk; other events may share the same digest.
void EventStore::evict(const std::string& event_id) {
    std::unique_lock lock(index_mutex_);
    auto it = by_id_.find(event_id);
    if (it == by_id_.end()) return;
    auto& rec = records_[it->second];
    TimeKey key{rec.event.captured_at_ms, rec.seq};
    by_time_.erase(key);
    auto dev = by_device_.find(rec.event.device_id);
    dev->second.erase(key);
    if (dev->second.empty()) by_device_.erase(dev);
    by_id_.erase(it);
    rec.event.detections.clear();
    rec.event.detections.shrink_to_fit();
}

IngestResult EventStore::ingest(const std::string& device_id, DetectionEvent event,
                                const std::optional<std::string>& snapshot) {
    if (event.device_id != device_id)
        throw Error(ErrorCode::DeviceMismatch, "device_id", "event claims device " + event.device_id);
    event = canonicalize(std::move(event));
    validate(event);
    std::optional<std::string> digest;
    if (snapshot) {
        if (!is_valid_segment(*snapshot)) throw Error(ErrorCode::BadContainer, "snapshot");
        digest = crypto::sha256_hex(*snapshot);
        if (event.snapshot_ref && *event.snapshot_ref != *digest)
            throw Error(ErrorCode::InvariantViolation, "snapshot_ref", "does not match the snapshot digest");
        event.snapshot_ref = digest;
    }

    std::lock_guard writer(ingest_mutex_);
    if (auto it = by_id_.find(event.event_id); it != by_id_.end()) {
        std::shared_lock lock(index_mutex_);
        return {IngestStatus::Duplicate, records_[it->second]};
    }
    // The blob goes first so a journaled event never points at a missing file.
    if (snapshot && blobs_) blobs_->put(*snapshot);
    EventRecord rec{std::move(event), clock_->now_ms(), records_.size() + 1};
    if (journal_) journal_->append({{"type", "event"}, {"record", to_json(rec)}});
    insert(rec);
    while (max_events_ && by_id_.size() > max_events_) {
        std::string oldest;
        {
            std::shared_lock lock(index_mutex_);
            oldest = records_[by_time_.begin()->second - 1].event.event_id;
        }
        if (journal_) journal_->append({{"type", "evict"}, {"event_id", oldest}});
        evict(oldest);
    }
    if (hook_) {
        try {
            hook_(rec);
        } catch (const std::exception& e) {
            spdlog::error("store hook failed for {}: {}", rec.event.event_id, e.what());
        }
    }
    return {IngestStatus::Stored, std::move(rec)};
}

template <typename Fn>
void EventStore::scan(const QueryFilter& filter, Fn&& visit) const {
    const std::set<TimeKey>* index = &by_time_;
    if (filter.device_id) {
        auto it = by_device_.find(*filter.device_id);
        if (it == by_device_.end()) return;
        index = &it->second;
    }
    auto lo = filter.from_ms ? index->lower_bound({*filter.from_ms, 0}) : index->begin();
    auto hi = filter.to_ms ? index->lower_bound({*filter.to_ms, 0}) : index->end();
    auto check = [&](const TimeKey& k) {
        const auto& rec = records_[k.second - 1];
        return matches(filter, rec.event) ? visit(rec) : true;
    };
    if (filter.order == Order::OldestFirst) {
        for (auto it = lo; it != hi; ++it)
            if (!check(*it)) return;
    } else {
        for (auto it = std::make_reverse_iterator(hi); it != std::make_reverse_iterator(lo); ++it)
            if (!check(*it)) return;
    }
}

std::vector<EventRecord> EventStore::query(const QueryFilter& filter) const {
    filter.validate();
    std::vector<EventRecord> out;
    std::shared_lock lock(index_mutex_);
    scan(filter, [&](const EventRecord& r) {
        out.push_back(r);
        return out.size() < filter.limit;
    });
    return out;
}

Summary EventStore::summarize(const QueryFilter& filter) const {
    filter.validate();
    std::vector<EventRecord> all;
    {
        std::shared_lock lock(index_mutex_);
        scan(filter, [&](const EventRecord& r) {
            all.push_back(r);
            return true;
        });
    }
    return summarize_records(all, filter);
}

std::optional<EventRecord> EventStore::get(const std::string& event_id) const {
    std::shared_lock lock(index_mutex_);
    auto it = by_id_.find(event_id);
    if (it == by_id_.end()) return std::nullopt;
    return records_[it->second];
}

std::optional<std::string> EventStore::snapshot(const std::string& event_id) const {
    auto rec = get(event_id);
    if (!rec || !rec->event.snapshot_ref || !blobs_) return std::nullopt;
    return blobs_->get(*rec->event.snapshot_ref);
}

std::size_t EventStore::size() const {
    std::shared_lock lock(index_mutex_);
    return by_id_.size();
}

}  // namespace porch::hub
