#pragma once

// Naive scan-filter-sort reference for event queries, summaries and
// subscription matching. Deliberately shares no code with the store.

#include "porch/core/query.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace porch::testing {

inline bool oracle_keeps(const EventRecord& r, const QueryFilter& f) {
    const auto& e = r.event;
    if (f.device_id && e.device_id != *f.device_id) return false;
    if (f.from_ms && e.captured_at_ms < *f.from_ms) return false;
    if (f.to_ms && e.captured_at_ms >= *f.to_ms) return false;
    if (f.label) {
        bool any = false;
        for (const auto& d : e.detections) any = any || d.label == *f.label;
        if (!any) return false;
    }
    if (f.identity_known) {
        bool any = false;
        for (const auto& d : e.detections) any = any || (d.identity && d.identity->known == *f.identity_known);
        if (!any) return false;
    }
    if (f.min_confidence) {
        bool any = false;
        for (const auto& d : e.detections) any = any || d.confidence >= *f.min_confidence;
        if (!any) return false;
    }
    return true;
}

inline std::vector<EventRecord> oracle_query(std::vector<EventRecord> all, const QueryFilter& f) {
    std::vector<EventRecord> kept;
    for (auto& r : all)
        if (oracle_keeps(r, f)) kept.push_back(std::move(r));
    std::sort(kept.begin(), kept.end(), [](const EventRecord& a, const EventRecord& b) {
        if (a.event.captured_at_ms != b.event.captured_at_ms) return a.event.captured_at_ms < b.event.captured_at_ms;
        return a.seq < b.seq;
    });
    if (f.order == Order::NewestFirst) std::reverse(kept.begin(), kept.end());
    if (kept.size() > f.limit) kept.resize(f.limit);
    return kept;
}

inline Summary oracle_summary(const std::vector<EventRecord>& all, const QueryFilter& f) {
    Summary s;
    s.from_ms = f.from_ms;
    s.to_ms = f.to_ms;
    for (const auto& r : all) {
        if (!oracle_keeps(r, f)) continue;
        ++s.total_events;
        std::vector<std::string> seen;
        for (const auto& d : r.event.detections) {
            if (std::find(seen.begin(), seen.end(), d.label) == seen.end()) {
                seen.push_back(d.label);
                ++s.counts_by_label[d.label];
            }
            if (d.label == "person") {
                if (d.identity && d.identity->known)
                    ++s.known_count;
                else
                    ++s.unknown_count;
            }
        }
        auto t = r.event.captured_at_ms;
        if (!s.first_event_ms || t < *s.first_event_ms) s.first_event_ms = t;
        if (!s.last_event_ms || t > *s.last_event_ms) s.last_event_ms = t;
    }
    return s;
}

inline QueryFilter random_filter(std::mt19937_64& rng, const std::vector<std::string>& devices, TimestampMs t0,
                                 TimestampMs span_ms) {
    QueryFilter f;
    auto coin = [&] { return rng() % 2 == 0; };
    if (coin()) f.device_id = devices[rng() % devices.size()];
    if (coin()) f.from_ms = t0 + static_cast<TimestampMs>(rng() % static_cast<std::uint64_t>(span_ms));
    if (coin()) {
        auto lo = f.from_ms.value_or(t0);
        f.to_ms = lo + 1 + static_cast<TimestampMs>(rng() % static_cast<std::uint64_t>(span_ms));
    }
    static const std::vector<std::string> labels{"person", "car", "animal", "package", "bicycle"};
    if (coin()) f.label = labels[rng() % labels.size()];
    if (rng() % 3 == 0) f.identity_known = coin();
    if (rng() % 3 == 0) f.min_confidence = static_cast<double>(rng() % 1'000'001) / 1e6;
    f.limit = 1 + rng() % kMaxQueryLimit;
    if (rng() % 4 == 0) f.limit = kMaxQueryLimit;
    f.order = coin() ? Order::NewestFirst : Order::OldestFirst;
    return f;
}

}  // namespace porch::testing
