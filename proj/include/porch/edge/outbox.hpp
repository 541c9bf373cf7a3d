#pragma once

#include "porch/core/model.hpp"
#include "porch/core/record_log.hpp"

#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace porch::edge {

struct OutboxEntry {
    std::uint64_t id = 0;  // enqueue order
    DetectionEvent event;
    std::optional<std::string> snapshot;
    std::uint32_t attempts = 0;
    TimestampMs next_retry_at_ms = 0;

    bool operator==(const OutboxEntry&) const = default;
};

enum class UploadResult {
    Stored,     // 200
    Duplicate,  // 409: hub already has it
    Retry,      // transport failure or transient status
    Rejected,   // hub will never accept it (4xx other than auth/conflict)
};

class EventSink {
public:
    virtual ~EventSink() = default;
    virtual UploadResult upload(const DetectionEvent& event, const std::optional<std::string>& snapshot) = 0;
};

/// min(2^attempts * 500 ms, 60 s), with `attempts` counted before this failure.
TimestampMs retry_backoff_ms(std::uint32_t attempts) noexcept;

/// Durable FIFO of events awaiting upload, backed by a RecordLog. Every
/// mutation is a log record; the file is compacted on open.
class Outbox {
public:
    /// A file failing its checksum is quarantined and the outbox starts empty.
    Outbox(std::filesystem::path path, std::size_t capacity = 1024, bool durable = true);

    /// Persists before returning. When full, the oldest entry is dropped.
    void enqueue(const DetectionEvent& event, std::optional<std::string> snapshot, TimestampMs now_ms = 0);

    /// Sends in FIFO order, removing each entry only once the hub acknowledged
    /// it. Stops at the first entry not yet due or failing. Returns the number
    /// acknowledged (stored or duplicate).
    std::size_t flush(EventSink& sink, TimestampMs now_ms);

    std::size_t size() const;
    bool empty() const { return size() == 0; }
    std::size_t dropped() const;
    std::size_t rejected() const;
    std::vector<OutboxEntry> entries() const;
    /// Where a corrupt file was moved on open, if that happened.
    const std::optional<std::filesystem::path>& quarantined() const noexcept { return quarantined_; }

private:
    void load();
    void remove_front(char record_type);

    std::filesystem::path path_;
    std::size_t capacity_;
    bool durable_;
    mutable std::mutex mutex_;
    std::mutex flush_mutex_;
    std::unique_ptr<RecordLog> log_;
    std::deque<OutboxEntry> entries_;
    std::uint64_t next_id_ = 1;
    std::size_t dropped_ = 0;
    std::size_t rejected_ = 0;
    std::optional<std::filesystem::path> quarantined_;
};

}  // namespace porch::edge
