#include "porch/edge/outbox.hpp"

#include "porch/core/codec.hpp"
#include "porch/core/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace porch::edge {

// Record payloads, little-endian:
//   'E' u64 id | u32 attempts | i64 next_retry | u32 event_len | event | u8 has_snap | snapshot
//   'A' u64 id   acknowledged by the hub
//   'D' u64 id   dropped (overflow or rejected)
//   'R' u64 id | u32 attempts | i64 next_retry

namespace {

template <typename T>
void put(std::string& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out += static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
}

class Reader {
public:
    explicit Reader(const std::string& s) : s_(s) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(s_[at_ + i])) << (8 * i);
        at_ += sizeof(T);
        return static_cast<T>(v);
    }
    std::string bytes(std::size_t n) {
        need(n);
        auto out = s_.substr(at_, n);
        at_ += n;
        return out;
    }
    std::string rest() { return bytes(s_.size() - at_); }

private:
    void need(std::size_t n) const {
        if (s_.size() - at_ < n) throw Error(ErrorCode::OutboxCorrupt, "record");
    }
    const std::string& s_;
    std::size_t at_ = 0;
};

std::string encode_entry(const OutboxEntry& e) {
    std::string out("E");
    put<std::uint64_t>(out, e.id);
    put<std::uint32_t>(out, e.attempts);
    put<std::int64_t>(out, e.next_retry_at_ms);
    auto ev = encode_event(e.event);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ev.size()));
    out += ev;
    put<std::uint8_t>(out, e.snapshot ? 1 : 0);
    if (e.snapshot) out += *e.snapshot;
    return out;
}

std::string encode_id(char type, std::uint64_t id) {
    std::string out(1, type);
    put<std::uint64_t>(out, id);
    return out;
}

}  // namespace

TimestampMs retry_backoff_ms(std::uint32_t attempts) noexcept {
    if (attempts >= 7) return 60'000;  // 2^7 * 500 > 60 s
    return std::min<TimestampMs>((TimestampMs{1} << attempts) * 500, 60'000);
}

Outbox::Outbox(std::filesystem::path path, std::size_t capacity, bool durable)
    : path_(std::move(path)), capacity_(capacity == 0 ? 1 : capacity), durable_(durable) {
    load();
}

void Outbox::load() {
    RecordLog::Contents contents;
    try {
        contents = RecordLog::read(path_);
        std::deque<OutboxEntry> live;
        for (const auto& rec : contents.records) {
            if (rec.empty()) throw Error(ErrorCode::OutboxCorrupt, "record");
            Reader r(rec);
            auto type = r.get<char>();
            auto id = r.get<std::uint64_t>();
            next_id_ = std::max(next_id_, id + 1);
            auto find = [&] { return std::find_if(live.begin(), live.end(), [&](const OutboxEntry& e) { return e.id == id; }); };
            switch (type) {
            case 'E': {
                OutboxEntry e;
                e.id = id;
                e.attempts = r.get<std::uint32_t>();
                e.next_retry_at_ms = r.get<std::int64_t>();
                auto len = r.get<std::uint32_t>();
                e.event = decode_event(r.bytes(len));
                if (r.get<std::uint8_t>()) e.snapshot = r.rest();
                live.push_back(std::move(e));
                break;
            }
            case 'A':
            case 'D':
                if (auto it = find(); it != live.end()) live.erase(it);
                break;
            case 'R':
                if (auto it = find(); it != live.end()) {
                    it->attempts = r.get<std::uint32_t>();
                    it->next_retry_at_ms = r.get<std::int64_t>();
                }
                break;
            default:
                throw Error(ErrorCode::OutboxCorrupt, "record type");
            }
        }
        entries_ = std::move(live);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::OutboxCorrupt && e.code() != ErrorCode::MalformedEvent &&
            e.code() != ErrorCode::InvariantViolation)
            throw;
        quarantined_ = RecordLog::quarantine(path_);
        spdlog::error("outbox {} is corrupt ({}); moved to {}, starting empty", path_.string(), e.what(),
                      quarantined_->string());
        entries_.clear();
    }
    log_ = std::make_unique<RecordLog>(path_, durable_);
    std::vector<std::string> compacted;
    for (const auto& e : entries_) compacted.push_back(encode_entry(e));
    log_->rewrite(compacted);
}

void Outbox::remove_front(char record_type) {
    log_->append(encode_id(record_type, entries_.front().id));
    entries_.pop_front();
}

void Outbox::enqueue(const DetectionEvent& event, std::optional<std::string> snapshot, TimestampMs now_ms) {
    std::lock_guard lock(mutex_);
    while (entries_.size() >= capacity_) {
        remove_front('D');
        ++dropped_;
    }
    OutboxEntry e{next_id_++, event, std::move(snapshot), 0, now_ms};
    log_->append(encode_entry(e));
    entries_.push_back(std::move(e));
}

std::size_t Outbox::flush(EventSink& sink, TimestampMs now_ms) {
    std::lock_guard flushing(flush_mutex_);
    std::size_t delivered = 0;
    for (;;) {
        OutboxEntry head;
        {
            std::lock_guard lock(mutex_);
            if (entries_.empty() || entries_.front().next_retry_at_ms > now_ms) return delivered;
            head = entries_.front();
        }
        // The lock is released during upload so capture keeps enqueuing.
        auto result = sink.upload(head.event, head.snapshot);
        std::lock_guard lock(mutex_);
        // The head may have been dropped by overflow meanwhile.
        if (entries_.empty() || entries_.front().id != head.id) {
            if (result == UploadResult::Stored || result == UploadResult::Duplicate) ++delivered;
            continue;
        }
        switch (result) {
        case UploadResult::Stored:
        case UploadResult::Duplicate:
            remove_front('A');
            ++delivered;
            break;
        case UploadResult::Rejected:
            spdlog::warn("hub rejected event {}; dropping it", head.event.event_id);
            remove_front('D');
            ++rejected_;
            break;
        case UploadResult::Retry: {
            auto& e = entries_.front();
            e.next_retry_at_ms = now_ms + retry_backoff_ms(e.attempts);
            ++e.attempts;
            std::string rec = encode_id('R', e.id);
            put<std::uint32_t>(rec, e.attempts);
            put<std::int64_t>(rec, e.next_retry_at_ms);
            log_->append(rec);
            return delivered;
        }
        }
    }
}

std::size_t Outbox::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::size_t Outbox::dropped() const {
    std::lock_guard lock(mutex_);
    return dropped_;
}

std::size_t Outbox::rejected() const {
    std::lock_guard lock(mutex_);
    return rejected_;
}

std::vector<OutboxEntry> Outbox::entries() const {
    std::lock_guard lock(mutex_);
    return {entries_.begin(), entries_.end()};
}

}  // namespace porch::edge
