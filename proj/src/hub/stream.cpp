#include "porch/hub/stream.hpp"

#include "porch/core/crypto.hpp"
#include "porch/core/error.hpp"
#include "porch/core/segment.hpp"

#include <spdlog/spdlog.h>

namespace porch::hub {

std::string to_string(SessionState s) {
    switch (s) {
    case SessionState::Requested: return "requested";
    case SessionState::Live: return "live";
    case SessionState::Ended: return "ended";
    }
    return "ended";
}

std::string playlist_url(const std::string& session_id) { return "/v1/streams/" + session_id + "/playlist"; }

std::string segment_url(const std::string& session_id, std::uint64_t seq) {
    return "/v1/streams/" + session_id + "/segments/" + std::to_string(seq);
}

Json to_json(const StreamSession& s) {
    Json segs = Json::array();
    for (const auto& seg : s.segments) segs.push_back(seg.seq);
    return {{"session_id", s.session_id},
            {"device_id", s.device_id},
            {"state", to_string(s.state)},
            {"created_at_ms", s.created_at_ms},
            {"last_viewer_poll_ms", s.last_viewer_poll_ms},
            {"last_segment_ms", s.last_segment_ms ? Json(*s.last_segment_ms) : Json(nullptr)},
            {"playlist_url", playlist_url(s.session_id)},
            {"segments", segs}};
}

StreamService::StreamService(const DeviceRegistry& devices, CommandQueues& commands,
                             std::shared_ptr<const Clock> clock, TimestampMs idle_ms)
    : devices_(devices), commands_(commands), clock_(std::move(clock)), idle_ms_(idle_ms) {}

StreamSession StreamService::request_stream(const std::string& device_id) {
    if (!devices_.active(device_id)) throw Error(ErrorCode::NotFound, "device", "unknown device " + device_id);
    std::lock_guard lock(mutex_);
    for (const auto& [_, s] : sessions_)
        if (s.device_id == device_id && s.state != SessionState::Ended) return s;
    StreamSession s;
    s.session_id = crypto::random_uuid();
    s.device_id = device_id;
    s.created_at_ms = clock_->now_ms();
    s.last_viewer_poll_ms = s.created_at_ms;
    sessions_[s.session_id] = s;
    commands_.push(device_id, StartStream{s.session_id});
    spdlog::info("stream session {} requested for {}", s.session_id, device_id);
    return s;
}

void StreamService::append_segment(const std::string& session_id, const std::string& device_id, std::uint64_t seq,
                                   std::string bytes) {
    std::int64_t duration = 0;
    try {
        duration = segment_duration_ms(bytes);
    } catch (const Error&) {
        throw Error(ErrorCode::BadContainer, "segment");
    }
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "session", session_id);
    auto& s = it->second;
    if (s.device_id != device_id) throw Error(ErrorCode::DeviceMismatch, "device_id");
    if (s.state == SessionState::Ended) throw Error(ErrorCode::Gone, "session", "session ended");
    if (s.last_seq && seq <= *s.last_seq)
        throw Error(ErrorCode::NonMonotonicSeq, "seq", "last accepted " + std::to_string(*s.last_seq));
    s.segments.push_back({seq, duration, std::make_shared<const std::string>(std::move(bytes))});
    while (s.segments.size() > kSegmentRing) s.segments.pop_front();
    s.last_seq = seq;
    s.last_segment_ms = clock_->now_ms();
    s.state = SessionState::Live;
}

std::string StreamService::playlist(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "session", session_id);
    auto& s = it->second;
    if (s.state != SessionState::Ended) s.last_viewer_poll_ms = std::max(s.last_viewer_poll_ms, clock_->now_ms());
    std::string out = "#PORCHM3U\n#VERSION:1\n";
    out += "#MEDIA-SEQUENCE:" + std::to_string(s.segments.empty() ? 0 : s.segments.front().seq) + "\n";
    for (const auto& seg : s.segments) {
        out += "#DURATION:" + std::to_string(seg.duration_ms) + "\n";
        out += segment_url(session_id, seg.seq) + "\n";
    }
    if (s.state == SessionState::Ended) out += "#ENDLIST\n";
    return out;
}

std::shared_ptr<const std::string> StreamService::segment(const std::string& session_id, std::uint64_t seq) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "session", session_id);
    for (const auto& seg : it->second.segments)
        if (seg.seq == seq) return seg.bytes;
    throw Error(ErrorCode::NotFound, "segment", std::to_string(seq));
}

std::optional<StreamSession> StreamService::get(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return std::nullopt;
    return it->second;
}

void StreamService::end(StreamSession& s, TimestampMs now_ms) {
    s.state = SessionState::Ended;
    s.ended_at_ms = now_ms;
    commands_.push(s.device_id, StopStream{s.session_id});
    spdlog::info("stream session {} ended", s.session_id);
}

std::size_t StreamService::reap(TimestampMs now_ms) {
    std::lock_guard lock(mutex_);
    std::size_t ended = 0;
    for (auto& [_, s] : sessions_) {
        if (s.state == SessionState::Ended) continue;
        bool no_viewer = now_ms - s.last_viewer_poll_ms > idle_ms_;
        bool dead_edge = s.state == SessionState::Live && s.last_segment_ms && now_ms - *s.last_segment_ms > idle_ms_;
        if (no_viewer || dead_edge) {
            end(s, now_ms);
            ++ended;
        }
    }
    // Ended sessions linger so late edge posts still get 410 rather than 404.
    std::erase_if(sessions_, [&](const auto& kv) {
        return kv.second.ended_at_ms && now_ms - *kv.second.ended_at_ms > 120 * idle_ms_;
    });
    return ended;
}

}  // namespace porch::hub
