#pragma once

#include "porch/core/clock.hpp"
#include "porch/core/codec.hpp"
#include "porch/hub/commands.hpp"
#include "porch/hub/devices.hpp"

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace porch::hub {

inline constexpr std::size_t kSegmentRing = 10;
inline constexpr TimestampMs kStreamIdleMs = 30'000;

enum class SessionState { Requested, Live, Ended };
std::string to_string(SessionState s);

struct SegmentInfo {
    std::uint64_t seq = 0;
    std::int64_t duration_ms = 0;
    std::shared_ptr<const std::string> bytes;
};

struct StreamSession {
    std::string session_id;
    std::string device_id;
    SessionState state = SessionState::Requested;
    TimestampMs created_at_ms = 0;
    TimestampMs last_viewer_poll_ms = 0;
    std::optional<TimestampMs> last_segment_ms;
    std::optional<TimestampMs> ended_at_ms;
    std::deque<SegmentInfo> segments;  // newest kSegmentRing, ascending seq
    std::optional<std::uint64_t> last_seq;
};

std::string playlist_url(const std::string& session_id);
std::string segment_url(const std::string& session_id, std::uint64_t seq);
Json to_json(const StreamSession& s);

/// On-demand live sessions relayed from edge to viewer. State is in memory
/// only; sessions do not survive a hub restart.
class StreamService {
public:
    StreamService(const DeviceRegistry& devices, CommandQueues& commands, std::shared_ptr<const Clock> clock,
                  TimestampMs idle_ms = kStreamIdleMs);

    /// Returns the device's open session if there is one. Throws NotFound.
    StreamSession request_stream(const std::string& device_id);

    /// Throws NotFound, DeviceMismatch, Gone, NonMonotonicSeq or BadContainer.
    void append_segment(const std::string& session_id, const std::string& device_id, std::uint64_t seq,
                        std::string bytes);

    /// Throws NotFound. Counts as a viewer keep-alive.
    std::string playlist(const std::string& session_id);

    /// Throws NotFound (unknown session, or seq outside the ring).
    std::shared_ptr<const std::string> segment(const std::string& session_id, std::uint64_t seq) const;

    std::optional<StreamSession> get(const std::string& session_id) const;

    std::size_t reap(TimestampMs now_ms);

private:
    void end(StreamSession& s, TimestampMs now_ms);

    const DeviceRegistry& devices_;
    CommandQueues& commands_;
    std::shared_ptr<const Clock> clock_;
    TimestampMs idle_ms_;
    mutable std::mutex mutex_;
    std::map<std::string, StreamSession> sessions_;
};

}  // namespace porch::hub
