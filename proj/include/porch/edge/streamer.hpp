#pragma once

#include "porch/core/model.hpp"
#include "porch/edge/hub_client.hpp"

#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

namespace porch::edge {

using SegmentPoster = std::function<SegmentPost(const std::string& session_id, std::uint64_t seq, const std::string& bytes)>;

struct StreamerStats {
    std::size_t posted = 0;
    std::size_t skipped = 0;
    std::size_t sessions = 0;
};

/// Live-view path. Capture hands every frame to offer(); while a session is
/// active they are grouped into fixed-length segments and posted in order.
class SegmentStreamer {
public:
    SegmentStreamer(SegmentPoster poster, std::size_t frames_per_segment);

    /// Begins a session; seq restarts at 0. A different active session is replaced.
    void start(const std::string& session_id);
    /// Ends the session if it is the active one. Unsent frames are discarded.
    void stop(const std::string& session_id);
    std::optional<std::string> active_session() const;

    void offer(const Frame& frame);

    /// Posting loop; returns once `stop` is requested.
    void run(std::stop_token stop);

    StreamerStats stats() const;

private:
    struct Pending {
        std::string session_id;
        std::uint64_t seq;
        std::vector<Frame> frames;
    };

    SegmentPoster poster_;
    std::size_t frames_per_segment_;
    mutable std::mutex mutex_;
    std::condition_variable_any cv_;
    std::optional<std::string> session_;
    std::uint64_t next_seq_ = 0;
    std::vector<Frame> building_;
    std::deque<Pending> pending_;
    StreamerStats stats_;
};

}  // namespace porch::edge
