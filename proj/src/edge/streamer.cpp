#include "porch/edge/streamer.hpp"

#include "porch/core/segment.hpp"

#include <spdlog/spdlog.h>

namespace porch::edge {

namespace {
// A slow hub must not make live view fall further and further behind.
constexpr std::size_t kMaxPendingSegments = 2;
}  // namespace

SegmentStreamer::SegmentStreamer(SegmentPoster poster, std::size_t frames_per_segment)
    : poster_(std::move(poster)), frames_per_segment_(frames_per_segment == 0 ? 1 : frames_per_segment) {}

void SegmentStreamer::start(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    if (session_ == session_id) return;
    session_ = session_id;
    next_seq_ = 0;
    building_.clear();
    pending_.clear();
    ++stats_.sessions;
    spdlog::info("live session {} started", session_id);
}

void SegmentStreamer::stop(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    if (session_ != session_id) return;
    session_.reset();
    building_.clear();
    pending_.clear();
    spdlog::info("live session {} stopped", session_id);
}

std::optional<std::string> SegmentStreamer::active_session() const {
    std::lock_guard lock(mutex_);
    return session_;
}

void SegmentStreamer::offer(const Frame& frame) {
    {
        std::lock_guard lock(mutex_);
        if (!session_) return;
        building_.push_back(frame);
        if (building_.size() < frames_per_segment_) return;
        if (pending_.size() == kMaxPendingSegments) {
            pending_.pop_front();
            ++stats_.skipped;
        }
        pending_.push_back({*session_, next_seq_++, std::move(building_)});
        building_.clear();
    }
    cv_.notify_one();
}

void SegmentStreamer::run(std::stop_token stop) {
    while (!stop.stop_requested()) {
        Pending seg;
        {
            std::unique_lock lock(mutex_);
            if (!cv_.wait(lock, stop, [&] { return !pending_.empty(); })) return;
            seg = std::move(pending_.front());
            pending_.pop_front();
        }
        auto bytes = encode_segment(seg.frames);
        auto result = poster_(seg.session_id, seg.seq, bytes);
        if (result == SegmentPost::Failed) result = poster_(seg.session_id, seg.seq, bytes);

        std::lock_guard lock(mutex_);
        switch (result) {
        case SegmentPost::Accepted:
            ++stats_.posted;
            break;
        case SegmentPost::Failed:
            ++stats_.skipped;
            spdlog::warn("segment {} of session {} skipped", seg.seq, seg.session_id);
            break;
        case SegmentPost::Gone:
            if (session_ == seg.session_id) {
                session_.reset();
                building_.clear();
                pending_.clear();
                spdlog::info("hub ended live session {}", seg.session_id);
            }
            break;
        }
    }
}

StreamerStats SegmentStreamer::stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
}

}  // namespace porch::edge
