#include "porch/edge/pipeline.hpp"

#include "porch/core/crypto.hpp"
#include "porch/core/error.hpp"
#include "porch/core/segment.hpp"

#include <spdlog/spdlog.h>

namespace porch::edge {

std::string snapshot_bytes(const Frame& frame) {
    return encode_segment(std::span<const Frame>(&frame, 1));
}

AnalyticsPipeline::AnalyticsPipeline(std::string device_id, detectors::BackendRegistry& registry, Outbox& outbox,
                                     synthcam::MotionGateConfig gate, TimestampMs interval_ms, bool emit_empty_events)
    : device_id_(std::move(device_id)),
      registry_(registry),
      outbox_(outbox),
      gate_(gate),
      sampler_(interval_ms),
      emit_empty_(emit_empty_events) {}

std::optional<SampledFrame> AnalyticsPipeline::admit(const Frame& frame) {
    ++captured_;
    auto reading = gate_.observe(frame);
    if (!sampler_.offer(frame, reading.open)) return std::nullopt;
    ++sampled_;
    return SampledFrame{frame, reading.mad};
}

std::optional<DetectionEvent> AnalyticsPipeline::analyse(const SampledFrame& sample, TimestampMs now_ms) {
    detectors::DetectOutcome outcome;
    try {
        outcome = registry_.detect_with_fallback(sample.frame);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoBackendAvailable) throw;
        ++no_backend_;
        spdlog::warn("frame {} not analysed: no detector backend available", sample.frame.seq);
        return std::nullopt;
    }
    if (outcome.detections.empty() && !emit_empty_) {
        ++empty_;
        return std::nullopt;
    }
    auto snapshot = snapshot_bytes(sample.frame);
    DetectionEvent ev;
    ev.event_id = crypto::random_uuid();
    ev.device_id = device_id_;
    ev.captured_at_ms = sample.frame.ts_ms;
    ev.detections = std::move(outcome.detections);
    ev.detector_backend = std::move(outcome.backend);
    ev.motion_score = sample.motion_score;
    ev.snapshot_ref = crypto::sha256_hex(snapshot);
    ev = canonicalize(ev);
    outbox_.enqueue(ev, std::move(snapshot), now_ms);
    ++events_;
    return ev;
}

PipelineStats AnalyticsPipeline::stats() const {
    return {captured_.load(), sampled_.load(), events_.load(), empty_.load(), no_backend_.load()};
}

}  // namespace porch::edge
