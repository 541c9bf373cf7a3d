#pragma once

#include "porch/detectors/registry.hpp"
#include "porch/edge/outbox.hpp"
#include "porch/synthcam/motion.hpp"

#include <atomic>
#include <optional>
#include <string>

namespace porch::edge {

struct SampledFrame {
    Frame frame;
    double motion_score = 0.0;
};

struct PipelineStats {
    std::size_t captured = 0;
    std::size_t sampled = 0;
    std::size_t events = 0;
    std::size_t empty_frames = 0;
    std::size_t no_backend = 0;
};

/// Capture-side gating and sampling plus detect-side event building. The two
/// halves may run on different threads.
class AnalyticsPipeline {
public:
    AnalyticsPipeline(std::string device_id, detectors::BackendRegistry& registry, Outbox& outbox,
                      synthcam::MotionGateConfig gate = {}, TimestampMs interval_ms = 1000,
                      bool emit_empty_events = false);

    /// Capture thread only.
    std::optional<SampledFrame> admit(const Frame& frame);

    /// Runs detection and enqueues the resulting event, which is returned.
    std::optional<DetectionEvent> analyse(const SampledFrame& sample, TimestampMs now_ms);

    PipelineStats stats() const;

private:
    std::string device_id_;
    detectors::BackendRegistry& registry_;
    Outbox& outbox_;
    synthcam::MotionGate gate_;
    synthcam::Sampler sampler_;
    bool emit_empty_;
    std::atomic<std::size_t> captured_{0}, sampled_{0}, events_{0}, empty_{0}, no_backend_{0};
};

/// Single-frame segment used as the event snapshot.
std::string snapshot_bytes(const Frame& frame);

}  // namespace porch::edge
