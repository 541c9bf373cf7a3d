#pragma once

#include "porch/core/bounded_queue.hpp"
#include "porch/edge/config.hpp"
#include "porch/edge/hub_client.hpp"
#include "porch/edge/pipeline.hpp"
#include "porch/edge/streamer.hpp"
#include "porch/synthcam/scene.hpp"

#include <atomic>
#include <memory>
#include <thread>

namespace porch::edge {

enum class Pacing {
    Realtime,  // one frame per frame interval of wall time
    Virtual,   // frames as fast as possible, detection inline
};

struct AgentOptions {
    Pacing pacing = Pacing::Realtime;
    std::shared_ptr<Clock> clock = std::make_shared<SystemClock>();
    /// Overrides the registry named in the config.
    std::shared_ptr<detectors::BackendRegistry> registry;
    std::optional<synthcam::SceneScript> scene;
    std::size_t detect_queue = 8;
    /// After capture ends, keep flushing for at most this long.
    TimestampMs drain_ms = 5000;
};

struct AgentStats {
    PipelineStats pipeline;
    std::size_t frames_dropped = 0;  // detect queue overflow
    std::size_t outbox_size = 0;
    std::size_t outbox_dropped = 0;
    std::size_t polls_ok = 0;
    std::size_t polls_failed = 0;
    StreamerStats stream;
};

/// Single-local-backend registry used when the config names no registry file.
std::shared_ptr<detectors::BackendRegistry> default_registry(detectors::SelectionPolicy policy = {});

/// Capture, analytics, upload, command polling and live streaming for one
/// device. run() blocks until stop() or the configured run length.
class EdgeAgent {
public:
    explicit EdgeAgent(EdgeConfig config, AgentOptions options = {});
    ~EdgeAgent();

    EdgeAgent(const EdgeAgent&) = delete;
    EdgeAgent& operator=(const EdgeAgent&) = delete;

    void run();
    /// Safe from any thread or a signal-watching thread.
    void stop();

    AgentStats stats() const;
    Outbox& outbox() noexcept { return *outbox_; }
    detectors::BackendRegistry& registry() noexcept { return *registry_; }
    SegmentStreamer& streamer() noexcept { return *streamer_; }
    const synthcam::SceneScript& scene() const noexcept { return scene_; }

private:
    struct Shared;

    void capture_loop();
    void detect_loop();
    void flush_loop(std::stop_token stop);
    void drain();

    EdgeConfig config_;
    AgentOptions options_;
    synthcam::SceneScript scene_;
    std::shared_ptr<detectors::BackendRegistry> registry_;
    std::unique_ptr<Outbox> outbox_;
    std::shared_ptr<HubClient> hub_;
    std::shared_ptr<SegmentStreamer> streamer_;
    std::unique_ptr<AnalyticsPipeline> pipeline_;
    DropOldestQueue<SampledFrame> detect_queue_;
    std::shared_ptr<Shared> shared_;
    std::atomic<bool> capture_done_{false};
};

}  // namespace porch::edge
