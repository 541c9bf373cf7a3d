#include "porch/edge/agent.hpp"

#include "porch/core/error.hpp"

#include <spdlog/spdlog.h>

#include <condition_variable>
#include <mutex>

namespace porch::edge {

namespace {

constexpr auto kFlushPeriod = std::chrono::milliseconds(200);
constexpr TimestampMs kPollBackoffMinMs = 500;
constexpr TimestampMs kPollBackoffMaxMs = 30'000;

}  // namespace

// State the command poller shares with the agent. The poller may sit in a
// long-poll when the agent shuts down, so it owns what it touches.
struct EdgeAgent::Shared {
    std::mutex mutex;
    std::condition_variable_any wake;
    std::atomic<bool> stopping{false};
    std::atomic<bool> poller_done{false};
    std::atomic<std::size_t> polls_ok{0};
    std::atomic<std::size_t> polls_failed{0};
    std::stop_source stream_stop;
    std::jthread detect;
    std::jthread flusher;
    std::jthread streamer;
    std::thread poller;
};

std::shared_ptr<detectors::BackendRegistry> default_registry(detectors::SelectionPolicy policy) {
    auto reg = std::make_shared<detectors::BackendRegistry>(policy);
    reg->add({"palette", 0.0, 1.0, detectors::BackendKind::Local, {}, true},
             std::make_shared<detectors::PaletteBackend>());
    return reg;
}

EdgeAgent::EdgeAgent(EdgeConfig config, AgentOptions options)
    : config_(std::move(config)),
      options_(std::move(options)),
      detect_queue_(options_.detect_queue),
      shared_(std::make_shared<Shared>()) {
    config_.validate();
    auto palette = detectors::Palette::defaults();
    auto colors = palette.colors();
    if (options_.scene) {
        scene_ = *options_.scene;
        synthcam::validate(scene_, colors);
    } else {
        if (config_.scene.empty()) throw Error(ErrorCode::BadConfig, "scene", "no scene configured");
        scene_ = synthcam::load_scene(config_.scene, colors);
    }
    if (options_.registry)
        registry_ = options_.registry;
    else if (!config_.registry.empty())
        registry_ = std::shared_ptr<detectors::BackendRegistry>(
            detectors::load_registry(config_.registry, palette, config_.policy));
    else
        registry_ = default_registry(config_.policy);

    outbox_ = std::make_unique<Outbox>(config_.outbox, config_.outbox_capacity);
    hub_ = std::make_shared<HubClient>(config_.hub_url, config_.device_id, config_.secret_bytes(), options_.clock);
    auto per_segment = static_cast<std::size_t>(std::max<TimestampMs>(1, config_.segment_ms / scene_.frame_interval_ms()));
    streamer_ = std::make_shared<SegmentStreamer>(
        [hub = hub_](const std::string& s, std::uint64_t seq, const std::string& b) { return hub->post_segment(s, seq, b); },
        per_segment);
    pipeline_ = std::make_unique<AnalyticsPipeline>(config_.device_id, *registry_, *outbox_, config_.gate,
                                                    config_.interval_ms, config_.emit_empty_events);
}

EdgeAgent::~EdgeAgent() {
    stop();
    auto& s = *shared_;
    if (s.detect.joinable()) s.detect.join();
    if (s.flusher.joinable()) s.flusher.join();
    if (s.streamer.joinable()) {
        s.streamer.request_stop();
        s.streamer.join();
    }
    if (s.poller.joinable()) {
        // A long-poll in flight can take up to poll_wait_s to return; it only
        // holds shared state, so it is left to finish on its own.
        for (int i = 0; i < 20 && !s.poller_done; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(50));
        if (s.poller_done)
            s.poller.join();
        else
            s.poller.detach();
    }
}

void EdgeAgent::stop() {
    shared_->stopping = true;
    shared_->wake.notify_all();
}

void EdgeAgent::run() {
    auto& s = *shared_;
    if (options_.pacing == Pacing::Realtime) s.detect = std::jthread([this] { detect_loop(); });
    s.flusher = std::jthread([this](std::stop_token st) { flush_loop(st); });
    s.streamer = std::jthread([st = streamer_](std::stop_token tok) { st->run(tok); });
    s.poller = std::thread([shared = shared_, hub = hub_, streamer = streamer_, registry = registry_,
                            wait_s = static_cast<int>(config_.poll_wait_s)] {
        TimestampMs backoff = kPollBackoffMinMs;
        while (!shared->stopping) {
            auto cmds = hub->poll_commands(wait_s);
            if (shared->stopping) break;
            if (!cmds) {
                ++shared->polls_failed;
                std::unique_lock lock(shared->mutex);
                shared->wake.wait_for(lock, std::chrono::milliseconds(backoff), [&] { return shared->stopping.load(); });
                backoff = std::min(backoff * 2, kPollBackoffMaxMs);
                continue;
            }
            ++shared->polls_ok;
            backoff = kPollBackoffMinMs;
            for (const auto& c : *cmds) {
                std::visit(
                    [&](const auto& cmd) {
                        using T = std::decay_t<decltype(cmd)>;
                        if constexpr (std::is_same_v<T, StartStream>)
                            streamer->start(cmd.session_id);
                        else if constexpr (std::is_same_v<T, StopStream>)
                            streamer->stop(cmd.session_id);
                        else {
                            spdlog::info("policy updated: min_accuracy {}", cmd.min_accuracy);
                            registry->set_policy({cmd.min_accuracy});
                        }
                    },
                    c);
            }
        }
        shared->poller_done = true;
    });

    capture_loop();
    capture_done_ = true;
    detect_queue_.close();
    if (s.detect.joinable()) s.detect.join();
    drain();
    stop();
    if (s.flusher.joinable()) s.flusher.join();
}

void EdgeAgent::capture_loop() {
    auto& s = *shared_;
    const auto interval = scene_.frame_interval_ms();
    std::optional<TimestampMs> end = config_.run_for_ms;
    if (scene_.duration_ms) end = end ? std::min(*end, *scene_.duration_ms) : *scene_.duration_ms;
    const auto base_ms = options_.clock->now_ms();
    const auto wall_start = std::chrono::steady_clock::now();
    spdlog::info("capturing {}x{} at {} fps", scene_.width, scene_.height, scene_.fps);

    for (std::uint64_t seq = 0; !s.stopping; ++seq) {
        const TimestampMs t = static_cast<TimestampMs>(seq) * interval;
        if (end && t >= *end) break;
        if (options_.pacing == Pacing::Realtime) {
            std::unique_lock lock(s.mutex);
            if (s.wake.wait_until(lock, wall_start + std::chrono::milliseconds(t), [&] { return s.stopping.load(); }))
                break;
        }
        auto frame = synthcam::render_frame(scene_, t, seq);
        frame.ts_ms = base_ms + t;
        streamer_->offer(frame);
        auto sample = pipeline_->admit(frame);
        if (!sample) continue;
        if (options_.pacing == Pacing::Realtime) {
            if (detect_queue_.push(std::move(*sample))) spdlog::debug("detect queue full; dropped oldest frame");
        } else {
            pipeline_->analyse(*sample, options_.clock->now_ms());
            s.wake.notify_all();
        }
    }
}

void EdgeAgent::detect_loop() {
    for (;;) {
        auto sample = detect_queue_.pop_for(std::chrono::milliseconds(100));
        if (!sample) {
            if (capture_done_) return;
            continue;
        }
        try {
            pipeline_->analyse(*sample, options_.clock->now_ms());
        } catch (const std::exception& e) {
            spdlog::error("analysis of frame {} failed: {}", sample->frame.seq, e.what());
        }
        shared_->wake.notify_all();
    }
}

void EdgeAgent::flush_loop(std::stop_token stop) {
    auto& s = *shared_;
    while (!stop.stop_requested() && !s.stopping) {
        const auto now = options_.clock->now_ms();
        outbox_->flush(*hub_, now);
        registry_->probe_health(now);
        std::unique_lock lock(s.mutex);
        s.wake.wait_for(lock, kFlushPeriod, [&] { return s.stopping.load(); });
    }
}

void EdgeAgent::drain() {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(options_.drain_ms);
    while (!outbox_->empty() && !shared_->stopping && std::chrono::steady_clock::now() < deadline) {
        outbox_->flush(*hub_, options_.clock->now_ms());
        if (outbox_->empty()) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
}

AgentStats EdgeAgent::stats() const {
    AgentStats out;
    out.pipeline = pipeline_->stats();
    out.frames_dropped = detect_queue_.dropped();
    out.outbox_size = outbox_->size();
    out.outbox_dropped = outbox_->dropped();
    out.polls_ok = shared_->polls_ok;
    out.polls_failed = shared_->polls_failed;
    out.stream = streamer_->stats();
    return out;
}

}  // namespace porch::edge
