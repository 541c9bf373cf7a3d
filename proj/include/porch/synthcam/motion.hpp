#pragma once

#include "porch/core/model.hpp"

#include <optional>
#include <span>
#include <vector>

namespace porch::synthcam {

/// Frame-difference stand-in for a PIR sensor.
struct MotionGateConfig {
    double threshold = 8.0;  // MAD units, 0-255 scale
    std::size_t warmup_frames = 1;
};

/// Mean absolute difference over all channel samples. Throws DimensionMismatch.
double mad(const Frame& prev, const Frame& cur);

/// Strict: open iff mad > threshold and at least warmup_frames frames preceded `cur`.
bool gate(const Frame& prev, const Frame& cur, const MotionGateConfig& config, std::size_t frames_seen = 1);

struct GateReading {
    bool open = false;
    double mad = 0.0;
};

/// Stateful gate over a capture stream.
class MotionGate {
public:
    explicit MotionGate(MotionGateConfig config = {});

    GateReading observe(const Frame& frame);
    std::size_t frames_seen() const noexcept { return frames_seen_; }
    const MotionGateConfig& config() const noexcept { return config_; }

private:
    MotionGateConfig config_;
    std::optional<Frame> prev_;
    std::size_t frames_seen_ = 0;
};

struct GatedFrame {
    Frame frame;
    bool motion = false;
};

/// Rate-limits analytics: while motion is active, passes the current frame at
/// most once per interval. The rate limit holds across gate gaps.
class Sampler {
public:
    explicit Sampler(TimestampMs interval_ms = 1000);

    bool offer(const Frame& frame, bool motion_active);
    TimestampMs interval_ms() const noexcept { return interval_ms_; }

private:
    TimestampMs interval_ms_;
    std::optional<TimestampMs> last_emit_ms_;
};

std::vector<Frame> sample(std::span<const GatedFrame> stream, TimestampMs interval_ms = 1000);

}  // namespace porch::synthcam
