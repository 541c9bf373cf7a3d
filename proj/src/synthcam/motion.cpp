#include "porch/synthcam/motion.hpp"

#include "porch/core/error.hpp"

#include <cstdlib>
#include <stdexcept>

namespace porch::synthcam {

double mad(const Frame& prev, const Frame& cur) {
    if (prev.width != cur.width || prev.height != cur.height || prev.pixels.size() != cur.pixels.size())
        throw Error(ErrorCode::DimensionMismatch, "frame");
    if (cur.pixels.empty()) return 0.0;
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < cur.pixels.size(); ++i)
        sum += static_cast<std::uint64_t>(std::abs(int(prev.pixels[i]) - int(cur.pixels[i])));
    return static_cast<double>(sum) / static_cast<double>(cur.pixels.size());
}

bool gate(const Frame& prev, const Frame& cur, const MotionGateConfig& config, std::size_t frames_seen) {
    auto m = mad(prev, cur);
    return frames_seen >= config.warmup_frames && m > config.threshold;
}

MotionGate::MotionGate(MotionGateConfig config) : config_(config) {
    if (!(config_.threshold >= 0.0)) throw Error(ErrorCode::BadConfig, "threshold");
}

GateReading MotionGate::observe(const Frame& frame) {
    GateReading r;
    if (prev_) {
        r.mad = mad(*prev_, frame);
        r.open = frames_seen_ >= config_.warmup_frames && r.mad > config_.threshold;
    }
    prev_ = frame;
    ++frames_seen_;
    return r;
}

Sampler::Sampler(TimestampMs interval_ms) : interval_ms_(interval_ms) {
    if (interval_ms <= 0) throw Error(ErrorCode::BadConfig, "interval_ms");
}

bool Sampler::offer(const Frame& frame, bool motion_active) {
    if (!motion_active) return false;
    if (last_emit_ms_ && frame.ts_ms - *last_emit_ms_ < interval_ms_) return false;
    last_emit_ms_ = frame.ts_ms;
    return true;
}

std::vector<Frame> sample(std::span<const GatedFrame> stream, TimestampMs interval_ms) {
    Sampler s(interval_ms);
    std::vector<Frame> out;
    for (const auto& g : stream)
        if (s.offer(g.frame, g.motion)) out.push_back(g.frame);
    return out;
}

}  // namespace porch::synthcam
