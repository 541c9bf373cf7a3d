#include "porch/core/model.hpp"

#include "porch/core/error.hpp"

#include <cmath>
#include <regex>

namespace porch {

Frame::Frame(int w, int h, TimestampMs ts, std::uint64_t s)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0), ts_ms(ts), seq(s) {}

Rgb Frame::at(int x, int y) const noexcept {
    auto i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

void Frame::set(int x, int y, Rgb c) noexcept {
    auto i = (static_cast<std::size_t>(y) * width + x) * 3;
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
}

void Frame::validate() const {
    if (width <= 0) throw Error(ErrorCode::InvariantViolation, "width");
    if (height <= 0) throw Error(ErrorCode::InvariantViolation, "height");
    if (pixels.size() != static_cast<std::size_t>(width) * height * 3)
        throw Error(ErrorCode::InvariantViolation, "pixels");
}

bool BoundingBox::fits(int frame_width, int frame_height) const noexcept {
    return w > 0 && h > 0 && x >= 0 && y >= 0 && x + w <= frame_width && y + h <= frame_height;
}

void validate(const Detection& d) {
    if (d.label.empty()) throw Error(ErrorCode::InvariantViolation, "label");
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
        throw Error(ErrorCode::InvariantViolation, "confidence");
    if (d.bbox.w <= 0 || d.bbox.h <= 0 || d.bbox.x < 0 || d.bbox.y < 0)
        throw Error(ErrorCode::InvariantViolation, "bbox");
    if (d.identity) {
        if (d.label != kPersonLabel) throw Error(ErrorCode::InvariantViolation, "identity");
        if (d.identity->name && !d.identity->known) throw Error(ErrorCode::InvariantViolation, "name");
    }
}

void validate(const Detection& d, int frame_width, int frame_height) {
    validate(d);
    if (!d.bbox.fits(frame_width, frame_height)) throw Error(ErrorCode::InvariantViolation, "bbox");
}

static bool looks_like_uuid(const std::string& s) {
    static const std::regex re("^[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}$");
    return std::regex_match(s, re);
}

void validate(const DetectionEvent& e) {
    if (!looks_like_uuid(e.event_id)) throw Error(ErrorCode::InvariantViolation, "event_id");
    if (e.device_id.empty()) throw Error(ErrorCode::InvariantViolation, "device_id");
    if (e.captured_at_ms < 0) throw Error(ErrorCode::InvariantViolation, "captured_at_ms");
    if (e.detector_backend.empty()) throw Error(ErrorCode::InvariantViolation, "detector_backend");
    if (!(e.motion_score >= 0.0) || !std::isfinite(e.motion_score))
        throw Error(ErrorCode::InvariantViolation, "motion_score");
    if (e.snapshot_ref && e.snapshot_ref->empty()) throw Error(ErrorCode::InvariantViolation, "snapshot_ref");
    for (const auto& d : e.detections) validate(d);
}

double quantize(double v) noexcept {
    return std::round(v * 1e6) / 1e6;
}

DetectionEvent canonicalize(DetectionEvent e) {
    e.motion_score = quantize(e.motion_score);
    for (auto& d : e.detections) d.confidence = quantize(d.confidence);
    return e;
}

}  // namespace porch
