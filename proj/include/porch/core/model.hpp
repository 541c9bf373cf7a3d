#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace porch {

using TimestampMs = std::int64_t;

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;

    auto operator<=>(const Rgb&) const = default;
};

/// Raw RGB8 image, row-major, three bytes per pixel.
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
    TimestampMs ts_ms = 0;
    std::uint64_t seq = 0;

    Frame() = default;
    Frame(int w, int h, TimestampMs ts = 0, std::uint64_t s = 0);

    std::size_t sample_count() const noexcept { return pixels.size(); }
    Rgb at(int x, int y) const noexcept;
    void set(int x, int y, Rgb c) noexcept;

    /// Throws InvariantViolation if the buffer length does not match the dimensions.
    void validate() const;

    bool operator==(const Frame&) const = default;
};

struct BoundingBox {
    int x = 0, y = 0, w = 0, h = 0;

    int area() const noexcept { return w * h; }
    bool fits(int frame_width, int frame_height) const noexcept;

    auto operator<=>(const BoundingBox&) const = default;
};

struct Identity {
    bool known = false;
    std::optional<std::string> name;

    bool operator==(const Identity&) const = default;
};

struct Detection {
    std::string label;
    std::optional<Identity> identity;
    double confidence = 0.0;
    BoundingBox bbox;

    bool operator==(const Detection&) const = default;
};

/// Device-stamped record of everything detected in one sampled frame.
struct DetectionEvent {
    std::string event_id;
    std::string device_id;
    TimestampMs captured_at_ms = 0;
    std::vector<Detection> detections;
    std::string detector_backend;
    double motion_score = 0.0;
    std::optional<std::string> snapshot_ref;

    bool operator==(const DetectionEvent&) const = default;
};

inline constexpr std::string_view kPersonLabel = "person";

/// Throws InvariantViolation naming the offending field.
void validate(const Detection& d);
void validate(const Detection& d, int frame_width, int frame_height);
void validate(const DetectionEvent& e);

/// Rounds to the 6 fractional digits used by the canonical encoding.
double quantize(double v) noexcept;

/// Quantizes every real-valued field so the event survives an encode/decode
/// round trip bit-for-bit.
DetectionEvent canonicalize(DetectionEvent e);

}  // namespace porch
