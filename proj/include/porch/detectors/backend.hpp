#pragma once

#include "porch/core/codec.hpp"
#include "porch/core/model.hpp"
#include "porch/detectors/palette.hpp"

#include <atomic>
#include <string>
#include <vector>

namespace porch::detectors {

enum class BackendKind { Local, Remote };

struct DetectorDescriptor {
    std::string name;
    double cost_per_call = 0.0;
    double accuracy_score = 0.0;
    BackendKind kind = BackendKind::Local;
    std::string endpoint;  // remote only
    bool available = true;

    bool operator==(const DetectorDescriptor&) const = default;
};

/// Throws BadConfig naming the offending field.
void validate(const DetectorDescriptor& d);
DetectorDescriptor descriptor_from_json(const Json& j);
Json to_json(const DetectorDescriptor& d);

/// The detection slot. Implementations must return detections valid against
/// the input frame's dimensions or throw.
class DetectorBackend {
public:
    virtual ~DetectorBackend() = default;
    virtual std::vector<Detection> detect(const Frame& frame) = 0;
    /// Used by the periodic health probe to bring a backend back.
    virtual bool healthy() { return true; }
};

class PaletteBackend final : public DetectorBackend {
public:
    explicit PaletteBackend(Palette palette = Palette::defaults()) : palette_(std::move(palette)) {}

    std::vector<Detection> detect(const Frame& frame) override {
        calls_.fetch_add(1);
        return palette_detect(frame, palette_);
    }
    std::size_t calls() const noexcept { return calls_.load(); }

private:
    Palette palette_;
    std::atomic<std::size_t> calls_{0};
};

}  // namespace porch::detectors
