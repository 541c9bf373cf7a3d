#pragma once

#include "porch/core/codec.hpp"
#include "porch/core/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace porch::detectors {

struct PaletteEntry {
    Rgb color;
    std::string label;
    std::optional<Identity> identity;

    bool operator==(const PaletteEntry&) const = default;
};

/// Exact-color lookup table standing in for a trained model.
class Palette {
public:
    Palette() = default;
    /// Throws BadConfig on duplicate colors or identity on a non-person label.
    explicit Palette(std::vector<PaletteEntry> entries);

    static Palette defaults();
    static Palette from_json(const Json& j);
    Json to_json() const;

    const PaletteEntry* find(Rgb c) const noexcept;
    std::vector<Rgb> colors() const;
    const std::vector<PaletteEntry>& entries() const noexcept { return entries_; }

private:
    std::vector<PaletteEntry> entries_;
};

/// One detection per 4-connected component of pixels exactly matching a
/// palette color. bbox is the component's tight box, confidence is
/// sqrt(component_area / frame_area). Sorted by (label, bbox.y, bbox.x).
std::vector<Detection> palette_detect(const Frame& frame, const Palette& palette);

}  // namespace porch::detectors
