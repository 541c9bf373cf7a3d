#pragma once

#include "porch/core/codec.hpp"
#include "porch/core/model.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace porch::synthcam {

struct SceneObject {
    Rgb color;
    BoundingBox rect;

    bool operator==(const SceneObject&) const = default;
};

struct Keyframe {
    TimestampMs at_ms = 0;
    std::vector<SceneObject> objects;

    bool operator==(const Keyframe&) const = default;
};

/// Step-function scene: the objects of the latest keyframe at or before t
/// are on screen, painted in list order.
struct SceneScript {
    int width = 64;
    int height = 48;
    Rgb background{32, 32, 32};
    std::vector<Keyframe> timeline;
    int fps = 10;
    /// Length of the scripted clip; the agent stops capturing after it when set.
    std::optional<TimestampMs> duration_ms;

    TimestampMs frame_interval_ms() const noexcept { return 1000 / fps; }
    const Keyframe* active_keyframe(TimestampMs t_ms) const noexcept;

    bool operator==(const SceneScript&) const = default;
};

/// Throws BadScene naming the offending field. When `palette` is non-empty,
/// object colors must be one of its entries or a neutral gray.
void validate(const SceneScript& script, std::span<const Rgb> palette = {});

SceneScript scene_from_json(const Json& j, std::span<const Rgb> palette = {});
Json to_json(const SceneScript& script);
SceneScript load_scene(const std::filesystem::path& path, std::span<const Rgb> palette = {});

Frame render_frame(const SceneScript& script, TimestampMs t_ms, std::uint64_t seq);

}  // namespace porch::synthcam
