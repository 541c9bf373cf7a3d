#include "porch/synthcam/scene.hpp"

#include "porch/core/error.hpp"

#include <algorithm>
#include <fstream>

namespace porch::synthcam {

const Keyframe* SceneScript::active_keyframe(TimestampMs t_ms) const noexcept {
    auto it = std::upper_bound(timeline.begin(), timeline.end(), t_ms,
                               [](TimestampMs t, const Keyframe& k) { return t < k.at_ms; });
    if (it == timeline.begin()) return nullptr;
    return &*std::prev(it);
}

void validate(const SceneScript& s, std::span<const Rgb> palette) {
    if (s.width <= 0 || s.width > 4096) throw Error(ErrorCode::BadScene, "width");
    if (s.height <= 0 || s.height > 4096) throw Error(ErrorCode::BadScene, "height");
    if (s.fps <= 0 || s.fps > 1000) throw Error(ErrorCode::BadScene, "fps");
    if (s.duration_ms && *s.duration_ms <= 0) throw Error(ErrorCode::BadScene, "duration_ms");
    for (std::size_t i = 0; i < s.timeline.size(); ++i) {
        const auto& k = s.timeline[i];
        if (k.at_ms < 0) throw Error(ErrorCode::BadScene, "at_ms");
        if (i > 0 && k.at_ms <= s.timeline[i - 1].at_ms) throw Error(ErrorCode::BadScene, "timeline");
        for (const auto& o : k.objects) {
            if (!o.rect.fits(s.width, s.height)) throw Error(ErrorCode::BadScene, "rect");
            bool neutral = o.color.r == o.color.g && o.color.g == o.color.b;
            if (!palette.empty() && !neutral && std::find(palette.begin(), palette.end(), o.color) == palette.end())
                throw Error(ErrorCode::BadScene, "color");
        }
    }
}

namespace {

Rgb rgb_from_json(const Json& j, const char* name) {
    if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::BadScene, name, "expected [r,g,b]");
    std::uint8_t c[3];
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number_integer() || j[i].get<int>() < 0 || j[i].get<int>() > 255)
            throw Error(ErrorCode::BadScene, name, "channel out of range");
        c[i] = static_cast<std::uint8_t>(j[i].get<int>());
    }
    return {c[0], c[1], c[2]};
}

Json rgb_to_json(Rgb c) {
    return Json::array({c.r, c.g, c.b});
}

}  // namespace

SceneScript scene_from_json(const Json& j, std::span<const Rgb> palette) {
    SceneScript s;
    try {
        s.width = j.at("width").get<int>();
        s.height = j.at("height").get<int>();
        if (j.contains("background")) s.background = rgb_from_json(j["background"], "background");
        s.fps = j.value("fps", 10);
        if (j.contains("duration_ms") && !j["duration_ms"].is_null())
            s.duration_ms = j["duration_ms"].get<TimestampMs>();
        for (const auto& kj : j.value("timeline", Json::array())) {
            Keyframe k;
            k.at_ms = kj.at("at_ms").get<TimestampMs>();
            for (const auto& oj : kj.value("objects", Json::array())) {
                SceneObject o;
                o.color = rgb_from_json(oj.at("color"), "color");
                const auto& r = oj.at("rect");
                o.rect = {r.at("x").get<int>(), r.at("y").get<int>(), r.at("w").get<int>(), r.at("h").get<int>()};
                k.objects.push_back(o);
            }
            s.timeline.push_back(std::move(k));
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::BadScene, "json", e.what());
    }
    validate(s, palette);
    return s;
}

Json to_json(const SceneScript& s) {
    Json j{{"width", s.width}, {"height", s.height}, {"fps", s.fps}, {"background", rgb_to_json(s.background)}};
    if (s.duration_ms) j["duration_ms"] = *s.duration_ms;
    j["timeline"] = Json::array();
    for (const auto& k : s.timeline) {
        Json objs = Json::array();
        for (const auto& o : k.objects)
            objs.push_back({{"color", rgb_to_json(o.color)}, {"rect", porch::to_json(o.rect)}});
        j["timeline"].push_back({{"at_ms", k.at_ms}, {"objects", std::move(objs)}});
    }
    return j;
}

SceneScript load_scene(const std::filesystem::path& path, std::span<const Rgb> palette) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::BadScene, "path", "cannot open " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::BadScene, "json", e.what());
    }
    return scene_from_json(j, palette);
}

Frame render_frame(const SceneScript& script, TimestampMs t_ms, std::uint64_t seq) {
    Frame f(script.width, script.height, t_ms, seq);
    for (std::size_t i = 0; i < f.pixels.size(); i += 3) {
        f.pixels[i] = script.background.r;
        f.pixels[i + 1] = script.background.g;
        f.pixels[i + 2] = script.background.b;
    }
    if (const auto* k = script.active_keyframe(t_ms)) {
        for (const auto& o : k->objects)
            for (int y = o.rect.y; y < o.rect.y + o.rect.h; ++y)
                for (int x = o.rect.x; x < o.rect.x + o.rect.w; ++x) f.set(x, y, o.color);
    }
    return f;
}

}  // namespace porch::synthcam
