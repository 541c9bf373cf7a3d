#include "porch/detectors/palette.hpp"

#include "porch/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <tuple>

namespace porch::detectors {

Palette::Palette(std::vector<PaletteEntry> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].label.empty()) throw Error(ErrorCode::BadConfig, "label");
        if (entries_[i].identity && entries_[i].label != kPersonLabel) throw Error(ErrorCode::BadConfig, "identity");
        for (std::size_t j = 0; j < i; ++j)
            if (entries_[i].color == entries_[j].color) throw Error(ErrorCode::BadConfig, "color");
    }
}

Palette Palette::defaults() {
    return Palette({
        {{255, 0, 0}, "person", Identity{false, std::nullopt}},
        {{200, 0, 0}, "person", Identity{true, "alice"}},
        {{150, 0, 0}, "person", Identity{true, "bob"}},
        {{0, 0, 255}, "car", std::nullopt},
        {{0, 255, 0}, "animal", std::nullopt},
    });
}

Palette Palette::from_json(const Json& j) {
    std::vector<PaletteEntry> entries;
    try {
        for (const auto& e : j) {
            PaletteEntry p;
            const auto& c = e.at("color");
            p.color = {c.at(0).get<std::uint8_t>(), c.at(1).get<std::uint8_t>(), c.at(2).get<std::uint8_t>()};
            p.label = e.at("label").get<std::string>();
            if (e.contains("identity") && !e["identity"].is_null()) {
                Identity id{e["identity"].at("known").get<bool>(), std::nullopt};
                if (e["identity"].contains("name") && !e["identity"]["name"].is_null())
                    id.name = e["identity"]["name"].get<std::string>();
                p.identity = id;
            }
            entries.push_back(std::move(p));
        }
    } catch (const Json::exception& ex) {
        throw Error(ErrorCode::BadConfig, "palette", ex.what());
    }
    return Palette(std::move(entries));
}

Json Palette::to_json() const {
    Json out = Json::array();
    for (const auto& e : entries_) {
        Json j{{"color", Json::array({e.color.r, e.color.g, e.color.b})}, {"label", e.label}};
        if (e.identity) {
            j["identity"] = {{"known", e.identity->known}};
            j["identity"]["name"] = e.identity->name ? Json(*e.identity->name) : Json(nullptr);
        } else {
            j["identity"] = nullptr;
        }
        out.push_back(std::move(j));
    }
    return out;
}

const PaletteEntry* Palette::find(Rgb c) const noexcept {
    for (const auto& e : entries_)
        if (e.color == c) return &e;
    return nullptr;
}

std::vector<Rgb> Palette::colors() const {
    std::vector<Rgb> out;
    for (const auto& e : entries_) out.push_back(e.color);
    return out;
}

std::vector<Detection> palette_detect(const Frame& frame, const Palette& palette) {
    frame.validate();
    const int w = frame.width, h = frame.height;
    std::vector<int> entry_of(static_cast<std::size_t>(w) * h, -1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (const auto* e = palette.find(frame.at(x, y)))
                entry_of[static_cast<std::size_t>(y) * w + x] = static_cast<int>(e - palette.entries().data());

    std::vector<char> visited(entry_of.size(), 0);
    std::vector<int> stack;
    std::vector<Detection> out;
    const double frame_area = static_cast<double>(w) * h;

    for (std::size_t start = 0; start < entry_of.size(); ++start) {
        if (entry_of[start] < 0 || visited[start]) continue;
        const int entry = entry_of[start];
        int min_x = w, min_y = h, max_x = -1, max_y = -1;
        std::size_t area = 0;
        stack.assign(1, static_cast<int>(start));
        visited[start] = 1;
        while (!stack.empty()) {
            int idx = stack.back();
            stack.pop_back();
            int x = idx % w, y = idx / w;
            ++area;
            min_x = std::min(min_x, x), max_x = std::max(max_x, x);
            min_y = std::min(min_y, y), max_y = std::max(max_y, y);
            auto visit = [&](int nx, int ny) {
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) return;
                auto n = static_cast<std::size_t>(ny) * w + nx;
                if (!visited[n] && entry_of[n] == entry) {
                    visited[n] = 1;
                    stack.push_back(static_cast<int>(n));
                }
            };
            visit(x - 1, y);
            visit(x + 1, y);
            visit(x, y - 1);
            visit(x, y + 1);
        }
        const auto& pe = palette.entries()[static_cast<std::size_t>(entry)];
        Detection d;
        d.label = pe.label;
        d.identity = pe.identity;
        d.confidence = std::sqrt(static_cast<double>(area) / frame_area);
        d.bbox = {min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
        out.push_back(std::move(d));
    }

    auto key = [](const Detection& d) {
        return std::make_tuple(d.label, d.bbox.y, d.bbox.x, d.bbox.w, d.bbox.h,
                               d.identity && d.identity->name ? *d.identity->name : std::string());
    };
    std::sort(out.begin(), out.end(), [&](const Detection& a, const Detection& b) { return key(a) < key(b); });
    return out;
}

}  // namespace porch::detectors
