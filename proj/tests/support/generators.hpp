#pragma once

#include "porch/core/crypto.hpp"
#include "porch/core/model.hpp"

#include <random>
#include <string>
#include <vector>

namespace porch::testing {

inline std::string uuid_from(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> nib(0, 15);
    static constexpr char hex[] = "0123456789abcdef";
    std::string s;
    for (int i = 0; i < 32; ++i) {
        if (i == 8 || i == 12 || i == 16 || i == 20) s += '-';
        s += hex[nib(rng)];
    }
    return s;
}

inline double six_digit_real(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_int_distribution<std::int64_t> d(static_cast<std::int64_t>(lo * 1e6), static_cast<std::int64_t>(hi * 1e6));
    return static_cast<double>(d(rng)) / 1e6;
}

inline const std::vector<std::string>& labels() {
    static const std::vector<std::string> l{"person", "car", "animal", "package"};
    return l;
}

inline Detection random_detection(std::mt19937_64& rng, const std::vector<std::string>& label_set = labels()) {
    std::uniform_int_distribution<std::size_t> pick(0, label_set.size() - 1);
    std::uniform_int_distribution<int> coord(0, 40), size(1, 20), coin(0, 2);
    Detection d;
    d.label = label_set[pick(rng)];
    d.confidence = six_digit_real(rng, 0.0, 1.0);
    d.bbox = {coord(rng), coord(rng), size(rng), size(rng)};
    if (d.label == "person") {
        int c = coin(rng);
        if (c == 0) d.identity = Identity{false, std::nullopt};
        else if (c == 1) d.identity = Identity{true, std::string(rng() % 2 ? "alice" : "bob")};
    }
    return d;
}

inline DetectionEvent random_event(std::mt19937_64& rng, const std::vector<std::string>& devices = {"dev-a", "dev-b", "dev-c"},
                                   TimestampMs t0 = 1'700'000'000'000, TimestampMs span_ms = 86'400'000) {
    std::uniform_int_distribution<std::size_t> dev(0, devices.size() - 1), ndet(0, 3);
    std::uniform_int_distribution<TimestampMs> t(t0, t0 + span_ms);
    DetectionEvent e;
    e.event_id = uuid_from(rng);
    e.device_id = devices[dev(rng)];
    e.captured_at_ms = t(rng);
    e.detector_backend = rng() % 2 ? "palette-local" : "remote-a";
    e.motion_score = six_digit_real(rng, 0.0, 255.0);
    if (rng() % 2) e.snapshot_ref = std::string(64, 'a');
    auto n = ndet(rng);
    for (std::size_t i = 0; i < n; ++i) e.detections.push_back(random_detection(rng));
    return e;
}

}  // namespace porch::testing
