#include "porch/core/error.hpp"
#include "porch/synthcam/motion.hpp"
#include "porch/synthcam/scene.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace porch;
using namespace porch::synthcam;

namespace {

SceneScript red_rect_scene() {
    SceneScript s;
    s.width = 64;
    s.height = 48;
    s.background = {32, 32, 32};
    s.timeline = {{0, {{{255, 0, 0}, {8, 8, 32, 24}}}}};
    return s;
}

Frame solid(int w, int h, std::uint8_t v, TimestampMs ts = 0) {
    Frame f(w, h, ts);
    std::fill(f.pixels.begin(), f.pixels.end(), v);
    return f;
}

}  // namespace

TEST_CASE("empty timeline renders uniform background") {
    SceneScript s;
    s.background = {10, 20, 30};
    for (TimestampMs t : {0, 1234, 99999}) {
        auto f = render_frame(s, t, 1);
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x) REQUIRE(f.at(x, y) == Rgb{10, 20, 30});
    }
}

TEST_CASE("keyframe boundary uses the latest keyframe at or before t") {
    SceneScript s;
    s.timeline = {{0, {{{0, 0, 255}, {0, 0, 4, 4}}}}, {5000, {{{0, 255, 0}, {10, 10, 4, 4}}}}};
    auto before = render_frame(s, 4999, 0);
    CHECK(before.at(0, 0) == Rgb{0, 0, 255});
    CHECK(before.at(10, 10) == s.background);
    auto at = render_frame(s, 5000, 1);
    CHECK(at.at(0, 0) == s.background);
    CHECK(at.at(10, 10) == Rgb{0, 255, 0});

    SceneScript late = s;
    late.timeline[0].at_ms = 100;
    CHECK(render_frame(late, 99, 0).at(0, 0) == late.background);
}

TEST_CASE("red rectangle occupies exactly its tight box") {
    auto f = render_frame(red_rect_scene(), 0, 0);
    int red = 0, red_inside = 0;
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 64; ++x)
            if (f.at(x, y) == Rgb{255, 0, 0}) {
                ++red;
                if (x >= 8 && x < 40 && y >= 8 && y < 32) ++red_inside;
            }
    CHECK(red == 768);
    CHECK(red_inside == 768);
}

TEST_CASE("later objects overwrite earlier ones") {
    SceneScript s;
    s.timeline = {{0, {{{0, 0, 255}, {0, 0, 10, 10}}, {{0, 255, 0}, {5, 5, 10, 10}}}}};
    auto f = render_frame(s, 0, 0);
    CHECK(f.at(7, 7) == Rgb{0, 255, 0});
    CHECK(f.at(2, 2) == Rgb{0, 0, 255});
}

TEST_CASE("render is pure") {
    auto s = red_rect_scene();
    CHECK(render_frame(s, 700, 3) == render_frame(s, 700, 3));
}

TEST_CASE("scene validation") {
    auto s = red_rect_scene();
    std::vector<Rgb> palette{{255, 0, 0}};
    CHECK_NOTHROW(validate(s, palette));
    auto bad = s;
    bad.timeline[0].objects[0].rect = {40, 30, 32, 24};
    CHECK_THROWS_AS(validate(bad), Error);
    bad = s;
    bad.timeline.push_back({0, {}});
    CHECK_THROWS_AS(validate(bad), Error);
    bad = s;
    bad.timeline[0].objects[0].color = {1, 2, 3};
    CHECK_THROWS_AS(validate(bad, palette), Error);
    bad.timeline[0].objects[0].color = {77, 77, 77};
    CHECK_NOTHROW(validate(bad, palette));
}

TEST_CASE("scene JSON round trip") {
    auto s = red_rect_scene();
    s.duration_ms = 12000;
    CHECK(scene_from_json(to_json(s)) == s);
    CHECK_THROWS_AS(scene_from_json(Json{{"width", 4}}), Error);
}

TEST_CASE("mad examples") {
    auto a = solid(4, 4, 0), b = solid(4, 4, 255);
    CHECK(mad(a, a) == 0.0);
    CHECK(mad(a, b) == 255.0);
    Frame p(2, 2), q(2, 2);
    q.pixels[0] = 120;
    CHECK(mad(p, q) == 10.0);
    CHECK_THROWS_AS(mad(Frame(2, 2), Frame(2, 3)), Error);
}

TEST_CASE("mad properties") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        Frame a(5, 4), b(5, 4);
        for (auto& px : a.pixels) px = static_cast<std::uint8_t>(rng());
        for (auto& px : b.pixels) px = static_cast<std::uint8_t>(rng());
        auto m = mad(a, b);
        CHECK(m == mad(b, a));
        CHECK(m >= 0.0);
        CHECK(m <= 255.0);
        CHECK(mad(a, a) == 0.0);
    }
}

TEST_CASE("gate is strict and honours warmup") {
    Frame p(2, 2), q(2, 2);
    q.pixels[0] = 120;
    CHECK(gate(p, q, {8.0, 1}));
    CHECK_FALSE(gate(p, q, {10.0, 1}));
    CHECK(gate(solid(2, 2, 0), solid(2, 2, 255), {}));
    CHECK_FALSE(gate(p, q, {8.0, 5}, 4));

    MotionGate g({8.0, 1});
    auto s = red_rect_scene();
    CHECK_FALSE(g.observe(render_frame(s, 0, 0)).open);
    for (int i = 1; i < 100; ++i) CHECK_FALSE(g.observe(render_frame(s, i * 100, i)).open);
}

TEST_CASE("stateful gate opens on appearance") {
    SceneScript s;
    s.timeline = {{0, {}}, {500, {{{200, 0, 0}, {8, 8, 32, 24}}}}};
    MotionGate g;
    int opens = 0;
    double score = 0;
    for (int i = 0; i < 10; ++i) {
        auto r = g.observe(render_frame(s, i * 100, i));
        if (r.open) ++opens, score = r.mad;
    }
    CHECK(opens == 1);
    // 768 pixels each differing by (200-32)+32+32 = 232 over 9216 samples.
    CHECK(score == doctest::Approx(768.0 * 232.0 / 9216.0));
}

namespace {

std::vector<GatedFrame> schedule(TimestampMs total_ms, TimestampMs frame_ms, TimestampMs motion_from, TimestampMs motion_to) {
    std::vector<GatedFrame> out;
    for (TimestampMs t = 0; t < total_ms; t += frame_ms) {
        Frame f(1, 1, t, static_cast<std::uint64_t>(t / frame_ms));
        out.push_back({std::move(f), t >= motion_from && t < motion_to});
    }
    return out;
}

}  // namespace

TEST_CASE("sampler schedules") {
    // 3.5 s of motion at 10 fps: frames 0..3400 are active -> 0, 1000, 2000, 3000.
    auto out = sample(schedule(6000, 100, 0, 3500), 1000);
    REQUIRE(out.size() == 4);
    CHECK(out[0].ts_ms == 0);
    CHECK(out[3].ts_ms == 3000);
    CHECK(sample(schedule(6000, 100, 0, 0), 1000).empty());
    CHECK(sample(schedule(6000, 100, 2000, 2100), 1000).size() == 1);
    CHECK_THROWS_AS(Sampler(0), Error);
}

TEST_CASE("sampler rate bound over continuous motion windows") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        TimestampMs interval = 100 + static_cast<TimestampMs>(rng() % 1900);
        TimestampMs frame_ms = 10 + static_cast<TimestampMs>(rng() % 200);
        auto stream = schedule(20'000, frame_ms, 0, 20'000);
        auto out = sample(stream, interval);
        for (std::size_t i = 0; i < out.size(); ++i)
            for (std::size_t j = i; j < out.size(); ++j) {
                auto w = out[j].ts_ms - out[i].ts_ms;
                auto bound = static_cast<std::size_t>(std::ceil(double(w) / double(interval))) + 1;
                REQUIRE(j - i + 1 <= bound);
            }
    }
}
