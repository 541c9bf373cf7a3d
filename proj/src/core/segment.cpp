#include "porch/core/segment.hpp"

#include "porch/core/error.hpp"

namespace porch {

namespace {

template <typename T>
void put_le(std::string& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out += static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
}

template <typename T>
T get_le(std::string_view s, std::size_t at) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(s[at + i])) << (8 * i);
    return static_cast<T>(v);
}

// Walks the container; calls on_frame(ts, w, h, pixel_offset) per frame.
template <typename OnFrame>
void walk(std::string_view bytes, OnFrame&& on_frame) {
    constexpr std::size_t header = 4 + 1 + 4;
    if (bytes.size() < header || bytes.substr(0, 4) != kSegmentMagic)
        throw Error(ErrorCode::BadContainer, "magic");
    if (static_cast<std::uint8_t>(bytes[4]) != kSegmentVersion) throw Error(ErrorCode::BadContainer, "version");
    auto count = get_le<std::uint32_t>(bytes, 5);
    std::size_t at = header;
    for (std::uint32_t i = 0; i < count; ++i) {
        if (bytes.size() - at < 16) throw Error(ErrorCode::BadContainer, "frame header");
        auto ts = get_le<std::uint64_t>(bytes, at);
        auto w = get_le<std::uint32_t>(bytes, at + 8);
        auto h = get_le<std::uint32_t>(bytes, at + 12);
        at += 16;
        if (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) throw Error(ErrorCode::BadContainer, "dimensions");
        auto n = static_cast<std::size_t>(w) * h * 3;
        if (bytes.size() - at < n) throw Error(ErrorCode::BadContainer, "pixels");
        on_frame(static_cast<std::int64_t>(ts), static_cast<int>(w), static_cast<int>(h), at);
        at += n;
    }
    if (at != bytes.size()) throw Error(ErrorCode::BadContainer, "trailing bytes");
}

}  // namespace

std::string encode_segment(std::span<const Frame> frames) {
    std::string out(kSegmentMagic);
    out += static_cast<char>(kSegmentVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(frames.size()));
    for (const auto& f : frames) {
        f.validate();
        put_le<std::uint64_t>(out, static_cast<std::uint64_t>(f.ts_ms));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.width));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.height));
        out.append(reinterpret_cast<const char*>(f.pixels.data()), f.pixels.size());
    }
    return out;
}

std::vector<Frame> decode_segment(std::string_view bytes) {
    std::vector<Frame> frames;
    walk(bytes, [&](std::int64_t ts, int w, int h, std::size_t offset) {
        Frame f(w, h, ts, frames.size());
        std::copy_n(bytes.data() + offset, f.pixels.size(), reinterpret_cast<char*>(f.pixels.data()));
        frames.push_back(std::move(f));
    });
    return frames;
}

bool is_valid_segment(std::string_view bytes) noexcept {
    try {
        walk(bytes, [](std::int64_t, int, int, std::size_t) {});
        return true;
    } catch (const Error&) {
        return false;
    }
}

std::int64_t segment_duration_ms(std::span<const Frame> frames) noexcept {
    if (frames.size() < 2) return 0;
    auto span = frames.back().ts_ms - frames.front().ts_ms;
    return span + span / static_cast<std::int64_t>(frames.size() - 1);
}

std::int64_t segment_duration_ms(std::string_view bytes) {
    std::int64_t first = 0, last = 0;
    std::size_t count = 0;
    walk(bytes, [&](std::int64_t ts, int, int, std::size_t) {
        if (count++ == 0) first = ts;
        last = ts;
    });
    if (count < 2) return 0;
    return (last - first) + (last - first) / static_cast<std::int64_t>(count - 1);
}

}  // namespace porch
