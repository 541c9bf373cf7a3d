#pragma once

#include "porch/core/model.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace porch {

inline constexpr std::string_view kSegmentMagic = "PSEG";
inline constexpr std::uint8_t kSegmentVersion = 1;

/// "PSEG" | u8 version | u32 frame_count | per frame: u64 ts_ms, u32 width,
/// u32 height, width*height*3 RGB8 bytes. Little-endian throughout.
std::string encode_segment(std::span<const Frame> frames);

/// Throws BadContainer unless every length is self-consistent and the buffer
/// is consumed exactly. Decoded frames get seq = position in the segment.
std::vector<Frame> decode_segment(std::string_view bytes);

/// Cheap structural check without materializing frames.
bool is_valid_segment(std::string_view bytes) noexcept;

/// Playback duration: the span between first and last timestamps plus one
/// average frame interval. Zero for fewer than two frames.
std::int64_t segment_duration_ms(std::span<const Frame> frames) noexcept;
/// Same, read straight from container bytes. Throws BadContainer.
std::int64_t segment_duration_ms(std::string_view bytes);

}  // namespace porch
