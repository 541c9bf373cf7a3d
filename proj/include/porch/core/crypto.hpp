#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace porch::crypto {

using Bytes = std::vector<std::uint8_t>;

std::string to_hex(std::span<const std::uint8_t> bytes);
/// Throws std::invalid_argument on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

Bytes random_bytes(std::size_t n);
std::string random_uuid();

std::string sha256_hex(std::string_view data);
std::string hmac_sha256_hex(std::span<const std::uint8_t> key, std::string_view message);

/// Constant-time comparison of equal-length strings.
bool equal_ct(std::string_view a, std::string_view b) noexcept;

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws std::invalid_argument on malformed input.
Bytes base64_decode(std::string_view text);

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept;

inline std::span<const std::uint8_t> as_bytes(std::string_view s) noexcept {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace porch::crypto
