#pragma once

#include "porch/core/crypto.hpp"
#include "porch/core/model.hpp"

#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_set>

namespace porch {

inline constexpr TimestampMs kMaxClockSkewMs = 300'000;
inline constexpr TimestampMs kReplayWindowMs = 600'000;
inline constexpr std::size_t kDeviceSecretBytes = 32;
inline constexpr std::size_t kNonceBytes = 16;

inline constexpr std::string_view kHeaderDeviceId = "X-Device-Id";
inline constexpr std::string_view kHeaderTimestamp = "X-Timestamp";
inline constexpr std::string_view kHeaderNonce = "X-Nonce";
inline constexpr std::string_view kHeaderSignature = "X-Signature";

struct SignedRequest {
    std::string device_id;
    TimestampMs timestamp_ms = 0;
    std::string nonce;      // 32 hex chars
    std::string signature;  // 64 hex chars

    bool operator==(const SignedRequest&) const = default;
};

/// method \n path \n hex(SHA-256(body)) \n timestamp_ms \n nonce
std::string canonical_request(std::string_view method, std::string_view path, std::string_view body,
                              TimestampMs timestamp_ms, std::string_view nonce);

SignedRequest sign_request(std::string_view device_id, std::span<const std::uint8_t> secret,
                           std::string_view method, std::string_view path, std::string_view body,
                           TimestampMs timestamp_ms, std::string_view nonce);

/// Fresh 16-byte nonce, hex encoded.
std::string make_nonce();

/// Remembers accepted (device, nonce) pairs for kReplayWindowMs, bucketed by
/// acceptance time so expiry is a cheap prefix erase. Thread-safe.
class NonceWindow {
public:
    explicit NonceWindow(TimestampMs window_ms = kReplayWindowMs, TimestampMs bucket_ms = 10'000);

    /// Returns false if the pair was already seen inside the window.
    bool remember(std::string_view device_id, std::string_view nonce, TimestampMs now_ms);
    std::size_t size() const;

private:
    void prune(TimestampMs now_ms);

    TimestampMs window_ms_;
    TimestampMs bucket_ms_;
    mutable std::mutex mutex_;
    std::map<TimestampMs, std::unordered_set<std::string>> buckets_;
    std::unordered_set<std::string> seen_;
};

/// Checks signature, then clock skew, then (when a window is given) nonce
/// reuse. Returns the device id on success; throws BadSignature, ClockSkew or
/// ReplayedNonce.
std::string verify_signature(std::span<const std::uint8_t> secret, const SignedRequest& request,
                             std::string_view method, std::string_view path, std::string_view body,
                             TimestampMs now_ms, NonceWindow* nonces = nullptr);

}  // namespace porch
