#include "porch/core/signing.hpp"

#include "porch/core/error.hpp"

#include <algorithm>
#include <cstdlib>

namespace porch {

std::string canonical_request(std::string_view method, std::string_view path, std::string_view body,
                              TimestampMs timestamp_ms, std::string_view nonce) {
    std::string s;
    s.reserve(method.size() + path.size() + 64 + 20 + nonce.size() + 4);
    s.append(method).append("\n");
    s.append(path).append("\n");
    s.append(crypto::sha256_hex(body)).append("\n");
    s.append(std::to_string(timestamp_ms)).append("\n");
    s.append(nonce);
    return s;
}

SignedRequest sign_request(std::string_view device_id, std::span<const std::uint8_t> secret,
                           std::string_view method, std::string_view path, std::string_view body,
                           TimestampMs timestamp_ms, std::string_view nonce) {
    SignedRequest out;
    out.device_id = device_id;
    out.timestamp_ms = timestamp_ms;
    out.nonce = nonce;
    out.signature = crypto::hmac_sha256_hex(secret, canonical_request(method, path, body, timestamp_ms, nonce));
    return out;
}

std::string make_nonce() {
    return crypto::to_hex(crypto::random_bytes(kNonceBytes));
}

NonceWindow::NonceWindow(TimestampMs window_ms, TimestampMs bucket_ms)
    : window_ms_(window_ms), bucket_ms_(std::max<TimestampMs>(1, bucket_ms)) {}

void NonceWindow::prune(TimestampMs now_ms) {
    // A bucket may only go once its newest possible member is older than the window.
    auto cutoff = now_ms - window_ms_ - bucket_ms_;
    while (!buckets_.empty() && buckets_.begin()->first < cutoff) {
        for (const auto& key : buckets_.begin()->second) seen_.erase(key);
        buckets_.erase(buckets_.begin());
    }
}

bool NonceWindow::remember(std::string_view device_id, std::string_view nonce, TimestampMs now_ms) {
    std::string key;
    key.reserve(device_id.size() + 1 + nonce.size());
    key.append(device_id).append("/").append(nonce);
    std::lock_guard lock(mutex_);
    prune(now_ms);
    if (!seen_.insert(key).second) return false;
    auto bucket = now_ms - ((now_ms % bucket_ms_) + bucket_ms_) % bucket_ms_;
    buckets_[bucket].insert(std::move(key));
    return true;
}

std::size_t NonceWindow::size() const {
    std::lock_guard lock(mutex_);
    return seen_.size();
}

static bool is_lower_hex(std::string_view s, std::size_t len) {
    return s.size() == len &&
           std::all_of(s.begin(), s.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

std::string verify_signature(std::span<const std::uint8_t> secret, const SignedRequest& request,
                             std::string_view method, std::string_view path, std::string_view body,
                             TimestampMs now_ms, NonceWindow* nonces) {
    if (!is_lower_hex(request.nonce, 2 * kNonceBytes)) throw Error(ErrorCode::BadSignature, "nonce");
    if (!is_lower_hex(request.signature, 64)) throw Error(ErrorCode::BadSignature, "signature");
    auto expected = crypto::hmac_sha256_hex(
        secret, canonical_request(method, path, body, request.timestamp_ms, request.nonce));
    if (!crypto::equal_ct(expected, request.signature)) throw Error(ErrorCode::BadSignature, "signature");
    if (std::llabs(now_ms - request.timestamp_ms) > kMaxClockSkewMs)
        throw Error(ErrorCode::ClockSkew, "timestamp");
    if (nonces && !nonces->remember(request.device_id, request.nonce, now_ms))
        throw Error(ErrorCode::ReplayedNonce, "nonce");
    return request.device_id;
}

}  // namespace porch
