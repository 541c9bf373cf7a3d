#include "porch/hub/devices.hpp"

#include "porch/core/error.hpp"

#include <spdlog/spdlog.h>

#include <mutex>

namespace porch::hub {

Json to_json(const DeviceRecord& d) {
    return {{"device_id", d.device_id},
            {"display_name", d.display_name},
            {"enrolled_at_ms", d.enrolled_at_ms},
            {"status", d.revoked ? "revoked" : "active"}};
}

DeviceRegistry::DeviceRegistry(Journal* journal, std::shared_ptr<const Clock> clock)
    : journal_(journal), clock_(std::move(clock)) {}

void DeviceRegistry::replay(const Json& r) {
    const auto& type = r.at("type").get_ref<const std::string&>();
    std::unique_lock lock(mutex_);
    if (type == "device") {
        DeviceRecord d;
        d.device_id = r.at("device_id").get<std::string>();
        d.secret = crypto::from_hex(r.at("secret").get<std::string>());
        d.enrolled_at_ms = r.at("enrolled_at_ms").get<TimestampMs>();
        d.display_name = r.at("display_name").get<std::string>();
        devices_[d.device_id] = std::move(d);
    } else if (type == "revoke") {
        auto it = devices_.find(r.at("device_id").get<std::string>());
        if (it != devices_.end()) it->second.revoked = true;
    }
}

Enrollment DeviceRegistry::enroll(const std::string& display_name) {
    DeviceRecord d;
    d.device_id = crypto::random_uuid();
    d.secret = crypto::random_bytes(kDeviceSecretBytes);
    d.enrolled_at_ms = clock_->now_ms();
    d.display_name = display_name;
    Enrollment out{d.device_id, crypto::to_hex(d.secret)};
    std::unique_lock lock(mutex_);
    if (journal_)
        journal_->append({{"type", "device"},
                          {"device_id", d.device_id},
                          {"secret", out.secret_hex},
                          {"enrolled_at_ms", d.enrolled_at_ms},
                          {"display_name", d.display_name}});
    devices_[d.device_id] = std::move(d);
    spdlog::info("enrolled device {} ({})", out.device_id, display_name);
    return out;
}

void DeviceRegistry::revoke(const std::string& device_id) {
    std::unique_lock lock(mutex_);
    auto it = devices_.find(device_id);
    if (it == devices_.end()) throw Error(ErrorCode::NotFound, "device", device_id);
    if (it->second.revoked) return;
    if (journal_) journal_->append({{"type", "revoke"}, {"device_id", device_id}});
    it->second.revoked = true;
}

std::optional<DeviceRecord> DeviceRegistry::get(const std::string& device_id) const {
    std::shared_lock lock(mutex_);
    auto it = devices_.find(device_id);
    if (it == devices_.end()) return std::nullopt;
    return it->second;
}

std::vector<DeviceRecord> DeviceRegistry::list() const {
    std::shared_lock lock(mutex_);
    std::vector<DeviceRecord> out;
    for (const auto& [_, d] : devices_) out.push_back(d);
    return out;
}

bool DeviceRegistry::active(const std::string& device_id) const {
    auto d = get(device_id);
    return d && !d->revoked;
}

std::string DeviceRegistry::authenticate(const SignedRequest& request, std::string_view method, std::string_view path,
                                         std::string_view body) {
    auto d = get(request.device_id);
    if (!d) throw Error(ErrorCode::BadSignature, "device", "unknown device");
    const auto now = clock_->now_ms();
    // Nonces are only spent once the device is known to be in good standing.
    verify_signature(d->secret, request, method, path, body, now);
    if (d->revoked) throw Error(ErrorCode::Revoked, "device", request.device_id);
    if (!nonces_.remember(request.device_id, request.nonce, now)) throw Error(ErrorCode::ReplayedNonce, "nonce");
    return d->device_id;
}

}  // namespace porch::hub
