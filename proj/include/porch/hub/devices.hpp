#pragma once

#include "porch/core/clock.hpp"
#include "porch/core/crypto.hpp"
#include "porch/core/signing.hpp"
#include "porch/hub/journal.hpp"

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <vector>

namespace porch::hub {

struct DeviceRecord {
    std::string device_id;
    crypto::Bytes secret;
    TimestampMs enrolled_at_ms = 0;
    bool revoked = false;
    std::string display_name;
};

struct Enrollment {
    std::string device_id;
    std::string secret_hex;
};

/// Public view; never includes the secret.
Json to_json(const DeviceRecord& d);

class DeviceRegistry {
public:
    DeviceRegistry(Journal* journal, std::shared_ptr<const Clock> clock);

    /// Applies "device" and "revoke" journal records; ignores others.
    void replay(const Json& record);

    Enrollment enroll(const std::string& display_name);
    /// Throws NotFound.
    void revoke(const std::string& device_id);

    std::optional<DeviceRecord> get(const std::string& device_id) const;
    std::vector<DeviceRecord> list() const;
    bool active(const std::string& device_id) const;

    /// Verifies a device-signed request. Throws BadSignature (also for an
    /// unknown device), ClockSkew, Revoked or ReplayedNonce.
    std::string authenticate(const SignedRequest& request, std::string_view method, std::string_view path,
                             std::string_view body);

private:
    Journal* journal_;
    std::shared_ptr<const Clock> clock_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, DeviceRecord> devices_;
    NonceWindow nonces_;
};

}  // namespace porch::hub
