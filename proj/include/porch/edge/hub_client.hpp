#pragma once

#include "porch/core/commands.hpp"
#include "porch/edge/outbox.hpp"
#include "porch/net/http.hpp"

#include <optional>
#include <vector>

namespace porch::edge {

enum class SegmentPost { Accepted, Gone, Failed };

/// Device side of the hub API. Every call is signed with the device secret.
class HubClient final : public EventSink {
public:
    HubClient(std::string hub_url, std::string device_id, crypto::Bytes secret,
              std::shared_ptr<const Clock> clock = std::make_shared<SystemClock>(),
              std::chrono::milliseconds timeout = std::chrono::seconds(5));

    UploadResult upload(const DetectionEvent& event, const std::optional<std::string>& snapshot) override;

    /// Long-polls the command queue. nullopt on transport or auth failure.
    std::optional<std::vector<EdgeCommand>> poll_commands(int wait_s);

    SegmentPost post_segment(const std::string& session_id, std::uint64_t seq, const std::string& bytes);

    /// Status of the most recent call, for diagnostics.
    int last_status() const noexcept { return last_status_.load(); }
    const net::SignedClient& http() const noexcept { return client_; }

private:
    net::SignedClient client_;
    std::atomic<int> last_status_{0};
};

/// Body and content type for POST /v1/events.
struct IngestBody {
    std::string body;
    std::string content_type;
};
IngestBody ingest_body(const DetectionEvent& event, const std::optional<std::string>& snapshot);

UploadResult classify_upload_status(int status) noexcept;

}  // namespace porch::edge
