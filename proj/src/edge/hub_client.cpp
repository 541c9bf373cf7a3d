#include "porch/edge/hub_client.hpp"

#include "porch/core/codec.hpp"
#include "porch/core/error.hpp"

#include <spdlog/spdlog.h>

namespace porch::edge {

IngestBody ingest_body(const DetectionEvent& event, const std::optional<std::string>& snapshot) {
    std::vector<net::MultipartPart> parts{{"event", "application/json", encode_event(event)}};
    if (snapshot) parts.push_back({"snapshot", "application/octet-stream", *snapshot});
    auto boundary = "porch-" + crypto::to_hex(crypto::random_bytes(12));
    return {net::build_multipart(parts, boundary), "multipart/mixed; boundary=" + boundary};
}

UploadResult classify_upload_status(int status) noexcept {
    if (status == 200 || status == 201) return UploadResult::Stored;
    if (status == 409) return UploadResult::Duplicate;
    // Auth failures may be clock skew or a pending re-enrollment; keep the event.
    if (status == 0 || status == 401 || status == 408 || status == 429 || status >= 500) return UploadResult::Retry;
    if (status >= 400) return UploadResult::Rejected;
    return UploadResult::Retry;
}

HubClient::HubClient(std::string hub_url, std::string device_id, crypto::Bytes secret,
                     std::shared_ptr<const Clock> clock, std::chrono::milliseconds timeout)
    : client_(std::move(hub_url), std::move(device_id), std::move(secret), std::move(clock), timeout) {}

UploadResult HubClient::upload(const DetectionEvent& event, const std::optional<std::string>& snapshot) {
    auto body = ingest_body(event, snapshot);
    auto res = client_.signed_request("POST", "/v1/events", body.body, body.content_type);
    last_status_ = res.status;
    auto result = classify_upload_status(res.status);
    if (result == UploadResult::Retry)
        spdlog::debug("upload of {} deferred: status {} {}", event.event_id, res.status, res.error);
    else if (result == UploadResult::Rejected)
        spdlog::warn("upload of {} rejected: {} {}", event.event_id, res.status, res.body);
    return result;
}

std::optional<std::vector<EdgeCommand>> HubClient::poll_commands(int wait_s) {
    auto target = "/v1/devices/" + client_.device_id() + "/commands?wait=" + std::to_string(wait_s);
    auto res = client_.signed_request("GET", target, {}, {}, std::chrono::seconds(wait_s + 10));
    last_status_ = res.status;
    if (res.status != 200) {
        spdlog::debug("command poll failed: {} {}", res.status, res.error.empty() ? res.body : res.error);
        return std::nullopt;
    }
    try {
        auto j = Json::parse(res.body);
        std::vector<EdgeCommand> out;
        for (const auto& c : j.at("commands")) out.push_back(command_from_json(c));
        return out;
    } catch (const std::exception& e) {
        spdlog::warn("bad command response: {}", e.what());
        return std::nullopt;
    }
}

SegmentPost HubClient::post_segment(const std::string& session_id, std::uint64_t seq, const std::string& bytes) {
    auto target = "/v1/streams/" + session_id + "/segments/" + std::to_string(seq);
    auto res = client_.signed_request("POST", target, bytes, "application/octet-stream");
    last_status_ = res.status;
    if (res.status == 200 || res.status == 201) return SegmentPost::Accepted;
    // 404: the hub restarted or forgot the session; either way it is over.
    if (res.status == 410 || res.status == 404) return SegmentPost::Gone;
    // 409: an earlier attempt landed but its response was lost.
    if (res.status == 409) return SegmentPost::Accepted;
    return SegmentPost::Failed;
}

}  // namespace porch::edge
