#pragma once

#include "porch/detectors/backend.hpp"

#include <chrono>
#include <memory>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace porch::detectors {

inline constexpr std::chrono::milliseconds kRemoteTimeout{2000};

/// {"width":W,"height":H,"pixels_b64":"..."}
Json detect_request_json(const Frame& frame);
/// Parses a {"detections":[...]} response and validates every detection
/// against the frame. Throws ProtocolError.
std::vector<Detection> parse_detect_response(std::string_view body, const Frame& frame);
/// Inverse of detect_request_json. Throws ProtocolError.
Frame frame_from_request_json(const Json& j);

/// POST {endpoint}/detect. Throws Unreachable, Timeout or ProtocolError.
std::vector<Detection> remote_detect(const std::string& endpoint, const Frame& frame,
                                     std::chrono::milliseconds timeout = kRemoteTimeout);

class RemoteBackend final : public DetectorBackend {
public:
    explicit RemoteBackend(std::string endpoint, std::chrono::milliseconds timeout = kRemoteTimeout)
        : endpoint_(std::move(endpoint)), timeout_(timeout) {}

    std::vector<Detection> detect(const Frame& frame) override { return remote_detect(endpoint_, frame, timeout_); }
    /// GET {endpoint}/health answers 200.
    bool healthy() override;

private:
    std::string endpoint_;
    std::chrono::milliseconds timeout_;
};

/// Serves any backend over the detector wire protocol.
class DetectorServer {
public:
    explicit DetectorServer(std::shared_ptr<DetectorBackend> backend);
    ~DetectorServer();

    /// Binds (port 0 picks a free port) and serves on a background thread.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Blocks serving on the calling thread.
    void listen(const std::string& host, int port);
    void stop();

    int port() const noexcept { return port_; }
    std::string endpoint() const;

private:
    std::shared_ptr<DetectorBackend> backend_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::string host_;
    int port_ = 0;
};

}  // namespace porch::detectors
