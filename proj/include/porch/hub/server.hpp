#pragma once

#include "porch/core/error.hpp"
#include "porch/hub/commands.hpp"
#include "porch/hub/config.hpp"
#include "porch/hub/devices.hpp"
#include "porch/hub/event_store.hpp"
#include "porch/hub/notify.hpp"
#include "porch/hub/stream.hpp"
#include "porch/intent/intent.hpp"

#include <atomic>
#include <condition_variable>
#include <memory>
#include <thread>

namespace porch::hub {

/// HTTP status for an error code.
int http_status(ErrorCode code) noexcept;
/// {"error": {"code": ..., "message": ...}}
Json error_body(ErrorCode code, std::string_view message);

/// The hub process: every service plus the /v1 HTTP API.
class HubServer {
public:
    explicit HubServer(HubConfig config, std::shared_ptr<const Clock> clock = std::make_shared<SystemClock>());
    ~HubServer();

    HubServer(const HubServer&) = delete;
    HubServer& operator=(const HubServer&) = delete;

    /// Binds and starts serving in the background. Returns the bound port.
    int start();
    /// Blocks until stop().
    void wait();
    void stop();

    int port() const noexcept { return port_; }
    /// http://host:port
    std::string url() const;

    const HubConfig& config() const noexcept { return config_; }
    DeviceRegistry& devices() noexcept { return *devices_; }
    EventStore& store() noexcept { return *store_; }
    NotifyService& notify() noexcept { return *notify_; }
    StreamService& streams() noexcept { return *streams_; }
    CommandQueues& commands() noexcept { return commands_; }
    const intent::Grammar& grammar() const noexcept { return grammar_; }

private:
    struct Http;

    void maintenance_loop();

    HubConfig config_;
    std::shared_ptr<const Clock> clock_;
    std::unique_ptr<Journal> journal_;
    std::unique_ptr<BlobStore> blobs_;
    std::unique_ptr<DeviceRegistry> devices_;
    std::unique_ptr<EventStore> store_;
    std::unique_ptr<NotifyService> notify_;
    CommandQueues commands_;
    std::unique_ptr<StreamService> streams_;
    intent::Grammar grammar_;

    std::unique_ptr<Http> http_;
    std::thread listen_thread_;
    std::thread maintenance_thread_;
    std::mutex mutex_;
    std::condition_variable cv_;
    bool stopping_ = false;
    int port_ = 0;
};

}  // namespace porch::hub
