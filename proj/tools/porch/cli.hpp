#pragma once

#include "porch/core/codec.hpp"
#include "porch/core/error.hpp"
#include "porch/net/http.hpp"

#include <CLI11.hpp>

#include <pthread.h>

#include <functional>
#include <optional>
#include <string>
#include <thread>

namespace porch::cli {

/// Process exit codes.
enum Exit : int {
    kOk = 0,
    kUsage = 1,
    kConnection = 2,
    kAuth = 3,
    kNotFound = 4,
    kFailure = 5,
};

struct Output {
    bool json = false;

    /// One JSON document per line in --json mode.
    void line(const Json& j) const;
    void text(const std::string& s) const;
    /// Reports a failure and returns the exit code for it.
    int fail(int code, const std::string& error_code, const std::string& message) const;
    /// Maps an unsuccessful HTTP result to an exit code, printing the error.
    int fail_http(const net::HttpResult& r) const;
};

/// Where a client command finds the hub. Flags beat environment
/// (PORCH_HUB, PORCH_USER_TOKEN, PORCH_ADMIN_TOKEN), which beats the file.
struct ClientOptions {
    std::string config;
    std::string hub;
    std::string user_token;
    std::string admin_token;
};

struct ClientSettings {
    std::string hub_url = "http://127.0.0.1:8080";
    std::string user_token;
    std::string admin_token;
};

ClientSettings resolve_settings(const ClientOptions& opts);
void add_client_options(CLI::App* app, ClientOptions& opts);

int exit_code_for_status(int status) noexcept;

void register_role_commands(CLI::App& app, Output& out, int& exit_code);
void register_client_commands(CLI::App& app, Output& out, int& exit_code);

/// Blocks SIGINT and SIGTERM for the calling thread and its future children
/// and waits on them from a watcher thread that calls `on_signal`.
class SignalWatcher {
public:
    explicit SignalWatcher(std::function<void()> on_signal);
    ~SignalWatcher();

private:
    std::thread thread_;
    pthread_t handle_{};
};

}  // namespace porch::cli
