#include "cli.hpp"

#include <toml.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>

namespace porch::cli {

void Output::line(const Json& j) const { std::cout << j.dump() << '\n' << std::flush; }

void Output::text(const std::string& s) const { std::cout << s << '\n' << std::flush; }

int Output::fail(int code, const std::string& error_code, const std::string& message) const {
    if (json) {
        line({{"error", {{"code", error_code}, {"message", message}}}, {"exit_code", code}});
    } else {
        std::cerr << "error: " << error_code << ": " << message << '\n';
    }
    return code;
}

int Output::fail_http(const net::HttpResult& r) const {
    if (r.transport_failed()) return fail(kConnection, "ConnectionFailed", r.error.empty() ? "hub unreachable" : r.error);
    std::string code = "HttpError";
    std::string message = "status " + std::to_string(r.status);
    auto body = Json::parse(r.body, nullptr, false);
    if (!body.is_discarded() && body.is_object() && body.contains("error") && body["error"].is_object()) {
        code = body["error"].value("code", code);
        message = body["error"].value("message", message);
    }
    return fail(exit_code_for_status(r.status), code, message);
}

int exit_code_for_status(int status) noexcept {
    if (status >= 200 && status < 300) return kOk;
    switch (status) {
        case 0: return kConnection;
        case 401:
        case 403: return kAuth;
        case 404: return kNotFound;
        case 400: return kUsage;
        default: return kFailure;
    }
}

namespace {

std::string env(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

}  // namespace

ClientSettings resolve_settings(const ClientOptions& opts) {
    ClientSettings s;
    if (!opts.config.empty()) {
        toml::table t;
        try {
            t = toml::parse_file(opts.config);
        } catch (const toml::parse_error& e) {
            throw Error(ErrorCode::BadConfig, opts.config, std::string(e.description()));
        }
        auto pick = [&](std::initializer_list<const char*> keys, std::string& dst) {
            for (const char* k : keys) {
                if (auto v = t[k].value<std::string>()) {
                    dst = *v;
                    return;
                }
            }
        };
        pick({"hub_url", "hub"}, s.hub_url);
        pick({"user_token"}, s.user_token);
        pick({"admin_token"}, s.admin_token);
    }
    auto layer = [](const std::string& env_value, const std::string& flag, std::string& dst) {
        if (!env_value.empty()) dst = env_value;
        if (!flag.empty()) dst = flag;
    };
    layer(env("PORCH_HUB"), opts.hub, s.hub_url);
    layer(env("PORCH_USER_TOKEN"), opts.user_token, s.user_token);
    layer(env("PORCH_ADMIN_TOKEN"), opts.admin_token, s.admin_token);
    return s;
}

void add_client_options(CLI::App* app, ClientOptions& opts) {
    app->add_option("--config", opts.config, "Client TOML file with hub_url, user_token, admin_token");
    app->add_option("--hub", opts.hub, "Hub base URL (env PORCH_HUB)");
    app->add_option("--user-token", opts.user_token, "User bearer token (env PORCH_USER_TOKEN)");
    app->add_option("--admin-token", opts.admin_token, "Admin bearer token (env PORCH_ADMIN_TOKEN)");
}

SignalWatcher::SignalWatcher(std::function<void()> on_signal) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    sigaddset(&set, SIGUSR1);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    thread_ = std::thread([set, on_signal = std::move(on_signal)] {
        int sig = 0;
        sigwait(&set, &sig);
        // SIGUSR1 only comes from the destructor.
        if (sig != SIGUSR1) on_signal();
    });
    handle_ = thread_.native_handle();
}

SignalWatcher::~SignalWatcher() {
    // A no-op if the watcher already returned after a real signal.
    pthread_kill(handle_, SIGUSR1);
    thread_.join();
}

}  // namespace porch::cli
