#include "porch/hub/config.hpp"

#include "porch/core/error.hpp"

#include <toml.hpp>

#include <fstream>
#include <sstream>

namespace porch::hub {

void HubConfig::validate() const {
    if (port < 0 || port > 65535) throw Error(ErrorCode::BadConfig, "port");
    if (admin_token.empty()) throw Error(ErrorCode::BadConfig, "admin_token");
    if (user_token.empty()) throw Error(ErrorCode::BadConfig, "user_token");
    if (admin_token == user_token) throw Error(ErrorCode::BadConfig, "user_token", "must differ from admin_token");
    if (data_dir.empty()) throw Error(ErrorCode::BadConfig, "data_dir");
    if (utc_offset_minutes < -14 * 60 || utc_offset_minutes > 14 * 60) throw Error(ErrorCode::BadConfig, "utc_offset_minutes");
    if (notification_ttl_ms <= 0) throw Error(ErrorCode::BadConfig, "notification_ttl_ms");
    if (expire_interval_ms <= 0) throw Error(ErrorCode::BadConfig, "expire_interval_ms");
    for (auto d : webhook_retry_ms)
        if (d < 0) throw Error(ErrorCode::BadConfig, "webhook_retry_ms");
    if (webhook_timeout_ms <= 0) throw Error(ErrorCode::BadConfig, "webhook_timeout_ms");
    if (stream_idle_ms <= 0) throw Error(ErrorCode::BadConfig, "stream_idle_ms");
    if (reap_interval_ms <= 0) throw Error(ErrorCode::BadConfig, "reap_interval_ms");
    if (max_wait_s <= 0) throw Error(ErrorCode::BadConfig, "max_wait_s");
    if (http_threads < 4) throw Error(ErrorCode::BadConfig, "http_threads", "need at least 4");
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) return base / path;
    return path;
}

}  // namespace

HubConfig parse_hub_config(std::string_view toml_text, const std::filesystem::path& base_dir) {
    toml::table t;
    try {
        t = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        throw Error(ErrorCode::BadConfig, "toml", std::string(e.description()));
    }
    HubConfig c;
    c.listen = t["listen"].value_or(c.listen);
    c.port = static_cast<int>(t["port"].value_or(static_cast<std::int64_t>(c.port)));
    if (auto s = t["data_dir"].value<std::string>()) c.data_dir = resolve(base_dir, *s);
    c.admin_token = t["admin_token"].value_or(std::string());
    c.user_token = t["user_token"].value_or(std::string());
    c.utc_offset_minutes = static_cast<int>(t["utc_offset_minutes"].value_or(std::int64_t{0}));
    if (auto s = t["grammar"].value<std::string>()) c.grammar = resolve(base_dir, *s);
    if (auto s = t["dashboard_dir"].value<std::string>()) c.dashboard_dir = resolve(base_dir, *s);
    c.durable = t["durable"].value_or(c.durable);
    if (auto n = t["max_events"].value<std::int64_t>()) {
        if (*n < 0) throw Error(ErrorCode::BadConfig, "max_events", "must not be negative");
        c.max_events = static_cast<std::size_t>(*n);
    }
    c.notification_ttl_ms = t["notification_ttl_ms"].value_or(c.notification_ttl_ms);
    c.expire_interval_ms = t["expire_interval_ms"].value_or(c.expire_interval_ms);
    if (auto* arr = t["webhook_retry_ms"].as_array()) {
        c.webhook_retry_ms.clear();
        for (const auto& v : *arr) {
            auto d = v.value<std::int64_t>();
            if (!d) throw Error(ErrorCode::BadConfig, "webhook_retry_ms", "expected integers");
            c.webhook_retry_ms.push_back(*d);
        }
    }
    c.webhook_timeout_ms = t["webhook_timeout_ms"].value_or(c.webhook_timeout_ms);
    c.stream_idle_ms = t["stream_idle_ms"].value_or(c.stream_idle_ms);
    c.reap_interval_ms = t["reap_interval_ms"].value_or(c.reap_interval_ms);
    c.max_wait_s = static_cast<int>(t["max_wait_s"].value_or(static_cast<std::int64_t>(c.max_wait_s)));
    c.http_threads = static_cast<std::size_t>(t["http_threads"].value_or(static_cast<std::int64_t>(c.http_threads)));
    return c;
}

HubConfig load_hub_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::BadConfig, "config", "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_hub_config(ss.str(), path.parent_path());
}

}  // namespace porch::hub
