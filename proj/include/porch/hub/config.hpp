#pragma once

#include "porch/core/model.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace porch::hub {

struct HubConfig {
    std::string listen = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::filesystem::path data_dir = "porch-hub-data";
    std::string admin_token;
    std::string user_token;
    /// Fixed offset of local time from UTC, used to find "today".
    int utc_offset_minutes = 0;
    /// Empty: the built-in grammar.
    std::filesystem::path grammar;
    std::optional<std::filesystem::path> dashboard_dir;
    /// fsync every journal append.
    bool durable = true;
    /// Oldest events are evicted past this many. 0 keeps everything.
    std::size_t max_events = 0;
    TimestampMs notification_ttl_ms = 86'400'000;
    TimestampMs expire_interval_ms = 60'000;
    /// Delays before each webhook retry; the first attempt is immediate.
    std::vector<TimestampMs> webhook_retry_ms{1'000, 4'000, 16'000};
    TimestampMs webhook_timeout_ms = 5'000;
    TimestampMs stream_idle_ms = 30'000;
    TimestampMs reap_interval_ms = 1'000;
    int max_wait_s = 60;
    std::size_t http_threads = 64;

    void validate() const;
};

HubConfig parse_hub_config(std::string_view toml_text, const std::filesystem::path& base_dir = {});
HubConfig load_hub_config(const std::filesystem::path& path);

}  // namespace porch::hub
