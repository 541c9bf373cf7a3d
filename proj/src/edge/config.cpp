#include "porch/edge/config.hpp"

#include "porch/core/error.hpp"
#include "porch/core/signing.hpp"

#include <toml.hpp>

#include <fstream>
#include <sstream>

namespace porch::edge {

void EdgeConfig::validate() const {
    if (device_id.empty()) throw Error(ErrorCode::BadConfig, "device_id");
    try {
        if (crypto::from_hex(device_secret).size() != kDeviceSecretBytes) throw Error(ErrorCode::BadConfig, "device_secret");
    } catch (const std::invalid_argument&) {
        throw Error(ErrorCode::BadConfig, "device_secret");
    }
    if (hub_url.empty()) throw Error(ErrorCode::BadConfig, "hub_url");
    if (interval_ms <= 0) throw Error(ErrorCode::BadConfig, "interval_ms");
    if (!(gate.threshold >= 0.0)) throw Error(ErrorCode::BadConfig, "gate.threshold");
    if (!(policy.min_accuracy >= 0.0 && policy.min_accuracy <= 1.0)) throw Error(ErrorCode::BadConfig, "policy.min_accuracy");
    if (outbox_capacity == 0) throw Error(ErrorCode::BadConfig, "outbox_capacity");
    if (run_for_ms && *run_for_ms <= 0) throw Error(ErrorCode::BadConfig, "run_for_ms");
    if (poll_wait_s <= 0) throw Error(ErrorCode::BadConfig, "poll_wait_s");
    if (segment_ms <= 0) throw Error(ErrorCode::BadConfig, "segment_ms");
}

crypto::Bytes EdgeConfig::secret_bytes() const {
    return crypto::from_hex(device_secret);
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) return base / path;
    return path;
}

}  // namespace

EdgeConfig parse_edge_config(std::string_view toml_text, const std::filesystem::path& base_dir) {
    toml::table t;
    try {
        t = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        throw Error(ErrorCode::BadConfig, "toml", std::string(e.description()));
    }
    EdgeConfig c;
    c.device_id = t["device_id"].value_or(std::string());
    c.device_secret = t["device_secret"].value_or(std::string());
    c.hub_url = t["hub_url"].value_or(c.hub_url);
    if (auto s = t["scene"].value<std::string>()) c.scene = resolve(base_dir, *s);
    c.interval_ms = t["interval_ms"].value_or(c.interval_ms);
    if (auto s = t["registry"].value<std::string>()) c.registry = resolve(base_dir, *s);
    if (auto s = t["outbox"].value<std::string>()) c.outbox = resolve(base_dir, *s);
    c.outbox_capacity = static_cast<std::size_t>(t["outbox_capacity"].value_or(static_cast<std::int64_t>(c.outbox_capacity)));
    c.emit_empty_events = t["emit_empty_events"].value_or(c.emit_empty_events);
    if (auto v = t["run_for_ms"].value<std::int64_t>()) c.run_for_ms = *v;
    c.poll_wait_s = t["poll_wait_s"].value_or(c.poll_wait_s);
    c.segment_ms = t["segment_ms"].value_or(c.segment_ms);
    c.gate.threshold = t["gate"]["threshold"].value_or(c.gate.threshold);
    c.gate.warmup_frames = static_cast<std::size_t>(
        t["gate"]["warmup_frames"].value_or(static_cast<std::int64_t>(c.gate.warmup_frames)));
    c.policy.min_accuracy = t["policy"]["min_accuracy"].value_or(c.policy.min_accuracy);
    return c;
}

EdgeConfig load_edge_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::BadConfig, "config", "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_edge_config(ss.str(), path.parent_path());
}

}  // namespace porch::edge
