#pragma once

#include "porch/core/crypto.hpp"
#include "porch/detectors/registry.hpp"
#include "porch/synthcam/motion.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace porch::edge {

struct EdgeConfig {
    std::string device_id;
    std::string device_secret;  // 64 hex chars
    std::string hub_url = "http://127.0.0.1:8080";
    std::filesystem::path scene;
    TimestampMs interval_ms = 1000;
    synthcam::MotionGateConfig gate;
    /// Empty: a single local palette backend.
    std::filesystem::path registry;
    detectors::SelectionPolicy policy;
    std::filesystem::path outbox = "porch-outbox.bin";
    std::size_t outbox_capacity = 1024;
    /// Create events for sampled frames with nothing recognizable.
    bool emit_empty_events = false;
    /// Stop after this much capture time; unset runs until stopped.
    std::optional<TimestampMs> run_for_ms;
    TimestampMs poll_wait_s = 25;
    TimestampMs segment_ms = 2000;

    /// Throws BadConfig naming the offending key.
    void validate() const;
    crypto::Bytes secret_bytes() const;
};

/// Reads the TOML config. Relative paths resolve against the file's directory.
EdgeConfig load_edge_config(const std::filesystem::path& path);
EdgeConfig parse_edge_config(std::string_view toml_text, const std::filesystem::path& base_dir = {});

}  // namespace porch::edge
