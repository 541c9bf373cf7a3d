#pragma once

#include "porch/core/codec.hpp"
#include "porch/core/record_log.hpp"

#include <filesystem>
#include <mutex>
#include <vector>

namespace porch::hub {

/// The hub's single durable log. Each record is one JSON object whose "type"
/// field says which service owns it.
class Journal {
public:
    /// Reads existing records and opens for appending. A torn final record is
    /// dropped; a checksum failure throws OutboxCorrupt rather than silently
    /// discarding stored events.
    Journal(std::filesystem::path path, bool durable = true);

    const std::vector<Json>& recovered() const noexcept { return recovered_; }
    void release_recovered() { recovered_.clear(); recovered_.shrink_to_fit(); }

    void append(const Json& record);

private:
    std::mutex mutex_;
    std::unique_ptr<RecordLog> log_;
    std::vector<Json> recovered_;
};

}  // namespace porch::hub
