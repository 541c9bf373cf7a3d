#include "porch/hub/journal.hpp"

#include "porch/core/error.hpp"

#include <spdlog/spdlog.h>

namespace porch::hub {

Journal::Journal(std::filesystem::path path, bool durable) {
    auto contents = RecordLog::read(path);
    for (const auto& rec : contents.records) {
        try {
            recovered_.push_back(Json::parse(rec));
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::OutboxCorrupt, path.string(), e.what());
        }
    }
    log_ = std::make_unique<RecordLog>(path, durable);
    if (contents.torn_tail) {
        spdlog::warn("journal {} had an incomplete final record; truncating", path.string());
        log_->rewrite(contents.records);
    }
}

void Journal::append(const Json& record) {
    auto payload = record.dump();
    std::lock_guard lock(mutex_);
    log_->append(payload);
}

}  // namespace porch::hub
