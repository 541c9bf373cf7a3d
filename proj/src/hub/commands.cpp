#include "porch/hub/commands.hpp"

namespace porch::hub {

void CommandQueues::push(const std::string& device_id, EdgeCommand command) {
    {
        std::lock_guard lock(mutex_);
        queues_[device_id].push_back(std::move(command));
    }
    cv_.notify_all();
}

std::vector<EdgeCommand> CommandQueues::take(const std::string& device_id, std::chrono::milliseconds wait) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, wait, [&] {
        if (shutdown_) return true;
        auto it = queues_.find(device_id);
        return it != queues_.end() && !it->second.empty();
    });
    std::vector<EdgeCommand> out;
    auto it = queues_.find(device_id);
    if (it == queues_.end()) return out;
    out.assign(std::make_move_iterator(it->second.begin()), std::make_move_iterator(it->second.end()));
    it->second.clear();
    return out;
}

std::vector<EdgeCommand> CommandQueues::peek(const std::string& device_id) const {
    std::lock_guard lock(mutex_);
    auto it = queues_.find(device_id);
    if (it == queues_.end()) return {};
    return {it->second.begin(), it->second.end()};
}

void CommandQueues::shutdown() {
    {
        std::lock_guard lock(mutex_);
        shutdown_ = true;
    }
    cv_.notify_all();
}

}  // namespace porch::hub
