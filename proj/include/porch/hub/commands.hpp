#pragma once

#include "porch/core/commands.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <vector>

namespace porch::hub {

/// Per-device FIFO of edge commands. Not persisted: a restarted hub has no
/// live sessions for the commands to refer to.
class CommandQueues {
public:
    void push(const std::string& device_id, EdgeCommand command);

    /// Removes and returns everything queued, waiting up to `wait` for the
    /// first command if the queue is empty.
    std::vector<EdgeCommand> take(const std::string& device_id, std::chrono::milliseconds wait);

    std::vector<EdgeCommand> peek(const std::string& device_id) const;

    /// Wakes every waiter; later takes return immediately.
    void shutdown();

private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::map<std::string, std::deque<EdgeCommand>> queues_;
    bool shutdown_ = false;
};

}  // namespace porch::hub
