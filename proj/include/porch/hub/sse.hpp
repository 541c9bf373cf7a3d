#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace porch::hub {

struct SseMessage {
    std::uint64_t id = 0;
    std::string event;
    std::string data;
};

/// Wire form: "id: N\nevent: E\ndata: D\n\n" (data must be a single line).
std::string format_sse(const SseMessage& m);

/// One open push channel.
class SseStream {
public:
    void push(SseMessage m);
    std::optional<SseMessage> pop_for(std::chrono::milliseconds timeout);
    void close();
    bool closed() const;

private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<SseMessage> queue_;
    bool closed_ = false;
};

/// Fan-out of server-sent events by subscriber id. Recent messages are kept
/// so a reconnecting client can resume from Last-Event-ID.
class SseBroker {
public:
    explicit SseBroker(std::size_t replay_depth = 256) : replay_depth_(replay_depth) {}

    std::shared_ptr<SseStream> attach(const std::string& subscriber, std::optional<std::uint64_t> last_event_id = {});
    void publish(const std::string& subscriber, const std::string& event, const std::string& data);
    std::size_t connections(const std::string& subscriber) const;
    void close_all();

private:
    struct Topic {
        std::vector<std::weak_ptr<SseStream>> streams;
        std::deque<SseMessage> recent;
    };

    std::size_t replay_depth_;
    mutable std::mutex mutex_;
    std::map<std::string, Topic> topics_;
    std::uint64_t next_id_ = 1;
};

}  // namespace porch::hub
