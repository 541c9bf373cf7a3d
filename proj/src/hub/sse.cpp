#include "porch/hub/sse.hpp"

#include <algorithm>

namespace porch::hub {

std::string format_sse(const SseMessage& m) {
    return "id: " + std::to_string(m.id) + "\nevent: " + m.event + "\ndata: " + m.data + "\n\n";
}

void SseStream::push(SseMessage m) {
    {
        std::lock_guard lock(mutex_);
        if (closed_) return;
        queue_.push_back(std::move(m));
    }
    cv_.notify_all();
}

std::optional<SseMessage> SseStream::pop_for(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return closed_ || !queue_.empty(); });
    if (queue_.empty()) return std::nullopt;
    auto m = std::move(queue_.front());
    queue_.pop_front();
    return m;
}

void SseStream::close() {
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
    }
    cv_.notify_all();
}

bool SseStream::closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
}

std::shared_ptr<SseStream> SseBroker::attach(const std::string& subscriber, std::optional<std::uint64_t> last_event_id) {
    auto stream = std::make_shared<SseStream>();
    std::lock_guard lock(mutex_);
    auto& topic = topics_[subscriber];
    if (last_event_id)
        for (const auto& m : topic.recent)
            if (m.id > *last_event_id) stream->push(m);
    topic.streams.push_back(stream);
    return stream;
}

void SseBroker::publish(const std::string& subscriber, const std::string& event, const std::string& data) {
    std::lock_guard lock(mutex_);
    auto& topic = topics_[subscriber];
    SseMessage m{next_id_++, event, data};
    topic.recent.push_back(m);
    if (topic.recent.size() > replay_depth_) topic.recent.pop_front();
    std::erase_if(topic.streams, [](const std::weak_ptr<SseStream>& w) {
        auto s = w.lock();
        return !s || s->closed();
    });
    for (const auto& w : topic.streams)
        if (auto s = w.lock()) s->push(m);
}

std::size_t SseBroker::connections(const std::string& subscriber) const {
    std::lock_guard lock(mutex_);
    auto it = topics_.find(subscriber);
    if (it == topics_.end()) return 0;
    return static_cast<std::size_t>(std::count_if(it->second.streams.begin(), it->second.streams.end(), [](const auto& w) {
        auto s = w.lock();
        return s && !s->closed();
    }));
}

void SseBroker::close_all() {
    std::lock_guard lock(mutex_);
    for (auto& [_, topic] : topics_)
        for (const auto& w : topic.streams)
            if (auto s = w.lock()) s->close();
}

}  // namespace porch::hub
