#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>

namespace porch {

/// Fixed-capacity MPMC queue that evicts the oldest element when full.
template <typename T>
class DropOldestQueue {
public:
    explicit DropOldestQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

    /// Returns true if an element was evicted to make room.
    bool push(T value) {
        bool dropped = false;
        {
            std::lock_guard lock(mutex_);
            if (closed_) return false;
            if (items_.size() == capacity_) {
                items_.pop_front();
                ++dropped_;
                dropped = true;
            }
            items_.push_back(std::move(value));
        }
        cv_.notify_one();
        return dropped;
    }

    /// Blocks until an element arrives, the timeout passes, or the queue closes.
    template <typename Rep, typename Period>
    std::optional<T> pop_for(std::chrono::duration<Rep, Period> timeout) {
        std::unique_lock lock(mutex_);
        cv_.wait_for(lock, timeout, [&] { return closed_ || !items_.empty(); });
        if (items_.empty()) return std::nullopt;
        T v = std::move(items_.front());
        items_.pop_front();
        return v;
    }

    std::optional<T> try_pop() {
        std::lock_guard lock(mutex_);
        if (items_.empty()) return std::nullopt;
        T v = std::move(items_.front());
        items_.pop_front();
        return v;
    }

    void close() {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        cv_.notify_all();
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return items_.size();
    }
    std::size_t dropped() const {
        std::lock_guard lock(mutex_);
        return dropped_;
    }
    std::size_t capacity() const noexcept { return capacity_; }

private:
    const std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<T> items_;
    std::size_t dropped_ = 0;
    bool closed_ = false;
};

}  // namespace porch
