#pragma once

#include "porch/core/model.hpp"

#include <atomic>
#include <chrono>

namespace porch {

class Clock {
public:
    virtual ~Clock() = default;
    virtual TimestampMs now_ms() const = 0;
};

class SystemClock final : public Clock {
public:
    TimestampMs now_ms() const override {
        using namespace std::chrono;
        return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
    }
};

/// Test clock; only moves when told to.
class ManualClock final : public Clock {
public:
    explicit ManualClock(TimestampMs start = 0) : now_(start) {}
    TimestampMs now_ms() const override { return now_.load(); }
    void set(TimestampMs t) { now_.store(t); }
    void advance(TimestampMs dt) { now_.fetch_add(dt); }

private:
    std::atomic<TimestampMs> now_;
};

/// Wall clock shifted by an adjustable offset.
class OffsetClock final : public Clock {
public:
    TimestampMs now_ms() const override { return base_.now_ms() + offset_.load(); }
    void advance(TimestampMs dt) { offset_.fetch_add(dt); }

private:
    SystemClock base_;
    std::atomic<TimestampMs> offset_{0};
};

}  // namespace porch
