// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <utility>

namespace netsmo {

using Tick = std::uint64_t;

class SimClock;
class WallClock;

/// Logical time source. Everything in the core stamps and waits in ticks; the
/// simulation maps them onto a discrete event queue, the wall clock maps one
/// tick to one millisecond.
class Clock {
public:
    virtual ~Clock() = default;
    virtual Tick now() const = 0;
    virtual bool simulated() const = 0;
    virtual SimClock* as_sim() { return nullptr; }
    virtual WallClock* as_wall() { return nullptr; }
};

/// Deterministic discrete-event clock. Events at the same tick run in
/// scheduling order, so identical seeds and inputs replay identically.
/// Single-threaded by contract: all scheduling and stepping happens on the
/// simulation thread.
class SimClock : public Clock {
public:
    using EventId = std::uint64_t;

    Tick now() const override { return now_; }
    bool simulated() const override { return true; }
    SimClock* as_sim() override { return this; }

    EventId schedule_at(Tick at, std::function<void()> fn);
    EventId schedule_in(Tick delay, std::function<void()> fn) {
        return schedule_at(now_ + delay, std::move(fn));
    }
    void cancel(EventId id) { queue_.erase(find_key(id)); }

    /// Runs the next pending event, advancing now. False when the queue is empty.
    bool step();
    void run_until_idle();
    /// Runs every event scheduled at or before `t`, then sets now = t.
    void run_until(Tick t);
    /// Pumps events until `stop()` returns true or the deadline passes with
    /// nothing left to run before it. Returns the final stop() value. Time
    /// lands exactly on `deadline` when the condition never held.
    bool pump_until(Tick deadline, const std::function<bool()>& stop);

    bool idle() const { return queue_.empty(); }
    std::size_t pending() const { return queue_.size(); }
    /// Only valid while the queue is empty; used when resuming a persisted run.
    void restart_at(Tick t);

private:
    using Key = std::pair<Tick, EventId>;
    Key find_key(EventId id) const;

    Tick now_ = 0;
    EventId next_id_ = 1;
    std::map<Key, std::function<void()>> queue_;
};

/// Real-time clock for the live agent path: ticks are milliseconds since
/// construction.
class WallClock : public Clock {
public:
    WallClock() : origin_(std::chrono::steady_clock::now()) {}
    Tick now() const override {
        return static_cast<Tick>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                     std::chrono::steady_clock::now() - origin_)
                                     .count());
    }
    bool simulated() const override { return false; }
    WallClock* as_wall() override { return this; }
    std::chrono::steady_clock::time_point time_point_at(Tick t) const {
        return origin_ + std::chrono::milliseconds(t);
    }

private:
    std::chrono::steady_clock::time_point origin_;
};

}  // namespace netsmo
