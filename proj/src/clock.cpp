// SPDX-License-Identifier: Apache-2.0
#include "clock.hpp"

#include <cassert>
#include <stdexcept>

namespace netsmo {

SimClock::EventId SimClock::schedule_at(Tick at, std::function<void()> fn) {
    if (at < now_) at = now_;
    EventId id = next_id_++;
    queue_.emplace(Key{at, id}, std::move(fn));
    return id;
}

SimClock::Key SimClock::find_key(EventId id) const {
    for (const auto& [key, fn] : queue_) {
        if (key.second == id) return key;
    }
    return Key{0, 0};
}

bool SimClock::step() {
    if (queue_.empty()) return false;
    auto it = queue_.begin();
    assert(it->first.first >= now_);
    now_ = it->first.first;
    auto fn = std::move(it->second);
    queue_.erase(it);
    fn();
    return true;
}

void SimClock::run_until_idle() {
    while (step()) {
    }
}

void SimClock::run_until(Tick t) {
    while (!queue_.empty() && queue_.begin()->first.first <= t) step();
    if (now_ < t) now_ = t;
}

bool SimClock::pump_until(Tick deadline, const std::function<bool()>& stop) {
    if (stop()) return true;
    while (!queue_.empty() && queue_.begin()->first.first <= deadline) {
        step();
        if (stop()) return true;
    }
    if (now_ < deadline) now_ = deadline;
    return stop();
}

void SimClock::restart_at(Tick t) {
    if (!queue_.empty()) throw std::logic_error("restart_at with pending events");
    now_ = t;
}

}  // namespace netsmo
