// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clock.hpp"
#include "errors.hpp"
#include "keys.hpp"

namespace netsmo {

struct StateEntry {
    StateKey key;
    std::string value;
    std::uint64_t version = 0;  // 0 is reserved for "key absent"
    Tick written_at = 0;

    bool operator==(const StateEntry& other) const {
        return key == other.key && value == other.value && version == other.version;
    }
};

struct WatchEvent {
    enum class Kind { Put, Delete };
    StateEntry entry;
    Kind kind = Kind::Put;
};

/// Watch handle. Events for one key arrive in version order with no gaps from
/// the subscription point. poll() is non-blocking; take_until() blocks (wall
/// clock callers only; simulation callers pump the clock and poll).
class Subscription {
public:
    std::optional<WatchEvent> poll();
    std::optional<WatchEvent> take_until(std::chrono::steady_clock::time_point deadline);
    bool closed() const;
    std::size_t pending() const;
    /// Hook fired (outside locks) whenever new events become available or the
    /// subscription closes. Used by event-driven consumers.
    void set_notify(std::function<void()> fn);

private:
    friend class StateStore;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<WatchEvent> queue_;
    bool closed_ = false;
    StateKey prefix_;
    std::uint64_t from_version_ = 0;
    std::function<void()> notify_;
};

/// Versioned key-value store with watch and barrier primitives. Single
/// authority, safe for concurrent callers; all operations appear atomic.
/// Entries are immutable once returned.
class StateStore {
public:
    explicit StateStore(Clock& clock) : clock_(clock) {}
    ~StateStore() { close(); }

    StateStore(const StateStore&) = delete;
    StateStore& operator=(const StateStore&) = delete;

    /// Unconditional write, or compare-and-swap when expected_version is set
    /// (0 means "key must be absent"). Returns the new entry.
    StateEntry put(const StateKey& key, std::string_view value,
                   std::optional<std::uint64_t> expected_version = std::nullopt);

    std::optional<StateEntry> get(const StateKey& key) const;

    /// Removes the value; the version counter keeps running and a DELETE event
    /// is emitted. Returns the tombstone entry, or nullopt if the key was absent.
    std::optional<StateEntry> remove(const StateKey& key,
                                     std::optional<std::uint64_t> expected_version = std::nullopt);

    /// Every event under `prefix` with version > from_version, past and future,
    /// in write order.
    std::shared_ptr<Subscription> watch(const StateKey& prefix, std::uint64_t from_version);

    /// Barrier: first entry (current or future) whose value satisfies `pred`.
    /// Simulated callers drive the clock from inside; wall callers block.
    StateEntry wait_for(const StateKey& key, const std::function<bool(std::string_view)>& pred,
                        Tick timeout);

    std::vector<StateEntry> list(const StateKey& prefix) const;
    std::size_t size() const;

    /// Length-prefixed binary image of the live entries. Watches are not part
    /// of the image; neither are tombstones of deleted keys.
    std::string snapshot() const;
    /// Loads an image into this (empty) store. Throws Error{corrupt_image}.
    void load_snapshot(std::string_view image);
    static std::unique_ptr<StateStore> restore(std::string_view image, Clock& clock);

    /// Shuts the store down: all subscriptions and waiters observe
    /// SubscriptionClosed.
    void close();

private:
    struct Slot {
        std::string value;
        std::uint64_t version = 0;
        Tick written_at = 0;
        bool present = false;  // false after remove(); version counter keeps going
    };

    StateEntry entry_for(const std::string& rendered, const Slot& slot) const;
    void append_event_locked(const WatchEvent& ev, std::vector<std::shared_ptr<Subscription>>& touched);

    Clock& clock_;
    mutable std::mutex mu_;
    bool closed_ = false;
    std::map<std::string, Slot> slots_;
    std::vector<WatchEvent> log_;  // global write order, replayed for late watchers
    std::vector<std::weak_ptr<Subscription>> subs_;
};

constexpr std::string_view kSnapshotMagic = "NSMO-SS1";

}  // namespace netsmo
