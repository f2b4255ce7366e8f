// SPDX-License-Identifier: Apache-2.0
#include "state_store.hpp"

#include <algorithm>
#include <cstring>

#include "document.hpp"

namespace netsmo {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class ImageReader {
public:
    explicit ImageReader(std::string_view data) : data_(data) {}

    bool done() const { return pos_ == data_.size(); }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }

    std::string_view bytes(std::size_t n) {
        need(n);
        auto out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

private:
    void need(std::size_t n) {
        if (data_.size() - pos_ < n)
            throw Error(Errc::corrupt_image, "truncated snapshot image");
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

}  // namespace

std::optional<WatchEvent> Subscription::poll() {
    std::lock_guard lk(mu_);
    if (queue_.empty()) return std::nullopt;
    WatchEvent ev = std::move(queue_.front());
    queue_.pop_front();
    return ev;
}

std::optional<WatchEvent> Subscription::take_until(std::chrono::steady_clock::time_point deadline) {
    std::unique_lock lk(mu_);
    cv_.wait_until(lk, deadline, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) {
        if (closed_) throw Error(Errc::subscription_closed, "subscription closed");
        return std::nullopt;
    }
    WatchEvent ev = std::move(queue_.front());
    queue_.pop_front();
    return ev;
}

bool Subscription::closed() const {
    std::lock_guard lk(mu_);
    return closed_ && queue_.empty();
}

std::size_t Subscription::pending() const {
    std::lock_guard lk(mu_);
    return queue_.size();
}

void Subscription::set_notify(std::function<void()> fn) {
    std::lock_guard lk(mu_);
    notify_ = std::move(fn);
}

StateEntry StateStore::entry_for(const std::string& rendered, const Slot& slot) const {
    return StateEntry{StateKey::parse(rendered), slot.value, slot.version, slot.written_at};
}

void StateStore::append_event_locked(const WatchEvent& ev,
                                     std::vector<std::shared_ptr<Subscription>>& touched) {
    log_.push_back(ev);
    for (auto it = subs_.begin(); it != subs_.end();) {
        auto sub = it->lock();
        if (!sub) {
            it = subs_.erase(it);
            continue;
        }
        if (ev.entry.key.has_prefix(sub->prefix_) && ev.entry.version > sub->from_version_) {
            {
                std::lock_guard sl(sub->mu_);
                sub->queue_.push_back(ev);
            }
            touched.push_back(sub);
        }
        ++it;
    }
}

StateEntry StateStore::put(const StateKey& key, std::string_view value,
                           std::optional<std::uint64_t> expected_version) {
    if (value.size() > kMaxPayloadBytes)
        throw Error(Errc::value_too_large, "value exceeds 1 MiB",
                    Document{{"size", value.size()}, {"limit", kMaxPayloadBytes}});

    StateEntry result;
    std::vector<std::shared_ptr<Subscription>> touched;
    {
        std::lock_guard lk(mu_);
        if (closed_) throw Error(Errc::subscription_closed, "store closed");
        Slot& slot = slots_[key.str()];
        if (expected_version && *expected_version != slot.version)
            throw Error(Errc::version_conflict, "compare-and-swap failed for " + key.str(),
                        Document{{"current_version", slot.version}, {"expected", *expected_version}});
        slot.value.assign(value.data(), value.size());
        slot.version += 1;
        slot.written_at = clock_.now();
        slot.present = true;
        result = entry_for(key.str(), slot);
        append_event_locked(WatchEvent{result, WatchEvent::Kind::Put}, touched);
    }
    for (auto& sub : touched) {
        sub->cv_.notify_all();
        std::function<void()> notify;
        {
            std::lock_guard sl(sub->mu_);
            notify = sub->notify_;
        }
        if (notify) notify();
    }
    return result;
}

std::optional<StateEntry> StateStore::get(const StateKey& key) const {
    std::lock_guard lk(mu_);
    auto it = slots_.find(key.str());
    if (it == slots_.end() || !it->second.present) return std::nullopt;
    return entry_for(it->first, it->second);
}

std::optional<StateEntry> StateStore::remove(const StateKey& key,
                                             std::optional<std::uint64_t> expected_version) {
    std::optional<StateEntry> result;
    std::vector<std::shared_ptr<Subscription>> touched;
    {
        std::lock_guard lk(mu_);
        if (closed_) throw Error(Errc::subscription_closed, "store closed");
        auto it = slots_.find(key.str());
        if (it == slots_.end() || !it->second.present) {
            if (expected_version && *expected_version != 0)
                throw Error(Errc::version_conflict, "compare-and-swap failed for " + key.str(),
                            Document{{"current_version", 0}, {"expected", *expected_version}});
            return std::nullopt;
        }
        Slot& slot = it->second;
        if (expected_version && *expected_version != slot.version)
            throw Error(Errc::version_conflict, "compare-and-swap failed for " + key.str(),
                        Document{{"current_version", slot.version}, {"expected", *expected_version}});
        slot.value.clear();
        slot.version += 1;
        slot.written_at = clock_.now();
        slot.present = false;
        result = entry_for(it->first, slot);
        append_event_locked(WatchEvent{*result, WatchEvent::Kind::Delete}, touched);
    }
    for (auto& sub : touched) {
        sub->cv_.notify_all();
        std::function<void()> notify;
        {
            std::lock_guard sl(sub->mu_);
            notify = sub->notify_;
        }
        if (notify) notify();
    }
    return result;
}

std::shared_ptr<Subscription> StateStore::watch(const StateKey& prefix,
                                                std::uint64_t from_version) {
    auto sub = std::make_shared<Subscription>();
    sub->prefix_ = prefix;
    sub->from_version_ = from_version;
    std::lock_guard lk(mu_);
    if (closed_) throw Error(Errc::subscription_closed, "store closed");
    for (const auto& ev : log_) {
        if (ev.entry.key.has_prefix(prefix) && ev.entry.version > from_version)
            sub->queue_.push_back(ev);
    }
    subs_.push_back(sub);
    return sub;
}

StateEntry StateStore::wait_for(const StateKey& key,
                                const std::function<bool(std::string_view)>& pred, Tick timeout) {
    if (timeout == 0)
        throw Error(Errc::precondition_failed, "wait_for timeout must be > 0");

    Tick deadline = 0;
    std::shared_ptr<Subscription> sub;
    {
        std::lock_guard lk(mu_);
        if (closed_) throw Error(Errc::subscription_closed, "store closed");
        deadline = clock_.now() + timeout;
        auto it = slots_.find(key.str());
        std::uint64_t current = it == slots_.end() ? 0 : it->second.version;
        if (it != slots_.end() && it->second.present && pred(it->second.value))
            return entry_for(it->first, it->second);
        sub = std::make_shared<Subscription>();
        sub->prefix_ = key;
        sub->from_version_ = current;
        subs_.push_back(sub);
    }

    auto scan = [&]() -> std::optional<StateEntry> {
        while (auto ev = sub->poll()) {
            if (ev->kind == WatchEvent::Kind::Put && pred(ev->entry.value)) return ev->entry;
        }
        return std::nullopt;
    };

    if (clock_.simulated()) {
        std::optional<StateEntry> hit;
        clock_.as_sim()->pump_until(deadline, [&] {
            if (!hit) hit = scan();
            return hit.has_value() || sub->closed();
        });
        if (hit) return *hit;
        if (sub->closed()) throw Error(Errc::subscription_closed, "store closed during wait");
        throw Error(Errc::timeout, "wait_for deadline passed", Document{{"key", key.str()}});
    }

    const auto* wall = dynamic_cast<const WallClock*>(&clock_);
    auto tp = wall ? wall->time_point_at(deadline)
                   : std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout);
    while (true) {
        if (auto hit = scan()) return *hit;
        if (clock_.now() >= deadline)
            throw Error(Errc::timeout, "wait_for deadline passed", Document{{"key", key.str()}});
        auto ev = sub->take_until(tp);  // throws subscription_closed on shutdown
        if (ev) {
            if (ev->kind == WatchEvent::Kind::Put && pred(ev->entry.value)) return ev->entry;
            continue;
        }
        throw Error(Errc::timeout, "wait_for deadline passed", Document{{"key", key.str()}});
    }
}

std::vector<StateEntry> StateStore::list(const StateKey& prefix) const {
    std::lock_guard lk(mu_);
    std::vector<StateEntry> out;
    for (auto it = slots_.lower_bound(prefix.str()); it != slots_.end(); ++it) {
        if (it->first.compare(0, prefix.str().size(), prefix.str()) != 0) break;
        if (!it->second.present) continue;
        // lower_bound prefix match is on the rendered string; confirm segment boundary
        StateEntry entry = entry_for(it->first, it->second);
        if (entry.key.has_prefix(prefix)) out.push_back(std::move(entry));
    }
    return out;
}

std::size_t StateStore::size() const {
    std::lock_guard lk(mu_);
    std::size_t n = 0;
    for (const auto& [k, slot] : slots_)
        if (slot.present) ++n;
    return n;
}

std::string StateStore::snapshot() const {
    std::lock_guard lk(mu_);
    std::string out(kSnapshotMagic);
    for (const auto& [key, slot] : slots_) {
        if (!slot.present) continue;
        put_u32(out, static_cast<std::uint32_t>(key.size()));
        out += key;
        put_u32(out, static_cast<std::uint32_t>(slot.value.size()));
        out += slot.value;
        put_u64(out, slot.version);
    }
    return out;
}

void StateStore::load_snapshot(std::string_view image) {
    std::lock_guard lk(mu_);
    if (!slots_.empty()) throw Error(Errc::internal, "load_snapshot on non-empty store");
    if (image.size() < kSnapshotMagic.size() ||
        image.substr(0, kSnapshotMagic.size()) != kSnapshotMagic)
        throw Error(Errc::corrupt_image, "bad snapshot magic");

    ImageReader reader(image.substr(kSnapshotMagic.size()));
    std::map<std::string, Slot> loaded;
    while (!reader.done()) {
        std::uint32_t key_len = reader.u32();
        if (key_len == 0 || key_len > 1024)
            throw Error(Errc::corrupt_image, "snapshot key length out of range");
        std::string key(reader.bytes(key_len));
        if (!StateKey::valid(key))
            throw Error(Errc::corrupt_image, "snapshot key violates grammar: " + key);
        std::uint32_t value_len = reader.u32();
        if (value_len > kMaxPayloadBytes)
            throw Error(Errc::corrupt_image, "snapshot value exceeds size limit");
        std::string value(reader.bytes(value_len));
        std::uint64_t version = reader.u64();
        if (version == 0) throw Error(Errc::corrupt_image, "snapshot version 0 is reserved");
        auto [it, inserted] = loaded.emplace(std::move(key), Slot{std::move(value), version, 0, true});
        if (!inserted) throw Error(Errc::corrupt_image, "duplicate key in snapshot: " + it->first);
    }
    slots_ = std::move(loaded);
    // History starts over at the restored entries; earlier watch streams are gone.
    log_.clear();
    for (const auto& [key, slot] : slots_)
        log_.push_back(WatchEvent{entry_for(key, slot), WatchEvent::Kind::Put});
}

std::unique_ptr<StateStore> StateStore::restore(std::string_view image, Clock& clock) {
    auto store = std::make_unique<StateStore>(clock);
    store->load_snapshot(image);
    return store;
}

void StateStore::close() {
    std::vector<std::shared_ptr<Subscription>> subs;
    {
        std::lock_guard lk(mu_);
        if (closed_) return;
        closed_ = true;
        for (auto& weak : subs_)
            if (auto sub = weak.lock()) subs.push_back(std::move(sub));
        subs_.clear();
    }
    for (auto& sub : subs) {
        std::function<void()> notify;
        {
            std::lock_guard sl(sub->mu_);
            sub->closed_ = true;
            notify = sub->notify_;
        }
        sub->cv_.notify_all();
        if (notify) notify();
    }
}

}  // namespace netsmo
