// SPDX-License-Identifier: Apache-2.0
#include "message_bus.hpp"

#include <cstdio>
#include <utility>

#include "keys.hpp"

namespace netsmo {

std::string MessageId::str() const {
    char buf[33];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                  static_cast<unsigned long long>(hi), static_cast<unsigned long long>(lo));
    return std::string(buf, 32);
}

const char* msg_kind_name(MsgKind kind) {
    switch (kind) {
        case MsgKind::Event: return "EVENT";
        case MsgKind::Request: return "REQUEST";
        case MsgKind::Reply: return "REPLY";
    }
    return "?";
}

static Document envelope_to_document(const Envelope& env) {
    Document doc{
        {"id", env.id.str()},
        {"topic", env.topic},
        {"sender", env.sender},
        {"kind", msg_kind_name(env.kind)},
        {"payload", env.payload},
        {"headers", env.headers},
    };
    if (env.correlation) doc["correlation"] = env.correlation->str();
    return doc;
}

static MessageId parse_message_id(const std::string& hex) {
    if (hex.size() != 32) throw Error(Errc::parse_error, "bad message id length");
    auto part = [&](std::size_t off) {
        std::uint64_t v = 0;
        for (std::size_t i = off; i < off + 16; ++i) {
            char c = hex[i];
            v <<= 4;
            if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
            else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
            else throw Error(Errc::parse_error, "bad message id digit");
        }
        return v;
    };
    return MessageId{part(0), part(16)};
}

std::vector<std::uint8_t> encode_envelope_frame(const Envelope& env) {
    auto body = encode_document(envelope_to_document(env));
    std::vector<std::uint8_t> frame;
    frame.reserve(4 + body.size());
    auto n = static_cast<std::uint32_t>(body.size());
    for (int i = 0; i < 4; ++i) frame.push_back(static_cast<std::uint8_t>((n >> (8 * i)) & 0xff));
    frame.insert(frame.end(), body.begin(), body.end());
    return frame;
}

Envelope decode_envelope_frame(const std::vector<std::uint8_t>& frame) {
    if (frame.size() < 4) throw Error(Errc::parse_error, "frame shorter than its header");
    std::uint32_t n = 0;
    for (int i = 0; i < 4; ++i) n |= static_cast<std::uint32_t>(frame[i]) << (8 * i);
    if (frame.size() != 4 + static_cast<std::size_t>(n))
        throw Error(Errc::parse_error, "frame length mismatch");
    Document doc = decode_document({frame.begin() + 4, frame.end()});

    Envelope env;
    try {
        env.id = parse_message_id(doc.at("id").get<std::string>());
        env.topic = doc.at("topic").get<std::string>();
        env.sender = doc.at("sender").get<std::string>();
        std::string kind = doc.at("kind").get<std::string>();
        if (kind == "EVENT") env.kind = MsgKind::Event;
        else if (kind == "REQUEST") env.kind = MsgKind::Request;
        else if (kind == "REPLY") env.kind = MsgKind::Reply;
        else throw Error(Errc::parse_error, "unknown message kind " + kind);
        env.payload = doc.at("payload");
        env.headers = doc.at("headers").get<std::map<std::string, std::string>>();
        if (doc.contains("correlation"))
            env.correlation = parse_message_id(doc["correlation"].get<std::string>());
    } catch (const Document::exception& e) {
        throw Error(Errc::parse_error, std::string("bad envelope frame: ") + e.what());
    }
    return env;
}

void MessageBus::validate(const Envelope& env) const {
    if (!StateKey::valid(env.topic))
        throw Error(Errc::bad_request, "invalid topic " + env.topic);
    if (env.kind == MsgKind::Reply && !env.correlation)
        throw Error(Errc::bad_request, "reply without correlation id");
    std::size_t bytes = encoded_size(env.payload);
    if (bytes > kMaxPayloadBytes)
        throw Error(Errc::payload_too_large, "payload is " + std::to_string(bytes) + " bytes",
                    Document{{"limit", kMaxPayloadBytes}, {"actual", bytes}});
}

void MessageBus::deliver(const ConsumerPtr& consumer, Envelope env,
                         std::vector<ConsumerPtr>& touched) {
    {
        std::lock_guard lk(consumer->box_mu);
        consumer->mailbox.push_back(std::move(env));
    }
    touched.push_back(consumer);
}

void MessageBus::drain(const ConsumerPtr& consumer) {
    std::unique_lock lk(consumer->box_mu);
    if (consumer->dispatching) return;  // the active drainer will pick up the tail
    consumer->dispatching = true;
    while (!consumer->mailbox.empty()) {
        Envelope env = std::move(consumer->mailbox.front());
        consumer->mailbox.pop_front();
        lk.unlock();
        consumer->fn(env);
        lk.lock();
    }
    consumer->dispatching = false;
}

MessageBus::Receipt MessageBus::publish(Envelope env) {
    validate(env);

    std::vector<ConsumerPtr> touched;
    std::shared_ptr<Pending> fulfilled;
    Envelope reply_copy;
    Receipt receipt;

    {
        std::lock_guard lk(mu_);
        if (closed_) throw Error(Errc::bus_closed, "publish on closed bus");
        if (env.id.zero()) env.id = next_id_locked();
        receipt.message_id = env.id;

        if (env.kind == MsgKind::Reply) {
            auto it = pending_.find(env.correlation->str());
            if (it == pending_.end()) {
                if (warn_) warn_("discarding late reply on " + env.topic);
                return receipt;  // groups_targeted 0: nobody was waiting
            }
            fulfilled = it->second;
            pending_.erase(it);  // exactly one reply completes a request
            reply_copy = std::move(env);
            receipt.groups_targeted = 1;
        } else {
            Topic& topic = topics_[env.topic];
            for (auto& [name, group] : topic.groups) {
                if (group.members.empty()) continue;
                group.cursor %= group.members.size();
                deliver(group.members[group.cursor], env, touched);
                ++group.cursor;
                ++receipt.groups_targeted;
            }
            for (const auto& consumer : topic.broadcast) {
                deliver(consumer, env, touched);
                ++receipt.groups_targeted;
            }
            if (receipt.groups_targeted == 0) {
                if (topic.backlog.size() == kBacklogCapacity) {
                    topic.backlog.pop_front();
                    if (warn_) warn_("backlog full on " + env.topic + ", dropped oldest");
                }
                topic.backlog.push_back(std::move(env));
                receipt.backlogged = true;
            }
        }
    }

    if (fulfilled) {
        std::lock_guard lk(fulfilled->mu);
        fulfilled->reply = std::move(reply_copy);
        fulfilled->cv.notify_all();
    }
    for (const auto& consumer : touched) drain(consumer);
    return receipt;
}

void MessageBus::subscribe(const std::string& topic, const std::optional<std::string>& group,
                           const std::string& consumer_id, Consumer consumer) {
    if (!StateKey::valid(topic)) throw Error(Errc::bad_request, "invalid topic " + topic);
    if (group && !valid_key_segment(*group))
        throw Error(Errc::bad_request, "invalid group name " + *group);
    if (consumer_id.empty()) throw Error(Errc::bad_request, "empty consumer id");

    auto rec = std::make_shared<ConsumerRec>();
    rec->consumer_id = consumer_id;
    rec->fn = std::move(consumer);

    bool drain_backlog = false;
    {
        std::lock_guard lk(mu_);
        if (closed_) throw Error(Errc::bus_closed, "subscribe on closed bus");
        Topic& t = topics_[topic];
        for (const auto& [name, g] : t.groups)
            for (const auto& member : g.members)
                if (member->consumer_id == consumer_id)
                    throw Error(Errc::duplicate_consumer,
                                consumer_id + " already consumes " + topic + " in group " + name);
        for (const auto& member : t.broadcast)
            if (member->consumer_id == consumer_id)
                throw Error(Errc::duplicate_consumer, consumer_id + " already subscribes " + topic);

        if (group) t.groups[*group].members.push_back(rec);
        else t.broadcast.push_back(rec);

        if (!t.backlog.empty()) {
            std::lock_guard box(rec->box_mu);
            for (auto& env : t.backlog) rec->mailbox.push_back(std::move(env));
            t.backlog.clear();
            drain_backlog = true;
        }
    }
    if (drain_backlog) drain(rec);
}

Envelope MessageBus::request(const std::string& topic, Document payload, Tick timeout,
                             const std::string& sender) {
    Envelope env;
    env.topic = topic;
    env.sender = sender;
    env.kind = MsgKind::Request;
    env.payload = std::move(payload);
    validate(env);

    auto slot = std::make_shared<Pending>();
    MessageId request_id;
    {
        std::lock_guard lk(mu_);
        if (closed_) throw Error(Errc::bus_closed, "request on closed bus");
        request_id = next_id_locked();
        env.id = request_id;
        pending_[request_id.str()] = slot;
    }
    Tick deadline = clock_.now() + timeout;
    publish(std::move(env));

    auto take = [&]() -> std::optional<Envelope> {
        std::lock_guard lk(slot->mu);
        if (slot->closed) throw Error(Errc::bus_closed, "bus closed while awaiting reply");
        return slot->reply;
    };

    if (clock_.simulated()) {
        if (auto got = take()) return *got;
        clock_.as_sim()->pump_until(deadline, [&] {
            std::lock_guard lk(slot->mu);
            return slot->reply.has_value() || slot->closed;
        });
        if (auto got = take()) return *got;
    } else {
        auto wall_deadline = clock_.as_wall()->time_point_at(deadline);
        std::unique_lock lk(slot->mu);
        slot->cv.wait_until(lk, wall_deadline,
                            [&] { return slot->reply.has_value() || slot->closed; });
        if (slot->closed) throw Error(Errc::bus_closed, "bus closed while awaiting reply");
        if (slot->reply) return *slot->reply;
    }

    {
        std::lock_guard lk(mu_);
        pending_.erase(request_id.str());  // replies from now on are late
    }
    if (auto got = take()) return *got;  // reply raced the erase
    throw Error(Errc::timeout, "no reply on " + topic + " within " + std::to_string(timeout),
                Document{{"topic", topic}, {"timeout", timeout}});
}

MessageBus::Receipt MessageBus::reply_to(const Envelope& req, Document payload,
                                         const std::string& sender) {
    Envelope env;
    env.topic = req.topic;
    env.sender = sender;
    env.kind = MsgKind::Reply;
    env.correlation = req.id;
    env.payload = std::move(payload);
    return publish(std::move(env));
}

std::size_t MessageBus::backlog_size(const std::string& topic) const {
    std::lock_guard lk(mu_);
    auto it = topics_.find(topic);
    return it == topics_.end() ? 0 : it->second.backlog.size();
}

void MessageBus::set_warn_handler(std::function<void(const std::string&)> handler) {
    std::lock_guard lk(mu_);
    warn_ = std::move(handler);
}

void MessageBus::close() {
    std::vector<std::shared_ptr<Pending>> waiters;
    {
        std::lock_guard lk(mu_);
        if (closed_) return;
        closed_ = true;
        for (auto& [id, slot] : pending_) waiters.push_back(slot);
        pending_.clear();
    }
    for (const auto& slot : waiters) {
        std::lock_guard lk(slot->mu);
        slot->closed = true;
        slot->cv.notify_all();
    }
}

}  // namespace netsmo
