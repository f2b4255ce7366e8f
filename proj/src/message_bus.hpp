// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "clock.hpp"
#include "document.hpp"
#include "errors.hpp"

namespace netsmo {

struct MessageId {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;

    bool zero() const { return hi == 0 && lo == 0; }
    std::string str() const;  // 32 hex chars
    auto operator<=>(const MessageId&) const = default;
};

enum class MsgKind { Event, Request, Reply };

const char* msg_kind_name(MsgKind kind);

struct Envelope {
    MessageId id;
    std::string topic;
    std::string sender;
    std::optional<MessageId> correlation;  // required on replies
    MsgKind kind = MsgKind::Event;
    Document payload;
    std::map<std::string, std::string> headers;
};

/// Framed byte encoding of an envelope (u32 little-endian length + CBOR body).
/// This is the transport boundary an out-of-process broker would speak; only
/// the in-process transport ships.
std::vector<std::uint8_t> encode_envelope_frame(const Envelope& env);
Envelope decode_envelope_frame(const std::vector<std::uint8_t>& frame);

using Consumer = std::function<void(const Envelope&)>;

/// Actor-model topic bus: broadcast subscribers get every message, consumer
/// groups get each message exactly once (round-robin over members in join
/// order). Per-consumer callbacks never overlap. Delivery is at-most-once,
/// FIFO per topic.
class MessageBus {
public:
    struct Receipt {
        std::size_t groups_targeted = 0;
        MessageId message_id;
        bool backlogged = false;
    };

    explicit MessageBus(Clock& clock) : clock_(clock) {}
    ~MessageBus() { close(); }

    MessageBus(const MessageBus&) = delete;
    MessageBus& operator=(const MessageBus&) = delete;

    /// Assigns the message id. Group-less subscribers count as one targeted
    /// group each. With no subscribers the message lands in a bounded backlog
    /// (capacity 1024, oldest dropped with a warning).
    Receipt publish(Envelope env);

    /// Joins `consumer_id` to the topic (and group, when given). Any backlog is
    /// drained to the new subscriber in publish order.
    void subscribe(const std::string& topic, const std::optional<std::string>& group,
                   const std::string& consumer_id, Consumer consumer);

    /// Publishes a REQUEST and blocks for the matching REPLY. Late replies are
    /// discarded. Simulated callers drive the clock from inside.
    Envelope request(const std::string& topic, Document payload, Tick timeout,
                     const std::string& sender);

    /// Builds and publishes the REPLY for `req`.
    Receipt reply_to(const Envelope& req, Document payload, const std::string& sender);

    std::size_t backlog_size(const std::string& topic) const;
    void set_warn_handler(std::function<void(const std::string&)> handler);
    void close();

private:
    struct ConsumerRec {
        std::string consumer_id;
        Consumer fn;
        std::mutex box_mu;
        std::deque<Envelope> mailbox;
        bool dispatching = false;
    };
    using ConsumerPtr = std::shared_ptr<ConsumerRec>;

    struct Group {
        std::vector<ConsumerPtr> members;  // join order
        std::size_t cursor = 0;
    };

    struct Topic {
        std::map<std::string, Group> groups;
        std::vector<ConsumerPtr> broadcast;
        std::deque<Envelope> backlog;
    };

    struct Pending {
        std::mutex mu;
        std::condition_variable cv;
        std::optional<Envelope> reply;
        bool closed = false;
    };

    MessageId next_id_locked() { return MessageId{0, ++id_counter_}; }
    static void deliver(const ConsumerPtr& consumer, Envelope env,
                        std::vector<ConsumerPtr>& touched);
    static void drain(const ConsumerPtr& consumer);
    void validate(const Envelope& env) const;

    Clock& clock_;
    mutable std::mutex mu_;
    bool closed_ = false;
    std::uint64_t id_counter_ = 0;
    std::map<std::string, Topic> topics_;
    std::map<std::string, std::shared_ptr<Pending>> pending_;  // keyed by request id
    std::function<void(const std::string&)> warn_ = nullptr;
};

constexpr std::size_t kBacklogCapacity = 1024;

}  // namespace netsmo
