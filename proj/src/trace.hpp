// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "clock.hpp"
#include "document.hpp"

namespace netsmo {

/// One simulation event. Serialized traces are compared byte-for-byte in
/// determinism checks, so detail documents must hold only ticks and strings,
/// never addresses of objects or wall-clock readings.
struct TraceEvent {
    Tick tick = 0;
    std::string kind;
    std::string target;
    Document detail;
};

class TraceLog {
public:
    void emit(Tick tick, std::string kind, std::string target, Document detail = Document::object()) {
        events_.push_back(TraceEvent{tick, std::move(kind), std::move(target), std::move(detail)});
    }

    const std::vector<TraceEvent>& events() const { return events_; }
    void clear() { events_.clear(); }

    /// Newline-delimited JSON, one event per line.
    std::string ndjson() const {
        std::string out;
        for (const auto& ev : events_) {
            Document row{{"tick", ev.tick}, {"kind", ev.kind}, {"target", ev.target},
                         {"detail", ev.detail}};
            out += row.dump();
            out += '\n';
        }
        return out;
    }

private:
    std::vector<TraceEvent> events_;
};

}  // namespace netsmo
