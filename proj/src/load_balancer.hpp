// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "document.hpp"

namespace netsmo {

enum class LbAlgorithm { RoundRobin, LeastConnections };

const char* lb_algorithm_name(LbAlgorithm a);
LbAlgorithm parse_lb_algorithm(const std::string& text);

struct LbBackend {
    std::string node_id;
    int port = 0;
    std::uint64_t active_connections = 0;
    bool failed = false;
};

/// Backend selection pool. pick() increments the chosen gauge until the caller
/// releases it; failed backends are skipped. Atomic per pool (callers hold the
/// deployment actor, no internal locking needed).
class LbPool {
public:
    LbPool(std::string pool_id, int listen_port, LbAlgorithm algorithm,
           std::vector<LbBackend> backends);

    /// ROUND_ROBIN walks the list cyclically in order; LEAST_CONNECTIONS takes
    /// the minimal gauge, ties broken by list order. Returns the backend index.
    std::size_t pick();
    void release(std::size_t index);
    void set_failed(std::size_t index, bool failed);

    const std::string& pool_id() const { return pool_id_; }
    int listen_port() const { return listen_port_; }
    LbAlgorithm algorithm() const { return algorithm_; }
    const std::vector<LbBackend>& backends() const { return backends_; }

    Document to_document() const;
    static LbPool from_document(const Document& doc);

private:
    std::string pool_id_;
    int listen_port_;
    LbAlgorithm algorithm_;
    std::vector<LbBackend> backends_;
    std::size_t cursor_ = 0;
};

}  // namespace netsmo
