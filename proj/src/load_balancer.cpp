// SPDX-License-Identifier: Apache-2.0
#include "load_balancer.hpp"

#include "errors.hpp"

namespace netsmo {

const char* lb_algorithm_name(LbAlgorithm a) {
    return a == LbAlgorithm::RoundRobin ? "ROUND_ROBIN" : "LEAST_CONNECTIONS";
}

LbAlgorithm parse_lb_algorithm(const std::string& text) {
    if (text == "ROUND_ROBIN") return LbAlgorithm::RoundRobin;
    if (text == "LEAST_CONNECTIONS") return LbAlgorithm::LeastConnections;
    throw Error(Errc::parse_error, "unknown load-balancing algorithm " + text);
}

LbPool::LbPool(std::string pool_id, int listen_port, LbAlgorithm algorithm,
               std::vector<LbBackend> backends)
    : pool_id_(std::move(pool_id)),
      listen_port_(listen_port),
      algorithm_(algorithm),
      backends_(std::move(backends)) {
    if (backends_.empty())
        throw Error(Errc::validation_error, "pool " + pool_id_ + " has no backends");
}

std::size_t LbPool::pick() {
    std::size_t chosen = backends_.size();
    if (algorithm_ == LbAlgorithm::RoundRobin) {
        for (std::size_t step = 0; step < backends_.size(); ++step) {
            std::size_t i = (cursor_ + step) % backends_.size();
            if (!backends_[i].failed) {
                chosen = i;
                cursor_ = i + 1;
                break;
            }
        }
    } else {
        for (std::size_t i = 0; i < backends_.size(); ++i) {
            if (backends_[i].failed) continue;
            if (chosen == backends_.size() ||
                backends_[i].active_connections < backends_[chosen].active_connections)
                chosen = i;
        }
    }
    if (chosen == backends_.size())
        throw Error(Errc::no_healthy_backend, "every backend of " + pool_id_ + " is failed");
    backends_[chosen].active_connections += 1;
    return chosen;
}

void LbPool::release(std::size_t index) {
    if (index >= backends_.size())
        throw Error(Errc::bad_request, "backend index out of range");
    if (backends_[index].active_connections == 0)
        throw Error(Errc::precondition_failed, "release without a matching pick");
    backends_[index].active_connections -= 1;
}

void LbPool::set_failed(std::size_t index, bool failed) {
    if (index >= backends_.size())
        throw Error(Errc::bad_request, "backend index out of range");
    backends_[index].failed = failed;
}

Document LbPool::to_document() const {
    Document rows = Document::array();
    for (const auto& b : backends_) {
        rows.push_back(Document{{"node_id", b.node_id},
                                {"port", b.port},
                                {"active_connections", b.active_connections},
                                {"failed", b.failed}});
    }
    return Document{{"pool_id", pool_id_},
                    {"listen_port", listen_port_},
                    {"algorithm", lb_algorithm_name(algorithm_)},
                    {"backends", rows}};
}

LbPool LbPool::from_document(const Document& doc) {
    try {
        std::vector<LbBackend> backends;
        for (const auto& row : doc.at("backends")) {
            LbBackend b;
            b.node_id = row.at("node_id").get<std::string>();
            b.port = row.at("port").get<int>();
            b.active_connections = row.value("active_connections", 0ull);
            b.failed = row.value("failed", false);
            backends.push_back(std::move(b));
        }
        return LbPool(doc.at("pool_id").get<std::string>(), doc.at("listen_port").get<int>(),
                      parse_lb_algorithm(doc.at("algorithm").get<std::string>()),
                      std::move(backends));
    } catch (const Document::exception& e) {
        throw Error(Errc::parse_error, std::string("bad pool document: ") + e.what());
    }
}

}  // namespace netsmo
