// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <map>
#include <vector>

#include "errors.hpp"
#include "load_balancer.hpp"

using namespace netsmo;

namespace {

std::vector<LbBackend> three_backends() {
    return {LbBackend{"n1", 8080}, LbBackend{"n2", 8080}, LbBackend{"n3", 8080}};
}

}  // namespace

TEST_CASE("round robin walks the list in order") {
    LbPool pool("web", 80, LbAlgorithm::RoundRobin, three_backends());
    std::vector<std::size_t> picks;
    for (int i = 0; i < 7; ++i) picks.push_back(pool.pick());
    CHECK(picks == std::vector<std::size_t>{0, 1, 2, 0, 1, 2, 0});

    std::map<std::size_t, int> counts;
    for (auto p : picks) ++counts[p];
    CHECK(counts[0] == 3);
    CHECK(counts[1] == 2);
    CHECK(counts[2] == 2);
}

TEST_CASE("round robin spreads evenly over long runs") {
    LbPool pool("web", 80, LbAlgorithm::RoundRobin, three_backends());
    std::map<std::size_t, int> counts;
    for (int i = 0; i < 1000; ++i) ++counts[pool.pick()];
    int lo = 1000, hi = 0;
    for (const auto& [index, n] : counts) {
        lo = std::min(lo, n);
        hi = std::max(hi, n);
    }
    CHECK(hi - lo <= 1);
}

TEST_CASE("round robin skips failed backends and resumes after recovery") {
    LbPool pool("web", 80, LbAlgorithm::RoundRobin, three_backends());
    pool.set_failed(1, true);
    std::vector<std::size_t> picks;
    for (int i = 0; i < 4; ++i) picks.push_back(pool.pick());
    CHECK(picks == std::vector<std::size_t>{0, 2, 0, 2});

    pool.set_failed(1, false);
    // Cursor wrapped past the end, so the rotation re-includes the revived backend in place.
    CHECK(pool.pick() == 0);
    CHECK(pool.pick() == 1);
    CHECK(pool.pick() == 2);
}

TEST_CASE("all backends failed leaves nothing to pick") {
    LbPool pool("web", 80, LbAlgorithm::RoundRobin, three_backends());
    for (std::size_t i = 0; i < 3; ++i) pool.set_failed(i, true);
    try {
        pool.pick();
        FAIL("expected no healthy backend");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::no_healthy_backend);
    }
}

TEST_CASE("least connections takes the smallest gauge with ties by order") {
    LbPool pool("db", 5432, LbAlgorithm::LeastConnections, three_backends());
    CHECK(pool.pick() == 0);  // all zero, first wins
    CHECK(pool.pick() == 1);
    CHECK(pool.pick() == 2);
    CHECK(pool.pick() == 0);  // all at one connection again

    pool.release(0);
    pool.release(0);  // n1 back to zero while n2 and n3 hold one each
    CHECK(pool.pick() == 0);
    CHECK(pool.backends()[0].active_connections == 1);

    pool.set_failed(0, true);
    CHECK(pool.pick() == 1);  // n2 and n3 tie at one, order breaks it
}

TEST_CASE("release guards the gauge") {
    LbPool pool("db", 5432, LbAlgorithm::LeastConnections, three_backends());
    try {
        pool.release(0);
        FAIL("expected a gauge underflow error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::precondition_failed);
    }
    try {
        pool.release(9);
        FAIL("expected an index error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::bad_request);
    }
    CHECK_THROWS_AS(pool.set_failed(9, true), Error);
}

TEST_CASE("a pool needs at least one backend") {
    try {
        LbPool pool("empty", 80, LbAlgorithm::RoundRobin, {});
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::validation_error);
    }
}

TEST_CASE("pools round-trip through documents") {
    LbPool pool("web", 80, LbAlgorithm::LeastConnections, three_backends());
    pool.pick();
    pool.set_failed(2, true);
    auto doc = pool.to_document();
    auto back = LbPool::from_document(doc);
    CHECK(back.pool_id() == "web");
    CHECK(back.listen_port() == 80);
    CHECK(back.algorithm() == LbAlgorithm::LeastConnections);
    CHECK(back.backends().size() == 3);
    CHECK(back.backends()[0].active_connections == 1);
    CHECK(back.backends()[2].failed);
    CHECK(back.to_document() == doc);

    CHECK_THROWS_AS(LbPool::from_document(Document{{"pool_id", "x"}}), Error);
    CHECK(parse_lb_algorithm("ROUND_ROBIN") == LbAlgorithm::RoundRobin);
    CHECK_THROWS_AS(parse_lb_algorithm("RANDOM"), Error);
}
