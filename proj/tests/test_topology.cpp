#include <doctest.h>

#include <stdexcept>

#include "csmarate/rng.hpp"
#include "csmarate/topology.hpp"
#include "oracles.hpp"

using namespace csmarate;

TEST_CASE("conflict graph validates input") {
    CHECK_THROWS_AS(ConflictGraph(0, {}), std::invalid_argument);
    CHECK_THROWS_AS(ConflictGraph(2, {{0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(ConflictGraph(2, {{0, 2}}), std::invalid_argument);
    CHECK_THROWS_AS(ConflictGraph(2, {{-1, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(ConflictGraph(31, {}), std::invalid_argument);
}

TEST_CASE("conflicts are normalized and deduplicated") {
    const ConflictGraph g(3, {{2, 0}, {0, 2}, {1, 2}});
    REQUIRE(g.conflicts().size() == 2);
    CHECK(g.conflicts()[0] == std::pair<int, int>{0, 2});
    CHECK(g.conflicts()[1] == std::pair<int, int>{1, 2});
    CHECK(g.neighbor_mask(2) == 0b011u);
    CHECK(g.neighbor_mask(0) == 0b100u);
    CHECK(g.neighbor_mask(1) == 0b100u);
}

TEST_CASE("flower topology has the seven known independent sets") {
    // links 0..3; center link 1 conflicts with everyone, 2-3 also conflict
    const ConflictGraph g(4, {{0, 1}, {1, 2}, {1, 3}, {2, 3}});
    const IndependentSetFamily fam = enumerate_independent_sets(g);
    REQUIRE(fam.size() == 7);
    const std::vector<std::uint32_t> expect = {0b0000, 0b0001, 0b0010, 0b0100,
                                               0b0101, 0b1000, 0b1001};
    for (std::size_t k = 0; k < expect.size(); ++k)
        CHECK(fam.set_mask(k) == expect[k]);
    CHECK(fam.set_size(0) == 0);
    CHECK(fam.set_size(4) == 2);
}

TEST_CASE("edge cases: single link and full clique") {
    const IndependentSetFamily single = enumerate_independent_sets(ConflictGraph(1, {}));
    REQUIRE(single.size() == 2);
    CHECK(single.set_mask(0) == 0u);
    CHECK(single.set_mask(1) == 1u);

    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j) edges.push_back({i, j});
    const IndependentSetFamily clique = enumerate_independent_sets(ConflictGraph(5, edges));
    CHECK(clique.size() == 6); // empty set + five singletons
}

TEST_CASE("no conflicts means the full power set") {
    const IndependentSetFamily fam = enumerate_independent_sets(ConflictGraph(4, {}));
    CHECK(fam.size() == 16);
}

TEST_CASE("enumeration matches the brute-force filter on random graphs") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.next() % 11); // up to 12 links
        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng.u01() < 0.35) edges.push_back({i, j});
        const ConflictGraph g(n, edges);
        const IndependentSetFamily fam = enumerate_independent_sets(g);
        const auto ref = oracle::independent_sets_bruteforce(g);
        REQUIRE(fam.size() == ref.size());
        for (std::size_t k = 0; k < ref.size(); ++k) CHECK(fam.set_mask(k) == ref[k]);
    }
}

TEST_CASE("family always contains the empty set and all singletons") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(rng.next() % 10);
        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng.u01() < 0.5) edges.push_back({i, j});
        const IndependentSetFamily fam = enumerate_independent_sets(ConflictGraph(n, edges));
        CHECK(fam.size() >= static_cast<std::size_t>(n) + 1);
        CHECK(fam.set_mask(0) == 0u);
        for (int l = 0; l < n; ++l) {
            bool found = false;
            for (std::size_t k = 0; k < fam.size(); ++k)
                if (fam.set_mask(k) == (1u << l)) found = true;
            CHECK(found);
        }
    }
}

TEST_CASE("graph equality is structural") {
    const ConflictGraph g1(3, {{0, 1}, {1, 2}});
    const ConflictGraph g2(3, {{2, 1}, {1, 0}});
    const ConflictGraph g3(3, {{0, 1}});
    CHECK(g1 == g2);
    CHECK_FALSE(g1 == g3);
}
