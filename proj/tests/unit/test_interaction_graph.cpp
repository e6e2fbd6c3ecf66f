#include <doctest.h>

#include <algorithm>
#include <random>

#include "eventcast/interaction_graph.hpp"
#include "fixtures.hpp"

using namespace eventcast;
using fixtures::post;

TEST_CASE("build_edges") {
  EventRecord e;
  e.posts = {post("a", 1), post("b", 2), post("c", 3), post("d", 4, "x y z w v", "a"), post("f", 5, "x y z w v", "b")};
  CHECK(build_edges(e).size() == 2);

  EventRecord chain;
  chain.posts = {post("A", 1), post("B", 2, "t", "A", InteractionKind::repost), post("C", 3, "t", "B", InteractionKind::repost)};
  const auto edges = build_edges(chain);
  REQUIRE(edges.size() == 2);
  CHECK(edges[0] == InteractionEdge{"B", "A", InteractionKind::repost, 2, false});
  CHECK(edges[1].src == "C");

  EventRecord orphan;
  orphan.posts = {post("x", 1), post("y", 2, "t", "gone")};
  const auto dangling = build_edges(orphan);
  REQUIRE(dangling.size() == 1);
  CHECK(dangling[0].dangling);
  CHECK(replied_targets(dangling).count("gone") == 1);
}

TEST_CASE("reply_ratio examples") {
  const std::vector<UnifiedPost> four = {post("a", 1), post("b", 2, "t", "a"), post("c", 3), post("d", 4)};
  EventRecord e;
  e.posts = four;
  const auto replied = replied_targets(build_edges(e));
  CHECK(*reply_ratio(four, replied) == 0.5);

  const std::vector<UnifiedPost> isolated = {post("a", 1), post("b", 2)};
  CHECK(*reply_ratio(isolated, {}) == 0.0);

  const std::vector<UnifiedPost> star = {post("m", 1), post("r1", 2, "t", "m"), post("r2", 3, "t", "m"),
                                         post("r3", 4, "t", "m")};
  CHECK(*reply_ratio(star, {"m"}) == 1.0);
  CHECK_FALSE(reply_ratio(std::vector<UnifiedPost>{}, {}).has_value());
  // A post whose reply lands in another bin still counts as interacting.
  CHECK(*reply_ratio(isolated, {"a"}) == 0.5);
}

TEST_CASE("percentile") {
  CHECK(percentile({0.0, 0.1, 0.5, 0.9}, 50) == doctest::Approx(0.3));
  CHECK(percentile({0.0, 0.1, 0.5, 0.9}, 0) == 0.0);
  CHECK(percentile({0.0, 0.1, 0.5, 0.9}, 100) == 0.9);
  CHECK(percentile({3.0}, 37) == 3.0);
  CHECK(percentile({1.0, 2.0, 3.0, 4.0, 5.0}, 25) == 2.0);
}

TEST_CASE("high_interaction_subset examples") {
  std::vector<ScoredBin> bins;
  const double ratios[] = {0.9, 0.5, 0.1, 0.0};
  for (std::size_t i = 0; i < 4; ++i) bins.push_back({{"ev", i}, ratios[i]});
  CHECK(high_interaction_subset(bins, 100).size() == 4);
  const auto half = high_interaction_subset(bins, 50);
  CHECK(half == std::vector<BinRef>{{"ev", 0}, {"ev", 1}});

  std::vector<ScoredBin> flat;
  for (std::size_t i = 0; i < 7; ++i) flat.push_back({{"ev", i}, 0.25});
  for (double k : {5.0, 10.0, 20.0, 50.0}) CHECK(high_interaction_subset(flat, k).size() == 7);

  CHECK_THROWS_AS(high_interaction_subset(bins, 0), std::invalid_argument);
  CHECK_THROWS_AS(high_interaction_subset(bins, 101), std::invalid_argument);
  CHECK(high_interaction_subset(std::vector<ScoredBin>{}, 10).empty());
}

TEST_CASE("subsets are nested in k") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ScoredBin> bins;
    const auto n = 1 + rng() % 80;
    for (std::size_t i = 0; i < n; ++i)
      bins.push_back({{"e" + std::to_string(rng() % 3), i}, static_cast<double>(rng() % 11) / 10.0});
    std::vector<BinRef> previous;
    for (double k : {1.0, 5.0, 10.0, 20.0, 33.3, 50.0, 75.0, 100.0}) {
      const auto s = high_interaction_subset(bins, k);
      CHECK(std::includes(s.begin(), s.end(), previous.begin(), previous.end()));
      previous = s;
    }
    CHECK(previous.size() == n);
  }
}

TEST_CASE("edges CSV round trip") {
  const std::vector<InteractionEdge> edges = {{"b", "a", InteractionKind::reply, 10, false},
                                              {"c", "zz", InteractionKind::repost, 11, true}};
  CHECK(edges_to_csv(edges) == "src,dst,kind,timestamp_utc,dangling\nb,a,reply,10,0\nc,zz,repost,11,1\n");
  fixtures::TempDir dir("edges");
  write_edges(edges, dir / "e.csv");
  CHECK(read_edges(dir / "e.csv") == edges);
}
