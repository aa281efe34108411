#include <doctest.h>

#include <algorithm>
#include <set>

#include "edgecache/caching.hpp"
#include "edgecache/errors.hpp"

using namespace edgecache;

namespace {

RequestBatch batch_of(std::initializer_list<std::size_t> contents, std::size_t library) {
  RequestBatch b;
  b.counts.assign(library, 0);
  for (auto c : contents) {
    b.per_user.push_back({0, c});
    ++b.counts[c];
  }
  return b;
}

// Recursive enumeration of sorted B-subsets, independent of ActionSpace.
void subsets(std::size_t f, std::size_t b, std::size_t from, std::vector<std::size_t>& cur,
             std::vector<std::vector<std::size_t>>& out) {
  if (cur.size() == b) {
    out.push_back(cur);
    return;
  }
  for (std::size_t i = from; i < f; ++i) {
    cur.push_back(i);
    subsets(f, b, i + 1, cur, out);
    cur.pop_back();
  }
}

}  // namespace

TEST_CASE("cache action construction") {
  const auto a = CacheAction::from_bits({1, 0, 1, 0}, 2);
  CHECK(a.contents() == std::vector<std::size_t>{0, 2});
  CHECK(a.cached(2));
  CHECK_FALSE(a.cached(1));
  CHECK(a == CacheAction::from_contents(4, std::vector<std::size_t>{2, 0}));
  CHECK_THROWS_AS(CacheAction::from_bits({1, 1, 1, 0}, 2), DomainError);
  CHECK_THROWS_AS(CacheAction::from_bits({2, 0}, 1), DomainError);
  CHECK_THROWS_AS(CacheAction::from_contents(3, std::vector<std::size_t>{1, 1}), DomainError);
  CHECK_THROWS_AS(CacheAction::from_contents(3, std::vector<std::size_t>{3}), DomainError);
}

TEST_CASE("action space size") {
  CHECK(ActionSpace(20, 5).size() == 15504);
  CHECK(ActionSpace(6, 3).size() == 20);
  CHECK(ActionSpace(16, 4).size() == 1820);
  CHECK(ActionSpace::binomial(64, 32) == 1832624140942590534ULL);
  CHECK_THROWS_AS(ActionSpace::binomial(100, 50), DomainError);
  CHECK_THROWS_AS(ActionSpace(3, 4), DomainError);
}

TEST_CASE("action index order matches an independent enumeration") {
  for (std::size_t f = 1; f <= 9; ++f) {
    for (std::size_t b = 1; b <= f; ++b) {
      std::vector<std::vector<std::size_t>> all;
      std::vector<std::size_t> cur;
      subsets(f, b, 0, cur, all);
      const ActionSpace space(f, b);
      REQUIRE(space.size() == all.size());
      for (ActionIndex i = 0; i < space.size(); ++i) {
        CHECK(space.unrank(i).contents() == all[i]);
        CHECK(space.rank(CacheAction::from_contents(f, all[i])) == i);
      }
    }
  }
  CHECK(ActionSpace(20, 5).unrank(0).contents() == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(ActionSpace(20, 5).unrank(15503).contents() ==
        std::vector<std::size_t>{15, 16, 17, 18, 19});
  CHECK_THROWS_AS(ActionSpace(6, 3).unrank(20), DomainError);
  CHECK_THROWS_AS(ActionSpace(6, 3).rank(CacheAction::from_bits({1, 1, 0, 0, 0, 0}, 2)),
                  DomainError);
}

TEST_CASE("random actions are valid and cover the space") {
  Rng rng = make_rng(1, Stream::kTest);
  const ActionSpace space(6, 3);
  std::set<ActionIndex> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto a = space.random(rng);
    CHECK(a.capacity() == 3);
    seen.insert(space.rank(a));
  }
  CHECK(seen.size() == 20);
}

TEST_CASE("hit rate and reward") {
  const std::vector<std::uint64_t> d{5, 3, 2, 0};
  CHECK(hit_rate(d, CacheAction::from_bits({1, 1, 0, 0}, 2)) == doctest::Approx(0.8));
  CHECK(hit_rate(d, CacheAction::from_bits({1, 1, 1, 0}, 3)) == 1.0);
  CHECK(hit_rate(d, CacheAction::from_bits({0, 0, 0, 1}, 1)) == 0.0);
  const std::vector<std::uint64_t> uniform(10, 7);
  CHECK(hit_rate(uniform, ActionSpace(10, 4).unrank(33)) == doctest::Approx(0.4));
  const std::vector<std::uint64_t> none(4, 0);
  CHECK(hit_rate(none, CacheAction::from_bits({1, 0, 0, 0}, 1)) == 1.0);
  CHECK_THROWS_AS(hit_rate(std::vector<std::uint64_t>{1, 2}, CacheAction::from_bits({1, 0, 0}, 1)),
                  DimensionError);
  CHECK(reward(0.8) == doctest::Approx(0.2));
  CHECK(reward(1.0) == 0.0);
  CHECK(reward(0.0) == 1.0);
}

TEST_CASE("lru") {
  SUBCASE("capacity covers the library") {
    LruCache c(4);
    CHECK(c.serve(batch_of({0, 1, 2, 3}, 4)) == 0.0);
    CHECK(c.serve(batch_of({3, 1, 0, 2, 2}, 4)) == 1.0);
  }
  SUBCASE("repeated content") {
    LruCache c(2);
    CHECK(c.serve(batch_of({1, 1, 1, 1}, 3)) == doctest::Approx(0.75));
  }
  SUBCASE("cyclic stream over B+1 contents thrashes") {
    LruCache c(3);
    c.serve(batch_of({0, 1, 2, 3}, 4));
    for (int round = 0; round < 5; ++round) CHECK(c.serve(batch_of({0, 1, 2, 3}, 4)) == 0.0);
  }
  SUBCASE("recency order") {
    LruCache c(2);
    c.access(0);
    c.access(1);
    c.access(0);
    c.access(2);  // evicts 1
    CHECK(c.resident() == std::vector<std::size_t>{2, 0});
  }
  SUBCASE("empty batch") {
    LruCache c(2);
    CHECK(c.serve(batch_of({}, 3)) == 1.0);
  }
}

TEST_CASE("lfu") {
  SUBCASE("equal counts: the earlier insertion leaves") {
    LfuCache c(1);
    CHECK_FALSE(c.access(0));
    CHECK_FALSE(c.access(1));
    CHECK(c.resident() == std::vector<std::size_t>{1});
  }
  SUBCASE("a newcomer with a lower count is not admitted") {
    LfuCache c(1);
    c.access(0);
    c.access(0);
    CHECK_FALSE(c.access(1));
    CHECK(c.resident() == std::vector<std::size_t>{0});
    CHECK_FALSE(c.access(1));  // counts tie at 2: resident 0 is older
    CHECK(c.resident() == std::vector<std::size_t>{1});
    CHECK(c.frequency(0) == 2);
    CHECK(c.frequency(1) == 2);
  }
  SUBCASE("capacity covers the library") {
    LfuCache c(3);
    c.serve(batch_of({0, 1, 2}, 3));
    CHECK(c.serve(batch_of({2, 1, 0, 0}, 3)) == 1.0);
  }
  SUBCASE("stationary zipf stream keeps the most frequent contents") {
    Rng rng = make_rng(2, Stream::kTest);
    const Vector p = ground_truth_popularity({1.0, {4, 1, 6, 2, 8, 3, 7, 5}});
    std::discrete_distribution<std::size_t> draw(p.begin(), p.end());
    LfuCache c(3);
    std::uint64_t hits = 0, total = 0;
    for (int i = 0; i < 400000; ++i) {
      const bool hit = c.access(draw(rng));
      if (i >= 50000) {
        hits += hit;
        ++total;
      }
    }
    // contents 1, 3 and 5 hold ranks 1, 2 and 3
    CHECK(c.resident() == std::vector<std::size_t>{1, 3, 5});
    const double top = p[1] + p[3] + p[5];
    CHECK(std::abs(static_cast<double>(hits) / total - top) <= 0.02 * top);
  }
}

TEST_CASE("hit rate grows with the cached set and reward stays in [0,1]") {
  Rng rng = make_rng(3, Stream::kTest);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t f = 2 + rng() % 10;
    const std::size_t b = 1 + rng() % (f - 1);
    std::vector<std::uint64_t> d(f);
    for (auto& v : d) v = rng() % 6;
    const CacheAction a = ActionSpace(f, b).random(rng);
    std::vector<std::uint8_t> bits(a.bits().begin(), a.bits().end());
    std::size_t extra = 0;
    while (bits[extra]) ++extra;
    bits[extra] = 1;
    const CacheAction bigger = CacheAction::from_bits(bits, b + 1);
    CHECK(hit_rate(d, bigger) >= hit_rate(d, a));
    const double r = reward(hit_rate(d, a));
    CHECK((r >= 0.0 && r <= 1.0));
  }
}
