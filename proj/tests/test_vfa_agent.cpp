#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "edgecache/errors.hpp"
#include "edgecache/vfa_agent.hpp"

using namespace edgecache;

namespace {

Observation random_obs(std::size_t f, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Observation obs{Vector(f), Vector(f), 1, false};
  double total = 0;
  for (auto& v : obs.popularity) total += (v = u(rng));
  for (auto& v : obs.popularity) v /= total;
  for (auto& v : obs.preference) v = u(rng);
  return obs;
}

WeightVector random_weights(std::size_t f, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  WeightVector w = WeightVector::zeros(f);
  for (auto& v : w.values()) v = u(rng);
  return w;
}

}  // namespace

TEST_CASE("features") {
  const Observation obs{{0.4, 0.3, 0.2, 0.1}, {0.2, 0.4, 0.3, 0.1}, 2, false};
  const auto a = CacheAction::from_bits({1, 1, 0, 0}, 2);
  CHECK(features(obs, a, a).refresh == 0.0);
  CHECK(features(obs, a, CacheAction::from_bits({1, 0, 1, 0}, 2)).refresh == 1.0);
  CHECK(features(obs, a, CacheAction::from_bits({0, 0, 1, 1}, 2)).refresh == 2.0);

  const Observation two{{0.7, 0.3}, {0.6, 0.9}, 1, false};
  const auto first = CacheAction::from_bits({1, 0}, 1);
  const auto z = features(two, first, first);
  CHECK(z.popularity_mismatch == Vector{0.0, 0.3});
  CHECK(z.preference_mismatch == Vector{0.0, 0.9});
  CHECK(z.dimension() == 5);
  CHECK(z.stacked() == Vector{0.0, 0.0, 0.3, 0.0, 0.9});

  CHECK_THROWS_AS(features(two, a, a), DimensionError);
}

TEST_CASE("feature bound: |z|_inf <= max(B, 1)") {
  std::mt19937_64 rng(1);
  Rng arng = make_rng(1, Stream::kTest);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t f = 1 + rng() % 12;
    const std::size_t b = 1 + rng() % f;
    const ActionSpace space(f, b);
    const auto z = features(random_obs(f, rng), space.random(arng), space.random(arng));
    for (double v : z.stacked()) CHECK(std::abs(v) <= static_cast<double>(b));
  }
}

TEST_CASE("linear action value") {
  CostFeatures z{1.0, {0.0, 0.0}, {0.0, 0.0}};
  WeightVector w = WeightVector::zeros(2);
  CHECK(q_value(z, w) == 0.0);
  w.values()[0] = 2.0;
  CHECK(q_value(z, w) == 2.0);
  CHECK_THROWS_AS(q_value(z, WeightVector::zeros(3)), DimensionError);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t f = 1 + rng() % 20;
    CostFeatures zz{u(rng), Vector(f), Vector(f)};
    for (auto& v : zz.popularity_mismatch) v = u(rng);
    for (auto& v : zz.preference_mismatch) v = u(rng);
    const WeightVector ww = random_weights(f, rng);
    // pairwise products summed back to front in long double
    const Vector s = zz.stacked();
    long double oracle = 0;
    for (std::size_t i = s.size(); i-- > 0;) {
      oracle += static_cast<long double>(s[i]) * ww.values()[i];
    }
    CHECK(q_value(zz, ww) == doctest::Approx(static_cast<double>(oracle)).epsilon(1e-12));
  }
}

TEST_CASE("greedy selection") {
  const Observation obs{{0.4, 0.3, 0.2, 0.1}, {0.2, 0.4, 0.3, 0.1}, 2, false};
  const auto prev = CacheAction::from_bits({0, 0, 1, 1}, 2);
  WeightVector w = WeightVector::zeros(4);
  w.values()[0] = 0.1;
  for (std::size_t i = 1; i < 9; ++i) w.values()[i] = 0.5;
  const Vector s = content_scores(obs, prev, w);
  const double want[] = {-0.2, -0.25, -0.25, -0.1};
  for (int i = 0; i < 4; ++i) CHECK(s[i] == doctest::Approx(want[i]).epsilon(1e-12));
  CHECK(greedy_action(obs, prev, w).contents() == std::vector<std::size_t>{1, 2});
  CHECK(greedy_action(obs, prev, WeightVector::zeros(4)) == ActionSpace(4, 2).unrank(0));
}

TEST_CASE("greedy equals the enumeration minimum") {
  std::mt19937_64 rng(3);
  Rng arng = make_rng(3, Stream::kTest);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t f = 1 + rng() % 9;
    const std::size_t b = 1 + rng() % std::min<std::size_t>(4, f);
    const ActionSpace space(f, b);
    const Observation obs = random_obs(f, rng);
    const WeightVector w = random_weights(f, rng);
    const CacheAction prev = space.random(arng);
    double best = std::numeric_limits<double>::infinity();
    ActionIndex best_index = 0;
    for (ActionIndex i = 0; i < space.size(); ++i) {
      const double v = q_value(features(obs, space.unrank(i), prev), w);
      if (v < best) {
        best = v;
        best_index = i;
      }
    }
    const CacheAction g = greedy_action(obs, prev, w);
    CHECK(q_value(features(obs, g, prev), w) == best);
    CHECK(space.rank(g) == best_index);
  }
}

TEST_CASE("td error") {
  WeightVector w = WeightVector::zeros(1);
  w.values()[0] = 1.0;
  const CostFeatures z{1.0, {0.0}, {0.0}};
  const TdError e = td_error(0.2, z, z, w, 0.9);
  CHECK(e.signed_td == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(e.squared == doctest::Approx(0.01).epsilon(1e-12));
  const TdError fixed = td_error(0.1, z, z, w, 0.9);
  CHECK(fixed.signed_td == doctest::Approx(0.0));
  const TdError zero = td_error(0.35, z, z, WeightVector::zeros(1), 0.9);
  CHECK(zero.signed_td == 0.35);
  CHECK(zero.squared == 0.35 * 0.35);
  CHECK_THROWS_AS(td_error(std::nan(""), z, z, w, 0.9), NumericalError);
}

TEST_CASE("weight update modes") {
  const CostFeatures z{1.0, {0.5, 0.0}, {0.25, 1.0}};
  const Vector s = z.stacked();

  WeightVector abs_mode = WeightVector::zeros(2);
  update_weights(abs_mode, z, TdError{-0.1, 0.01}, 0.005, TdMode::kAbsoluteTd);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(abs_mode.values()[i] == doctest::Approx(0.0005 * s[i]).epsilon(1e-12));
  }

  WeightVector signed_mode = WeightVector::zeros(2);
  update_weights(signed_mode, z, TdError{-0.1, 0.01}, 0.005, TdMode::kSignedTd);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(signed_mode.values()[i] == doctest::Approx(-0.0005 * s[i]).epsilon(1e-12));
  }

  for (TdMode mode : {TdMode::kSignedTd, TdMode::kAbsoluteTd}) {
    WeightVector w = signed_mode;
    update_weights(w, z, TdError{0.0, 0.0}, 0.005, mode);
    CHECK(std::equal(w.values().begin(), w.values().end(), signed_mode.values().begin()));
    update_weights(w, CostFeatures{0.0, {0.0, 0.0}, {0.0, 0.0}}, TdError{0.4, 0.16}, 0.005,
                   mode);
    CHECK(std::equal(w.values().begin(), w.values().end(), signed_mode.values().begin()));
  }
  CHECK_THROWS_AS(update_weights(signed_mode, z, TdError{0.1, 0.01}, 0.0, TdMode::kSignedTd),
                  DomainError);
}

TEST_CASE("signed steps descend the squared error on a fixed target") {
  // Repeated updates toward a constant target r with gamma = 0 shrink |td|.
  const CostFeatures z{1.0, {0.3, 0.1}, {0.6, 0.2}};
  WeightVector w = WeightVector::zeros(2);
  double last = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 200; ++k) {
    const TdError e = td_error(0.7, z, z, w, 0.0);
    CHECK(e.squared <= last);
    last = e.squared;
    update_weights(w, z, e, 0.1, TdMode::kSignedTd);
  }
  CHECK(last < 1e-6);
}

TEST_CASE("agent step") {
  const ActionSpace space(5, 2);
  VfaAgent agent(space, {}, 3);
  const Observation obs{{0.5, 0.2, 0.1, 0.1, 0.1}, Vector(5, 0.4), 2, false};
  const StepOutcome first = agent.end_slot(obs, {}, 0.5, 0);
  CHECK_FALSE(first.discrepancy.has_value());
  CHECK(agent.weights().norm() == 0.0);
  const StepOutcome second = agent.end_slot(obs, {}, 0.5, 1);
  REQUIRE(second.discrepancy.has_value());
  // zero weights: td = r
  CHECK(*second.discrepancy == doctest::Approx(0.25));
  CHECK(agent.last_td() == doctest::Approx(0.5));
  CHECK(agent.weights().finite());
  CHECK(agent.committed().capacity() == 2);
}

TEST_CASE("repeating one transition contracts the td error") {
  std::mt19937_64 rng(5);
  Rng arng = make_rng(5, Stream::kTest);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t f = 2 + rng() % 8;
    const ActionSpace space(f, 1 + rng() % (f - 1));
    const Observation obs = random_obs(f, rng), next_obs = random_obs(f, rng);
    const CacheAction prev = space.random(arng), a = space.random(arng);
    const CostFeatures z = features(obs, a, prev);
    const CostFeatures z_next = features(next_obs, space.random(arng), a);
    const Vector zs = z.stacked(), ns = z_next.stacked();
    double zz = 0, nz = 0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
      zz += zs[i] * zs[i];
      nz += ns[i] * zs[i];
    }
    // td shrinks by (1 - rho (|z|^2 - gamma <z', z>)) per repeat
    const double gamma = 0.9, contraction = zz - gamma * nz;
    if (contraction <= 0.0) continue;
    const double rho = 0.5 / zz;
    WeightVector w = WeightVector::zeros(f);
    double last = std::numeric_limits<double>::infinity();
    int repeats = 0;
    for (; repeats < 10000; ++repeats) {
      const TdError e = td_error(0.6, z, z_next, w, gamma);
      CHECK(std::abs(e.signed_td) < last);
      last = std::abs(e.signed_td);
      if (last < 1e-6) break;
      update_weights(w, z, e, rho, TdMode::kSignedTd);
    }
    CHECK(last < 1e-6);
  }
}

TEST_CASE("a fresh greedy agent starts from the first action") {
  VfaOptions options;
  options.epsilon.start = 0.0;
  options.epsilon.floor = 0.0;
  const ActionSpace space(7, 3);
  CHECK(VfaAgent(space, options, 1).committed() == space.unrank(0));
  CHECK(VfaAgent(space, options, 2).committed() == space.unrank(0));
}
