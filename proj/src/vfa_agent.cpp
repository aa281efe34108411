#include "edgecache/vfa_agent.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "edgecache/errors.hpp"

namespace edgecache {

Vector CostFeatures::stacked() const {
  Vector z;
  z.reserve(dimension());
  z.push_back(refresh);
  z.insert(z.end(), popularity_mismatch.begin(), popularity_mismatch.end());
  z.insert(z.end(), preference_mismatch.begin(), preference_mismatch.end());
  return z;
}

WeightVector WeightVector::zeros(std::size_t library_size) {
  WeightVector w;
  w.values_.assign(2 * library_size + 1, 0.0);
  return w;
}

double WeightVector::norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

bool WeightVector::finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

CostFeatures features(const Observation& obs, const CacheAction& a,
                      const CacheAction& a_prev) {
  const std::size_t contents = a.library_size();
  if (a_prev.library_size() != contents || obs.popularity.size() != contents ||
      obs.preference.size() != contents) {
    throw DimensionError("features: observation and actions disagree on library size");
  }
  CostFeatures z;
  z.popularity_mismatch.resize(contents);
  z.preference_mismatch.resize(contents);
  for (std::size_t f = 0; f < contents; ++f) {
    const double uncached = a.cached(f) ? 0.0 : 1.0;
    if (a.cached(f) && !a_prev.cached(f)) z.refresh += 1.0;
    z.popularity_mismatch[f] = uncached * obs.popularity[f];
    z.preference_mismatch[f] = uncached * obs.preference[f];
  }
  return z;
}

double q_value(const CostFeatures& z, const WeightVector& w) {
  if (z.dimension() != w.dimension()) {
    throw DimensionError("q_value: feature and weight dimensions differ");
  }
  const auto wv = w.values();
  const std::size_t contents = z.popularity_mismatch.size();
  double q = z.refresh * wv[0];
  for (std::size_t f = 0; f < contents; ++f) q += z.popularity_mismatch[f] * wv[1 + f];
  for (std::size_t f = 0; f < contents; ++f) {
    q += z.preference_mismatch[f] * wv[1 + contents + f];
  }
  return q;
}

Vector content_scores(const Observation& obs, const CacheAction& a_prev,
                      const WeightVector& w) {
  const std::size_t contents = a_prev.library_size();
  if (w.library_size() != contents || obs.popularity.size() != contents ||
      obs.preference.size() != contents) {
    throw DimensionError("content_scores: inputs disagree on library size");
  }
  const auto wp = w.popularity();
  const auto wq = w.preference();
  Vector score(contents);
  for (std::size_t f = 0; f < contents; ++f) {
    const double refresh = a_prev.cached(f) ? 0.0 : w.refresh();
    score[f] = refresh - (wp[f] * obs.popularity[f] + wq[f] * obs.preference[f]);
  }
  return score;
}

CacheAction greedy_action(const Observation& obs, const CacheAction& a_prev,
                          const WeightVector& w) {
  const Vector score = content_scores(obs, a_prev, w);
  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t capacity = a_prev.capacity();
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(capacity),
                    order.end(), [&](std::size_t i, std::size_t j) {
                      return score[i] < score[j] || (score[i] == score[j] && i < j);
                    });
  order.resize(capacity);
  return CacheAction::from_contents(score.size(), order);
}

TdError td_error(double r, const CostFeatures& z, const CostFeatures& z_next_min,
                 const WeightVector& w, double gamma) {
  TdError e;
  e.signed_td = r + gamma * q_value(z_next_min, w) - q_value(z, w);
  e.squared = e.signed_td * e.signed_td;
  if (!std::isfinite(e.signed_td) || !std::isfinite(e.squared)) {
    throw NumericalError("td_error: non-finite temporal-difference error");
  }
  return e;
}

void update_weights(WeightVector& w, const CostFeatures& z, const TdError& err,
                    double rho, TdMode mode) {
  if (!(rho > 0.0)) throw DomainError("update_weights: step size must be positive");
  if (z.dimension() != w.dimension()) {
    throw DimensionError("update_weights: feature and weight dimensions differ");
  }
  const double scale =
      rho * (mode == TdMode::kSignedTd ? err.signed_td : std::sqrt(err.squared));
  if (scale == 0.0) return;
  auto wv = w.values();
  const std::size_t contents = z.popularity_mismatch.size();
  wv[0] += scale * z.refresh;
  for (std::size_t f = 0; f < contents; ++f) {
    wv[1 + f] += scale * z.popularity_mismatch[f];
    wv[1 + contents + f] += scale * z.preference_mismatch[f];
  }
  if (!w.finite()) throw NumericalError("update_weights: weights became non-finite");
}

CacheAction act(const Observation& obs, const CacheAction& a_prev,
                const WeightVector& w, double epsilon, const ActionSpace& space,
                Rng& rng) {
  if (uniform01(rng) < epsilon) return space.random(rng);
  return greedy_action(obs, a_prev, w);
}

VfaAgent::VfaAgent(const ActionSpace& space, VfaOptions options, std::uint64_t seed)
    : space_(space),
      options_(options),
      weights_(WeightVector::zeros(space.library_size())),
      rng_(make_rng(seed, Stream::kAgent)) {
  // Zero weights score every content equally, so greedy is index 0.
  committed_ = uniform01(rng_) < options_.epsilon.at(0) ? space_.random(rng_) : space_.unrank(0);
  previous_ = committed_;
}

double VfaAgent::serve(const RequestBatch& batch) {
  return hit_rate(batch.counts, committed_);
}

StepOutcome VfaAgent::end_slot(const Observation& obs, const ChainIndices&,
                               double reward, std::uint64_t slot) {
  StepOutcome out;
  if (last_obs_) {
    const CostFeatures z = features(*last_obs_, committed_, previous_);
    const CacheAction best_next = greedy_action(obs, committed_, weights_);
    const CostFeatures z_next = features(obs, best_next, committed_);
    const TdError err = td_error(reward, z, z_next, weights_, options_.gamma);
    update_weights(weights_, z, err, options_.rho, options_.td_mode);
    last_td_ = err.signed_td;
    out.discrepancy = err.squared;
  }

  const auto start = std::chrono::steady_clock::now();
  CacheAction next = act(obs, committed_, weights_, options_.epsilon.at(slot), space_, rng_);
  const auto stop = std::chrono::steady_clock::now();
  out.select_micros = std::chrono::duration<double, std::micro>(stop - start).count();

  previous_ = std::move(committed_);
  committed_ = std::move(next);
  last_obs_ = obs;
  return out;
}

CacheAction VfaAgent::greedy() const {
  if (!last_obs_) return space_.unrank(0);
  return greedy_action(*last_obs_, previous_, weights_);
}

}  // namespace edgecache
