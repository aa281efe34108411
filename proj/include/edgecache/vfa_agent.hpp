#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "edgecache/caching.hpp"
#include "edgecache/env.hpp"
#include "edgecache/policy.hpp"
#include "edgecache/random.hpp"

namespace edgecache {

// Cost features of caching `a` given the observation and the cache content
// `a_prev` it replaces:
//   refresh             = a . (1 - a_prev)    contents fetched over the backhaul
//   popularity_mismatch = (1 - a) o p         popular but uncached
//   preference_mismatch = (1 - a) o q         preferred but uncached
struct CostFeatures {
  double refresh = 0.0;
  Vector popularity_mismatch;
  Vector preference_mismatch;

  std::size_t dimension() const { return 1 + 2 * popularity_mismatch.size(); }
  // [refresh, popularity_mismatch..., preference_mismatch...]
  Vector stacked() const;
};

// Weights over the stacked features, laid out like CostFeatures::stacked().
class WeightVector {
 public:
  WeightVector() = default;
  static WeightVector zeros(std::size_t library_size);

  std::size_t library_size() const { return (values_.size() - 1) / 2; }
  std::size_t dimension() const { return values_.size(); }

  double refresh() const { return values_[0]; }
  std::span<const double> popularity() const {
    return std::span<const double>(values_).subspan(1, library_size());
  }
  std::span<const double> preference() const {
    return std::span<const double>(values_).subspan(1 + library_size(), library_size());
  }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double norm() const;
  bool finite() const;

 private:
  std::vector<double> values_{0.0};
};

CostFeatures features(const Observation& obs, const CacheAction& a,
                      const CacheAction& a_prev);

// z . w, summed in stacked order. Throws DimensionError on mismatch.
double q_value(const CostFeatures& z, const WeightVector& w);

// Per-content contribution to Q when content f is cached:
//   score_f = w_refresh (1 - a_prev_f) - (w_pop_f p_f + w_pref_f q_f)
// The approximate Q is sum_f a_f score_f plus a term independent of a.
Vector content_scores(const Observation& obs, const CacheAction& a_prev,
                      const WeightVector& w);

// argmin_a Q(s, a; w) over every B-subset: the B smallest scores, ties to the
// lowest content id.
CacheAction greedy_action(const Observation& obs, const CacheAction& a_prev,
                          const WeightVector& w);

struct TdError {
  double signed_td = 0.0;
  double squared = 0.0;
};

// signed_td = r + gamma * Q(z_next_min; w) - Q(z; w). Throws NumericalError
// on a non-finite result.
TdError td_error(double r, const CostFeatures& z, const CostFeatures& z_next_min,
                 const WeightVector& w, double gamma);

enum class TdMode {
  kSignedTd,      // w += rho * signed_td * z
  kAbsoluteTd,  // w += rho * sqrt(squared) * z
};

void update_weights(WeightVector& w, const CostFeatures& z, const TdError& err,
                    double rho, TdMode mode);

// Epsilon-greedy around greedy_action.
CacheAction act(const Observation& obs, const CacheAction& a_prev,
                const WeightVector& w, double epsilon, const ActionSpace& space,
                Rng& rng);

struct VfaOptions {
  double gamma = 0.9;
  double rho = 0.005;
  EpsilonSchedule epsilon;
  TdMode td_mode = TdMode::kSignedTd;
};

class VfaAgent : public CachePolicy {
 public:
  VfaAgent(const ActionSpace& space, VfaOptions options, std::uint64_t seed);

  std::string name() const override { return "q-vfa"; }
  double serve(const RequestBatch& batch) override;
  StepOutcome end_slot(const Observation& obs, const ChainIndices& truth,
                       double reward, std::uint64_t slot) override;

  const WeightVector& weights() const { return weights_; }
  const CacheAction& committed() const { return committed_; }
  // Greedy choice for the last observation, replacing the committed action.
  CacheAction greedy() const;
  double last_td() const { return last_td_; }

 private:
  ActionSpace space_;
  VfaOptions options_;
  WeightVector weights_;
  Rng rng_;
  CacheAction previous_;   // a(t-1)
  CacheAction committed_;  // a(t)
  std::optional<Observation> last_obs_;
  double last_td_ = 0.0;
};

}  // namespace edgecache
