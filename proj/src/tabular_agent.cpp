#include "edgecache/tabular_agent.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "edgecache/errors.hpp"

namespace edgecache {

StateId state_id(const QuantizedState& s, std::size_t popularity_states,
                 std::size_t preference_states) {
  const StateId prev = s.prev_action ? *s.prev_action + 1 : 0;
  return s.popularity +
         popularity_states * (s.preference + preference_states * prev);
}

StateQuantizer::StateQuantizer(std::size_t popularity_states,
                               std::size_t preference_states, Options options)
    : popularity_states_(popularity_states),
      preference_states_(preference_states),
      options_(options) {
  if (popularity_states == 0 || preference_states == 0) {
    throw DomainError("quantizer: state counts must be positive");
  }
  if (!(options.update_rate >= 0.0 && options.update_rate <= 1.0)) {
    throw DomainError("quantizer: update_rate outside [0,1]");
  }
}

void StateQuantizer::set_centroids(std::vector<Vector> popularity,
                                   std::vector<Vector> preference) {
  if (popularity.size() != popularity_states_ || preference.size() != preference_states_) {
    throw DimensionError("quantizer: centroid count differs from declared states");
  }
  popularity_ = std::move(popularity);
  preference_ = std::move(preference);
}

namespace {

double squared_distance(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("quantizer: observation length changed");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

}  // namespace

std::size_t StateQuantizer::assign(std::vector<Vector>& centroids, std::size_t limit,
                                   const Vector& point, double spawn_distance) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centroids.size(); ++k) {
    const double d = squared_distance(centroids[k], point);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  if (centroids.size() < limit &&
      (centroids.empty() || best_d > spawn_distance * spawn_distance)) {
    centroids.push_back(point);
    return centroids.size() - 1;
  }
  auto& c = centroids[best];
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] += options_.update_rate * (point[i] - c[i]);
  }
  return best;
}

QuantizedState StateQuantizer::quantize(const Observation& obs,
                                        const ChainIndices& truth) {
  if (options_.mode == QuantizerMode::kOracle) {
    if (truth.popularity >= popularity_states_ || truth.preference >= preference_states_) {
      throw DomainError("quantizer: oracle state outside declared dimensions");
    }
    return {truth.popularity, truth.preference, std::nullopt};
  }
  QuantizedState s;
  s.popularity = assign(popularity_, popularity_states_, obs.popularity,
                        options_.popularity_spawn_distance);
  s.preference = assign(preference_, preference_states_, obs.preference,
                        options_.preference_spawn_distance);
  return s;
}

double QTable::get(StateId s, ActionIndex a) const {
  auto row = rows_.find(s);
  if (row == rows_.end()) return initial_value_;
  auto it = row->second.find(a);
  return it == row->second.end() ? initial_value_ : it->second;
}

void QTable::set(StateId s, ActionIndex a, double value) {
  if (!std::isfinite(value)) throw NumericalError("q-table: non-finite value");
  if (a >= action_count_) throw DomainError("q-table: action index out of range");
  auto [it, inserted] = rows_[s].insert_or_assign(a, value);
  if (inserted) ++entries_;
}

double QTable::min_value(StateId s) const {
  return get(s, argmin(s));
}

ActionIndex QTable::argmin(StateId s) const {
  auto row_it = rows_.find(s);
  if (row_it == rows_.end()) return 0;
  const Row& row = row_it->second;
  ActionIndex best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (ActionIndex a = 0; a < action_count_; ++a) {
    auto it = row.find(a);
    const double v = it == row.end() ? initial_value_ : it->second;
    if (v < best_value) {
      best_value = v;
      best = a;
    }
  }
  return best;
}

double learning_rate(std::uint64_t t) {
  return 1.0 / std::sqrt(static_cast<double>(t) + 2.0);
}

CacheAction select_action(const QTable& table, StateId s, const ActionSpace& space,
                          double epsilon, Rng& rng) {
  if (uniform01(rng) < epsilon) return space.random(rng);
  return space.unrank(table.argmin(s));
}

QUpdate update(QTable& table, StateId s, ActionIndex a, double r, StateId s_next,
               std::uint64_t t, double gamma) {
  const double current = table.get(s, a);
  const double target = r + gamma * table.min_value(s_next);
  QUpdate out;
  out.td = target - current;
  out.new_value = current + learning_rate(t) * out.td;
  if (!std::isfinite(out.td) || !std::isfinite(out.new_value)) {
    throw NumericalError("q-learning update produced a non-finite value");
  }
  table.set(s, a, out.new_value);
  return out;
}

TabularAgent::TabularAgent(const ActionSpace& space, std::size_t popularity_states,
                           std::size_t preference_states, TabularOptions options,
                           std::uint64_t seed)
    : space_(space),
      options_(options),
      quantizer_(popularity_states, preference_states, options.quantizer),
      table_(space.size(), options.initial_q),
      rng_(make_rng(seed, Stream::kAgent)) {
  // Nothing observed yet: the empty table's greedy choice is index 0.
  committed_ = select_action(table_, 0, space_, options_.epsilon.at(0), rng_);
  committed_index_ = space_.rank(committed_);
}

double TabularAgent::serve(const RequestBatch& batch) {
  return hit_rate(batch.counts, committed_);
}

StateId TabularAgent::current_state_id(const QuantizedState& s) const {
  return state_id(s, quantizer_.popularity_states(), quantizer_.preference_states());
}

StepOutcome TabularAgent::end_slot(const Observation& obs, const ChainIndices& truth,
                                   double reward, std::uint64_t slot) {
  QuantizedState s = quantizer_.quantize(obs, truth);
  if (options_.state_includes_prev_action) s.prev_action = committed_index_;
  const StateId next = current_state_id(s);

  StepOutcome out;
  if (last_state_) {
    std::uint64_t t = updates_++;
    if (options_.step_clock == StepClock::kPairVisits) {
      t = visits_[*last_state_ * space_.size() + committed_index_]++;
    }
    const QUpdate u = update(table_, *last_state_, committed_index_, reward, next, t,
                             options_.gamma);
    out.discrepancy = u.td * u.td;
  }

  const auto start = std::chrono::steady_clock::now();
  committed_ = select_action(table_, next, space_, options_.epsilon.at(slot), rng_);
  committed_index_ = space_.rank(committed_);
  const auto stop = std::chrono::steady_clock::now();
  out.select_micros = std::chrono::duration<double, std::micro>(stop - start).count();

  last_state_ = next;
  return out;
}

CacheAction TabularAgent::greedy() const {
  return space_.unrank(table_.argmin(last_state_.value_or(0)));
}

}  // namespace edgecache
