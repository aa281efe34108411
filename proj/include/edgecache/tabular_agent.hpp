#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "edgecache/caching.hpp"
#include "edgecache/env.hpp"
#include "edgecache/policy.hpp"
#include "edgecache/random.hpp"

namespace edgecache {

struct QuantizedState {
  std::size_t popularity = 0;
  std::size_t preference = 0;
  std::optional<ActionIndex> prev_action;

  friend bool operator==(const QuantizedState&, const QuantizedState&) = default;
};

using StateId = std::uint64_t;

StateId state_id(const QuantizedState& s, std::size_t popularity_states,
                 std::size_t preference_states);

enum class QuantizerMode { kOracle, kNearestCentroid };

// Maps continuous (p, q) observations onto the known number of hidden
// popularity and preference states.
//
// Nearest-centroid mode starts with no prototypes. An observation farther than
// the spawn distance from every existing prototype founds a new one until the
// declared count is reached; otherwise the nearest prototype (lowest index on
// ties) wins and moves toward the observation by `update_rate`.
class StateQuantizer {
 public:
  struct Options {
    QuantizerMode mode = QuantizerMode::kNearestCentroid;
    double update_rate = 0.05;
    double popularity_spawn_distance = 0.3;
    double preference_spawn_distance = 0.08;
  };

  StateQuantizer(std::size_t popularity_states, std::size_t preference_states,
                 Options options);

  // Replace the prototypes (each list must have the declared count).
  void set_centroids(std::vector<Vector> popularity, std::vector<Vector> preference);

  QuantizedState quantize(const Observation& obs, const ChainIndices& truth);

  std::size_t popularity_states() const { return popularity_states_; }
  std::size_t preference_states() const { return preference_states_; }
  const std::vector<Vector>& popularity_centroids() const { return popularity_; }
  const std::vector<Vector>& preference_centroids() const { return preference_; }

 private:
  std::size_t assign(std::vector<Vector>& centroids, std::size_t limit,
                     const Vector& point, double spawn_distance);

  std::size_t popularity_states_;
  std::size_t preference_states_;
  Options options_;
  std::vector<Vector> popularity_;
  std::vector<Vector> preference_;
};

// Sparse action-value table. Unvisited pairs read as `initial_value`.
class QTable {
 public:
  explicit QTable(std::uint64_t action_count, double initial_value = 0.0)
      : action_count_(action_count), initial_value_(initial_value) {}

  double get(StateId s, ActionIndex a) const;
  void set(StateId s, ActionIndex a, double value);

  // Exhaustive scans over all action indices; argmin ties go to the lowest
  // index.
  double min_value(StateId s) const;
  ActionIndex argmin(StateId s) const;

  std::uint64_t action_count() const { return action_count_; }
  double initial_value() const { return initial_value_; }
  std::size_t entry_count() const { return entries_; }
  std::size_t state_count() const { return rows_.size(); }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& [s, row] : rows_) {
      for (const auto& [a, v] : row) fn(s, a, v);
    }
  }

 private:
  using Row = std::unordered_map<ActionIndex, double>;

  std::uint64_t action_count_;
  double initial_value_;
  std::size_t entries_ = 0;
  std::unordered_map<StateId, Row> rows_;
};

// 1 / sqrt(t + 2)
double learning_rate(std::uint64_t t);

CacheAction select_action(const QTable& table, StateId s, const ActionSpace& space,
                          double epsilon, Rng& rng);

struct QUpdate {
  double td = 0.0;         // r + gamma * min Q(s', .) - Q(s, a), before scaling
  double new_value = 0.0;
};

// One Q-learning step with step size learning_rate(t). Throws NumericalError
// on a non-finite result.
QUpdate update(QTable& table, StateId s, ActionIndex a, double r, StateId s_next,
               std::uint64_t t, double gamma);

// Which counter drives the step size 1/sqrt(t + 2): the number of earlier
// updates of the same (state, action) pair, or of any pair.
enum class StepClock { kPairVisits, kGlobal };

struct TabularOptions {
  double gamma = 0.9;
  EpsilonSchedule epsilon;
  double initial_q = 0.0;
  StepClock step_clock = StepClock::kPairVisits;
  bool state_includes_prev_action = false;
  StateQuantizer::Options quantizer;
};

class TabularAgent : public CachePolicy {
 public:
  TabularAgent(const ActionSpace& space, std::size_t popularity_states,
               std::size_t preference_states, TabularOptions options,
               std::uint64_t seed);

  std::string name() const override { return "q-tabular"; }
  double serve(const RequestBatch& batch) override;
  StepOutcome end_slot(const Observation& obs, const ChainIndices& truth,
                       double reward, std::uint64_t slot) override;

  const QTable& table() const { return table_; }
  const CacheAction& committed() const { return committed_; }
  // Greedy action for the state most recently observed.
  CacheAction greedy() const;
  std::uint64_t updates() const { return updates_; }

 private:
  StateId current_state_id(const QuantizedState& s) const;

  ActionSpace space_;
  TabularOptions options_;
  StateQuantizer quantizer_;
  QTable table_;
  Rng rng_;
  CacheAction committed_;
  ActionIndex committed_index_ = 0;
  std::optional<StateId> last_state_;
  std::uint64_t updates_ = 0;
  // keyed by state_id * action_count + action
  std::unordered_map<std::uint64_t, std::uint64_t> visits_;
};

}  // namespace edgecache
