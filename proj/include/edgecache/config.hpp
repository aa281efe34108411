#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edgecache/env.hpp"
#include "edgecache/policy.hpp"
#include "edgecache/tabular_agent.hpp"
#include "edgecache/vfa_agent.hpp"

namespace edgecache {

// Either the sticky shorthand (stay probability, rest spread uniformly) or an
// explicit matrix.
struct TransitionSpec {
  std::optional<double> sticky_stay = 0.8;
  TransitionMatrix matrix;

  TransitionMatrix resolve(std::size_t states) const;
  std::string to_string() const;
};

enum class SweepDimension { kNone, kChainStates, kLibrary };

struct ExperimentConfig {
  // environment
  std::size_t contents = 20;
  std::size_t capacity = 5;
  std::size_t feature_dim = 3;
  std::size_t users = 20;
  std::uint64_t slots = 20000;
  std::vector<double> zipf_betas{0.8, 1.0, 1.2, 1.4};
  std::vector<double> preference_alphas{0.0, 0.2, 0.4, 0.6, 0.8};
  TransitionSpec popularity_transition;
  TransitionSpec preference_transition;
  double turnover_prob = 0.1;
  double requests_per_user = 5.0;
  double mix_lambda = 0.5;
  KernelForm kernel_form = KernelForm::kSquaredDistance;

  // learning
  double gamma = 0.9;
  double rho = 0.005;
  EpsilonSchedule epsilon;
  TdMode td_mode = TdMode::kSignedTd;
  StateQuantizer::Options quantizer;
  double tabular_initial_q = 0.0;
  StepClock tabular_step_clock = StepClock::kPairVisits;
  bool state_includes_prev_action = false;

  // experiment
  std::vector<std::string> agents{"q-vfa", "q-tabular", "lru", "lfu"};
  std::vector<std::uint64_t> seeds{1};
  std::size_t window = 100;
  double steady_fraction = 0.1;
  double convergence_fraction = 0.1;
  bool record_timing = false;
  std::size_t threads = 0;  // 0: hardware concurrency

  SweepDimension sweep_dimension = SweepDimension::kNone;
  std::vector<std::pair<std::size_t, std::size_t>> sweep_values;

  std::size_t popularity_states() const { return zipf_betas.size(); }
  std::size_t preference_states() const { return preference_alphas.size(); }

  // Throws ConfigError on any violated invariant.
  void validate() const;

  EnvironmentParams environment() const;
  TabularOptions tabular_options() const;
  VfaOptions vfa_options() const;
};

inline const std::vector<std::string>& known_agents() {
  static const std::vector<std::string> names{"q-vfa", "q-tabular", "lru", "lfu"};
  return names;
}

// Parses `key = value` lines; '#' starts a comment. Unknown or repeated keys,
// malformed values and invariant violations throw ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

// Every key with its resolved value, one per line, in a fixed order.
std::string to_text(const ExperimentConfig& config);

// Shortest round-trip decimal form.
std::string format_number(double v);

std::string to_string(SweepDimension d);
std::string to_string(TdMode m);
std::string to_string(QuantizerMode m);
std::string to_string(StepClock s);
std::string to_string(KernelForm k);

// `k` evenly spaced values spanning [min(values), max(values)].
std::vector<double> respace(const std::vector<double>& values, std::size_t k);

}  // namespace edgecache
