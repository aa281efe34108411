#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edgecache/caching.hpp"
#include "edgecache/config.hpp"
#include "edgecache/env.hpp"
#include "edgecache/policy.hpp"

namespace edgecache {

// Slot-level wrappers around the per-request baselines.
class LruPolicy : public CachePolicy {
 public:
  explicit LruPolicy(std::size_t capacity) : cache_(capacity) {}
  std::string name() const override { return "lru"; }
  double serve(const RequestBatch& batch) override { return cache_.serve(batch); }
  StepOutcome end_slot(const Observation&, const ChainIndices&, double,
                       std::uint64_t) override {
    return {};
  }
  const LruCache& cache() const { return cache_; }

 private:
  LruCache cache_;
};

class LfuPolicy : public CachePolicy {
 public:
  explicit LfuPolicy(std::size_t capacity) : cache_(capacity) {}
  std::string name() const override { return "lfu"; }
  double serve(const RequestBatch& batch) override { return cache_.serve(batch); }
  StepOutcome end_slot(const Observation&, const ChainIndices&, double,
                       std::uint64_t) override {
    return {};
  }
  const LfuCache& cache() const { return cache_; }

 private:
  LfuCache cache_;
};

// Never changes its cache content.
class StaticPolicy : public CachePolicy {
 public:
  StaticPolicy(CacheAction action, std::string name = "static")
      : action_(std::move(action)), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  double serve(const RequestBatch& batch) override { return hit_rate(batch.counts, action_); }
  StepOutcome end_slot(const Observation&, const ChainIndices&, double,
                       std::uint64_t) override {
    return {};
  }

 private:
  CacheAction action_;
  std::string name_;
};

// Throws ConfigError for an unknown agent name.
std::unique_ptr<CachePolicy> make_policy(const ExperimentConfig& config,
                                         std::string_view agent, std::uint64_t seed);

struct WindowRecord {
  std::uint64_t window_start = 0;
  double avg_hit_rate = 0.0;
  std::optional<double> mean_discrepancy;
  double cum_avg_reward = 0.0;
  double action_select_micros = 0.0;
};

struct RunSummary {
  std::string agent;
  std::uint64_t seed = 0;
  std::uint64_t slots = 0;
  double steady_hit_rate = 0.0;
  double mean_hit_rate = 0.0;
  double cum_avg_reward = 0.0;
  std::optional<std::size_t> convergence_window;
  std::uint64_t request_stream_hash = 0;
  std::size_t empty_slots = 0;
  std::size_t fallback_users = 0;
};

struct RunResult {
  std::vector<WindowRecord> windows;
  std::vector<double> hit_rates;  // one per slot
  RunSummary summary;
};

struct SlotTrace {
  std::uint64_t slot = 0;
  double hit_rate = 0.0;
  double reward = 0.0;
  const StepOutcome* outcome = nullptr;
  const Environment* environment = nullptr;
  const CachePolicy* policy = nullptr;
};

using SlotObserver = std::function<void(const SlotTrace&)>;

// One T-slot episode. Per slot: advance chains, churn users, (committed
// action is in place), generate requests, score the slot, observe (p, q),
// let the policy learn and commit the next action.
//
// Throws ConfigError before slot 0 for an invalid config and NumericalError
// (with slot/agent/seed context) when learning state goes non-finite.
RunResult run_episode(const ExperimentConfig& config, std::string_view agent,
                      std::uint64_t seed, const SlotObserver& observer = {});
RunResult run_episode(const ExperimentConfig& config, CachePolicy& policy,
                      std::uint64_t seed, const SlotObserver& observer = {});

// Mean of the final ceil(fraction * T) slot hit rates.
double steady_state(const std::vector<double>& hit_rates, double fraction);

// First window whose mean discrepancy drops below fraction * first window's.
std::optional<std::size_t> convergence_window(const std::vector<WindowRecord>& windows,
                                              double fraction);

struct ComparisonRow {
  std::string agent;
  std::uint64_t seed = 0;
  double steady_hit_rate = 0.0;
  std::optional<std::size_t> convergence_window;
};

struct AgentAggregate {
  std::string agent;
  double steady_mean = 0.0;
  double steady_std = 0.0;
  std::size_t converged_runs = 0;
  double convergence_mean = 0.0;  // over converged runs
};

struct Comparison {
  std::vector<std::string> agents;
  std::vector<std::uint64_t> seeds;
  // runs[a * seeds.size() + s]
  std::vector<RunResult> runs;
  std::vector<ComparisonRow> rows;  // sorted by seed, then agent order
  std::vector<AgentAggregate> aggregates;

  const RunResult& run(std::string_view agent, std::uint64_t seed) const;
};

// Runs every agent on every seed. All agents of one seed see the same request
// stream (verified by hash; a mismatch throws std::logic_error).
Comparison compare(const ExperimentConfig& config,
                   const std::vector<std::string>& agents,
                   const std::vector<std::uint64_t>& seeds);

struct SweepPoint {
  std::string label;  // e.g. "F=20,B=5" or "P=4,Q=5"
  std::size_t first = 0;
  std::size_t second = 0;
  ExperimentConfig config;
  Comparison comparison;
};

// Config for one grid point of a sweep.
ExperimentConfig sweep_point_config(const ExperimentConfig& base, SweepDimension dim,
                                    std::size_t first, std::size_t second);
std::string sweep_label(SweepDimension dim, std::size_t first, std::size_t second);

std::vector<SweepPoint> sweep(const ExperimentConfig& config, SweepDimension dim,
                              const std::vector<std::pair<std::size_t, std::size_t>>& values);

// Output files.
void write_run_csv(std::ostream& out, const std::vector<WindowRecord>& windows,
                   bool with_timing);
void write_run_summary(std::ostream& out, const ExperimentConfig& config,
                       const RunResult& run);
void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);

// Writes comparison.csv, manifest.csv and runs/<agent>_seed<seed>.{csv,summary}.
void write_comparison_outputs(const std::filesystem::path& dir,
                              const ExperimentConfig& config, const Comparison& cmp);
// Writes sweep.csv, manifest.csv and runs/<label>/... for every grid point.
void write_sweep_outputs(const std::filesystem::path& dir, SweepDimension dim,
                         const std::vector<SweepPoint>& points);

// FNV-1a over the request stream of a batch, chained from `h`.
std::uint64_t hash_batch(std::uint64_t h, const RequestBatch& batch);

}  // namespace edgecache
