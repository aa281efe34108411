#include "edgecache/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "edgecache/errors.hpp"
#include "edgecache/tabular_agent.hpp"
#include "edgecache/vfa_agent.hpp"

namespace edgecache {

namespace fs = std::filesystem;

std::unique_ptr<CachePolicy> make_policy(const ExperimentConfig& config,
                                         std::string_view agent, std::uint64_t seed) {
  const ActionSpace space(config.contents, config.capacity);
  if (agent == "q-vfa") return std::make_unique<VfaAgent>(space, config.vfa_options(), seed);
  if (agent == "q-tabular") {
    return std::make_unique<TabularAgent>(space, config.popularity_states(),
                                          config.preference_states(),
                                          config.tabular_options(), seed);
  }
  if (agent == "lru") return std::make_unique<LruPolicy>(config.capacity);
  if (agent == "lfu") return std::make_unique<LfuPolicy>(config.capacity);
  throw ConfigError("unknown agent '" + std::string(agent) + "'");
}

std::uint64_t hash_batch(std::uint64_t h, const RequestBatch& batch) {
  constexpr std::uint64_t kPrime = 1099511628211ull;
  auto mix = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= kPrime;
    }
  };
  mix(batch.slot);
  mix(batch.per_user.size());
  for (const auto& r : batch.per_user) {
    mix(r.user_id);
    mix(r.content);
  }
  return h;
}

double steady_state(const std::vector<double>& hit_rates, double fraction) {
  if (hit_rates.empty()) return 0.0;
  auto tail = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(hit_rates.size())));
  tail = std::clamp<std::size_t>(tail, 1, hit_rates.size());
  double sum = 0.0;
  for (std::size_t i = hit_rates.size() - tail; i < hit_rates.size(); ++i) sum += hit_rates[i];
  return sum / static_cast<double>(tail);
}

std::optional<std::size_t> convergence_window(const std::vector<WindowRecord>& windows,
                                              double fraction) {
  if (windows.empty() || !windows.front().mean_discrepancy) return std::nullopt;
  const double threshold = fraction * *windows.front().mean_discrepancy;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& d = windows[i].mean_discrepancy;
    if (d && *d < threshold) return i;
  }
  return std::nullopt;
}

namespace {

void validate_for_run(const ExperimentConfig& config) {
  if (config.slots == 0) {
    ExperimentConfig probe = config;
    probe.slots = 1;
    probe.validate();
  } else {
    config.validate();
  }
}

struct WindowAccumulator {
  std::uint64_t start = 0;
  std::size_t slots = 0;
  double hit_sum = 0.0;
  double disc_sum = 0.0;
  std::size_t disc_count = 0;
  double micros_sum = 0.0;
};

}  // namespace

RunResult run_episode(const ExperimentConfig& config, std::string_view agent,
                      std::uint64_t seed, const SlotObserver& observer) {
  validate_for_run(config);
  auto policy = make_policy(config, agent, seed);
  return run_episode(config, *policy, seed, observer);
}

RunResult run_episode(const ExperimentConfig& config, CachePolicy& policy,
                      std::uint64_t seed, const SlotObserver& observer) {
  validate_for_run(config);
  Environment env(config.environment(), seed);

  RunResult result;
  result.summary.agent = policy.name();
  result.summary.seed = seed;
  result.summary.slots = config.slots;
  result.summary.request_stream_hash = 14695981039346656037ull;
  result.hit_rates.reserve(config.slots);

  double hit_total = 0.0;
  double reward_total = 0.0;
  WindowAccumulator acc;

  auto flush = [&](std::uint64_t slots_done) {
    WindowRecord w;
    w.window_start = acc.start;
    w.avg_hit_rate = acc.hit_sum / static_cast<double>(acc.slots);
    if (acc.disc_count > 0) w.mean_discrepancy = acc.disc_sum / static_cast<double>(acc.disc_count);
    w.cum_avg_reward = reward_total / static_cast<double>(slots_done);
    w.action_select_micros = acc.micros_sum / static_cast<double>(acc.slots);
    result.windows.push_back(w);
    acc = WindowAccumulator{};
    acc.start = slots_done;
  };

  for (std::uint64_t t = 0; t < config.slots; ++t) {
    const RequestBatch& batch = env.next_slot();
    result.summary.request_stream_hash = hash_batch(result.summary.request_stream_hash, batch);
    result.summary.fallback_users += batch.fallback_users;

    const double theta = policy.serve(batch);
    const double r = reward(theta);
    const Observation obs = env.observe();
    if (obs.empty_batch) ++result.summary.empty_slots;

    StepOutcome outcome;
    try {
      outcome = policy.end_slot(obs, env.hidden_state(), r, t);
    } catch (const NumericalError& e) {
      const auto truth = env.hidden_state();
      std::ostringstream msg;
      msg << e.what() << " [agent=" << policy.name() << " seed=" << seed << " slot=" << t
          << " reward=" << format_number(r) << " popularity_state=" << truth.popularity
          << " preference_state=" << truth.preference << "]";
      throw NumericalError(msg.str());
    }

    result.hit_rates.push_back(theta);
    hit_total += theta;
    reward_total += r;
    acc.slots += 1;
    acc.hit_sum += theta;
    acc.micros_sum += outcome.select_micros;
    if (outcome.discrepancy) {
      acc.disc_sum += *outcome.discrepancy;
      acc.disc_count += 1;
    }
    if (observer) observer(SlotTrace{t, theta, r, &outcome, &env, &policy});
    if (acc.slots == config.window) flush(t + 1);
  }
  if (acc.slots > 0) flush(config.slots);

  if (config.slots > 0) {
    result.summary.steady_hit_rate = steady_state(result.hit_rates, config.steady_fraction);
    result.summary.mean_hit_rate = hit_total / static_cast<double>(config.slots);
    result.summary.cum_avg_reward = reward_total / static_cast<double>(config.slots);
  }
  result.summary.convergence_window =
      convergence_window(result.windows, config.convergence_fraction);
  return result;
}

namespace {

// Runs jobs [0, n) on up to `threads` workers; the first exception wins and
// is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(n);
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

AgentAggregate aggregate(const std::string& agent, const std::vector<ComparisonRow>& rows) {
  AgentAggregate a;
  a.agent = agent;
  std::vector<double> steady;
  double conv_sum = 0.0;
  for (const auto& r : rows) {
    if (r.agent != agent) continue;
    steady.push_back(r.steady_hit_rate);
    if (r.convergence_window) {
      ++a.converged_runs;
      conv_sum += static_cast<double>(*r.convergence_window);
    }
  }
  if (steady.empty()) return a;
  double sum = 0.0;
  for (double v : steady) sum += v;
  a.steady_mean = sum / static_cast<double>(steady.size());
  if (steady.size() > 1) {
    double ss = 0.0;
    for (double v : steady) ss += (v - a.steady_mean) * (v - a.steady_mean);
    a.steady_std = std::sqrt(ss / static_cast<double>(steady.size() - 1));
  }
  if (a.converged_runs > 0) a.convergence_mean = conv_sum / static_cast<double>(a.converged_runs);
  return a;
}

}  // namespace

const RunResult& Comparison::run(std::string_view agent, std::uint64_t seed) const {
  for (std::size_t a = 0; a < agents.size(); ++a) {
    if (agents[a] != agent) continue;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      if (seeds[s] == seed) return runs[a * seeds.size() + s];
    }
  }
  throw std::out_of_range("comparison has no run for that agent and seed");
}

Comparison compare(const ExperimentConfig& config, const std::vector<std::string>& agents,
                   const std::vector<std::uint64_t>& seeds) {
  config.validate();
  if (seeds.empty()) throw ConfigError("compare: at least one seed is required");
  for (const auto& a : agents) make_policy(config, a, 0);

  Comparison cmp;
  cmp.agents = agents;
  cmp.seeds = seeds;
  std::sort(cmp.seeds.begin(), cmp.seeds.end());
  cmp.runs.resize(agents.size() * cmp.seeds.size());
  const std::size_t n_seeds = cmp.seeds.size();
  parallel_for(cmp.runs.size(), config.threads, [&](std::size_t job) {
    cmp.runs[job] = run_episode(config, agents[job / n_seeds], cmp.seeds[job % n_seeds]);
  });

  for (std::size_t s = 0; s < n_seeds; ++s) {
    for (std::size_t a = 0; a < agents.size(); ++a) {
      const auto& run = cmp.runs[a * n_seeds + s];
      if (run.summary.request_stream_hash != cmp.runs[s].summary.request_stream_hash) {
        throw std::logic_error("compare: request streams differ across agents for seed " +
                               std::to_string(cmp.seeds[s]));
      }
      cmp.rows.push_back({agents[a], cmp.seeds[s], run.summary.steady_hit_rate,
                          run.summary.convergence_window});
    }
  }
  for (const auto& a : agents) cmp.aggregates.push_back(aggregate(a, cmp.rows));
  return cmp;
}

std::string sweep_label(SweepDimension dim, std::size_t first, std::size_t second) {
  if (dim == SweepDimension::kLibrary) {
    return "F=" + std::to_string(first) + ",B=" + std::to_string(second);
  }
  return "P=" + std::to_string(first) + ",Q=" + std::to_string(second);
}

ExperimentConfig sweep_point_config(const ExperimentConfig& base, SweepDimension dim,
                                    std::size_t first, std::size_t second) {
  ExperimentConfig c = base;
  c.sweep_dimension = SweepDimension::kNone;
  c.sweep_values.clear();
  if (dim == SweepDimension::kLibrary) {
    c.contents = first;
    c.capacity = second;
  } else if (dim == SweepDimension::kChainStates) {
    c.zipf_betas = respace(base.zipf_betas, first);
    c.preference_alphas = respace(base.preference_alphas, second);
  }
  c.validate();
  return c;
}

std::vector<SweepPoint> sweep(const ExperimentConfig& config, SweepDimension dim,
                              const std::vector<std::pair<std::size_t, std::size_t>>& values) {
  if (dim == SweepDimension::kNone) throw ConfigError("sweep: no sweep dimension given");
  std::vector<SweepPoint> points;
  for (auto [first, second] : values) {
    SweepPoint p;
    p.label = sweep_label(dim, first, second);
    p.first = first;
    p.second = second;
    p.config = sweep_point_config(config, dim, first, second);
    p.comparison = compare(p.config, p.config.agents, p.config.seeds);
    points.push_back(std::move(p));
  }
  return points;
}

void write_run_csv(std::ostream& out, const std::vector<WindowRecord>& windows,
                   bool with_timing) {
  out << "window_start,avg_hit_rate,mean_discrepancy,cum_avg_reward,action_select_micros\n";
  for (const auto& w : windows) {
    out << w.window_start << ',' << format_number(w.avg_hit_rate) << ','
        << (w.mean_discrepancy ? format_number(*w.mean_discrepancy) : "") << ','
        << format_number(w.cum_avg_reward) << ','
        << (with_timing ? format_number(w.action_select_micros) : "") << '\n';
  }
}

void write_run_summary(std::ostream& out, const ExperimentConfig& config,
                       const RunResult& run) {
  const auto& s = run.summary;
  out << "# config\n" << to_text(config) << "# run\n"
      << "agent = " << s.agent << '\n'
      << "seed = " << s.seed << '\n'
      << "slots_run = " << s.slots << '\n'
      << "steady_hit_rate = " << format_number(s.steady_hit_rate) << '\n'
      << "mean_hit_rate = " << format_number(s.mean_hit_rate) << '\n'
      << "cum_avg_reward = " << format_number(s.cum_avg_reward) << '\n'
      << "convergence_window = "
      << (s.convergence_window ? std::to_string(*s.convergence_window) : "none") << '\n'
      << "windows = " << run.windows.size() << '\n'
      << "empty_slots = " << s.empty_slots << '\n'
      << "fallback_users = " << s.fallback_users << '\n'
      << "request_stream_hash = " << s.request_stream_hash << '\n'
      << "weight_update = "
      << (config.td_mode == TdMode::kSignedTd
              ? "signed-td (w += rho * td * z, semi-gradient descent on td^2)"
              : "abs-td (w += rho * |td| * z, sign of td discarded)")
      << '\n';
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << "agent,seed,steady_hit_rate,convergence_window\n";
  for (const auto& r : rows) {
    out << r.agent << ',' << r.seed << ',' << format_number(r.steady_hit_rate) << ','
        << (r.convergence_window ? static_cast<long long>(*r.convergence_window) : -1LL)
        << '\n';
  }
}

namespace {

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

struct ManifestEntry {
  std::string series;
  std::string agent;
  std::uint64_t seed;
  std::string run_csv;
};

void write_runs(const fs::path& dir, const fs::path& rel_dir, const ExperimentConfig& config,
                const Comparison& cmp, const std::string& series_prefix,
                std::vector<ManifestEntry>& manifest) {
  for (std::size_t a = 0; a < cmp.agents.size(); ++a) {
    for (std::size_t s = 0; s < cmp.seeds.size(); ++s) {
      const auto& run = cmp.runs[a * cmp.seeds.size() + s];
      const std::string stem = cmp.agents[a] + "_seed" + std::to_string(cmp.seeds[s]);
      const fs::path rel = rel_dir / (stem + ".csv");
      {
        auto out = open_out(dir / rel);
        write_run_csv(out, run.windows, config.record_timing);
      }
      {
        auto out = open_out(dir / rel_dir / (stem + ".summary"));
        write_run_summary(out, config, run);
      }
      const std::string series =
          series_prefix.empty() ? cmp.agents[a] : series_prefix;
      manifest.push_back({series, cmp.agents[a], cmp.seeds[s], rel.generic_string()});
    }
  }
}

void write_manifest(const fs::path& path, const std::string& kind,
                    const std::vector<ManifestEntry>& entries) {
  auto out = open_out(path);
  out << "kind,series,agent,seed,run_csv\n";
  for (const auto& e : entries) {
    out << kind << ',' << '"' << e.series << '"' << ',' << e.agent << ',' << e.seed << ','
        << e.run_csv << '\n';
  }
}

}  // namespace

void write_comparison_outputs(const fs::path& dir, const ExperimentConfig& config,
                              const Comparison& cmp) {
  {
    auto out = open_out(dir / "comparison.csv");
    write_comparison_csv(out, cmp.rows);
  }
  std::vector<ManifestEntry> manifest;
  write_runs(dir, "runs", config, cmp, "", manifest);
  write_manifest(dir / "manifest.csv", "compare", manifest);
}

void write_sweep_outputs(const fs::path& dir, SweepDimension dim, const std::vector<SweepPoint>& points) {
  std::vector<ManifestEntry> manifest;
  {
    auto out = open_out(dir / "sweep.csv");
    out << "grid_point,agent,seed,steady_hit_rate,convergence_window\n";
    for (const auto& p : points) {
      for (const auto& r : p.comparison.rows) {
        out << '"' << p.label << '"' << ',' << r.agent << ',' << r.seed << ','
            << format_number(r.steady_hit_rate) << ','
            << (r.convergence_window ? static_cast<long long>(*r.convergence_window) : -1LL)
            << '\n';
      }
    }
  }
  for (const auto& p : points) {
    std::string dir_name = p.label;
    std::replace(dir_name.begin(), dir_name.end(), ',', '_');
    std::replace(dir_name.begin(), dir_name.end(), '=', '-');
    // With several agents per point the series is "<label> <agent>".
    const bool single_agent = p.comparison.agents.size() == 1;
    std::vector<ManifestEntry> point_entries;
    write_runs(dir, fs::path("runs") / dir_name, p.config, p.comparison,
               single_agent ? p.label : "", point_entries);
    for (auto& e : point_entries) {
      if (!single_agent) e.series = p.label + " " + e.agent;
      manifest.push_back(std::move(e));
    }
  }
  write_manifest(dir / "manifest.csv", dim == SweepDimension::kLibrary ? "sweep-FxB" : "sweep-PxQ",
                 manifest);
}

}  // namespace edgecache
