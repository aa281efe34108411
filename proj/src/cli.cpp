#include "edgecache/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "edgecache/config.hpp"
#include "edgecache/errors.hpp"
#include "edgecache/harness.hpp"
#include "edgecache/plot_data.hpp"

namespace edgecache {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::string out_dir = "results";
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> agents;
  int figure = 0;
};

ExperimentConfig load_with_overrides(const Options& o) {
  ExperimentConfig config = load_config(o.config_path);
  if (!o.seeds.empty()) config.seeds = o.seeds;
  if (!o.agents.empty()) config.agents = o.agents;
  config.validate();
  return config;
}

void print_aggregates(std::ostream& out, const Comparison& cmp) {
  for (const auto& a : cmp.aggregates) {
    out << a.agent << ": steady_hit_rate " << format_number(a.steady_mean) << " +- "
        << format_number(a.steady_std) << ", converged " << a.converged_runs << "/"
        << cmp.seeds.size();
    if (a.converged_runs > 0) out << " (mean window " << format_number(a.convergence_mean) << ")";
    out << '\n';
  }
}

int cmd_run(const Options& o, std::ostream& out) {
  const ExperimentConfig config = load_with_overrides(o);
  const std::string agent = config.agents.front();
  for (auto seed : config.seeds) {
    const RunResult run = run_episode(config, agent, seed);
    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    const std::string stem = agent + "_seed" + std::to_string(seed);
    {
      std::ofstream csv(dir / (stem + ".csv"), std::ios::binary);
      write_run_csv(csv, run.windows, config.record_timing);
    }
    {
      std::ofstream summary(dir / (stem + ".summary"), std::ios::binary);
      write_run_summary(summary, config, run);
    }
    out << agent << " seed " << seed << ": steady_hit_rate "
        << format_number(run.summary.steady_hit_rate) << ", convergence_window "
        << (run.summary.convergence_window ? std::to_string(*run.summary.convergence_window)
                                           : "none")
        << '\n';
  }
  return kExitOk;
}

int cmd_compare(const Options& o, std::ostream& out) {
  const ExperimentConfig config = load_with_overrides(o);
  const Comparison cmp = compare(config, config.agents, config.seeds);
  write_comparison_outputs(o.out_dir, config, cmp);
  print_aggregates(out, cmp);
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const ExperimentConfig config = load_with_overrides(o);
  if (config.sweep_dimension == SweepDimension::kNone) {
    throw ConfigError("sweep: config needs sweep_dimension and sweep_values");
  }
  const auto points = sweep(config, config.sweep_dimension, config.sweep_values);
  write_sweep_outputs(o.out_dir, config.sweep_dimension, points);
  for (const auto& p : points) {
    out << "[" << p.label << "]\n";
    print_aggregates(out, p.comparison);
  }
  return kExitOk;
}

int cmd_validate(const Options& o, std::ostream& out) {
  out << to_text(load_with_overrides(o));
  return kExitOk;
}

int cmd_emit(const Options& o, std::ostream& out) {
  const fs::path dir(o.out_dir);
  const fs::path target = dir / ("figure" + std::to_string(o.figure) + ".csv");
  {
    std::ofstream file(target, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + target.string());
    emit_plot_data(dir, o.figure, file);
  }
  out << "wrote " << target.generic_string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Edge caching simulator with Q-learning and Q-VFA agents", "edgecache"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
  };
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  };
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seeds, "Seed override (repeatable)");
    sub->add_option("--agent", o.agents, "Agent override (repeatable)")
        ->check(CLI::IsMember(known_agents()));
  };

  auto* run = app.add_subcommand("run", "Run one agent per seed");
  add_config(run);
  add_out(run);
  add_overrides(run);
  auto* cmp = app.add_subcommand("compare", "Run every agent on paired seeds");
  add_config(cmp);
  add_out(cmp);
  add_overrides(cmp);
  auto* swp = app.add_subcommand("sweep", "Compare across a PxQ or FxB grid");
  add_config(swp);
  add_out(swp);
  add_overrides(swp);
  auto* val = app.add_subcommand("validate", "Check a config and echo resolved values");
  add_config(val);
  add_overrides(val);
  auto* emit = app.add_subcommand("emit-plot-data", "Figure data from compare/sweep output");
  emit->add_option("--out", o.out_dir, "Results directory to read and write into")
      ->required()
      ->check(CLI::ExistingDirectory);
  emit->add_option("--figure", o.figure, "Figure number")
      ->required()
      ->check(CLI::IsMember({3, 4, 5, 6}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(o, out);
    if (*cmp) return cmd_compare(o, out);
    if (*swp) return cmd_sweep(o, out);
    if (*val) return cmd_validate(o, out);
    if (*emit) return cmd_emit(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitConfig;
}

}  // namespace edgecache
