#include "edgecache/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "edgecache/errors.hpp"

namespace edgecache {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value,
                            std::string_view expected) {
  std::ostringstream msg;
  msg << "config: key '" << key << "' has invalid value '" << value << "' (expected "
      << expected << ")";
  throw ConfigError(msg.str());
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    bad_value(key, v, "a number");
  }
  return out;
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    bad_value(key, v, "a non-negative integer");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::vector<double> parse_doubles(std::string_view key, std::string_view v) {
  std::vector<double> out;
  for (auto part : split(v, ',')) out.push_back(parse_double(key, part));
  return out;
}

TransitionSpec parse_transition(std::string_view key, std::string_view v) {
  TransitionSpec spec;
  if (v == "sticky") return spec;
  if (v.starts_with("sticky:")) {
    spec.sticky_stay = parse_double(key, trim(v.substr(7)));
    return spec;
  }
  spec.sticky_stay.reset();
  for (auto row : split(v, ';')) spec.matrix.push_back(parse_doubles(key, row));
  return spec;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_pairs(std::string_view key,
                                                             std::string_view v) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto part : split(v, ',')) {
    const auto x = part.find('x');
    if (x == std::string_view::npos) bad_value(key, part, "pairs like 10x3");
    out.emplace_back(parse_uint(key, trim(part.substr(0, x))),
                     parse_uint(key, trim(part.substr(x + 1))));
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values, auto&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += fmt(values[i]);
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view key, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"contents", [](auto& c, auto k, auto v) { c.contents = parse_uint(k, v); }},
      {"capacity", [](auto& c, auto k, auto v) { c.capacity = parse_uint(k, v); }},
      {"feature_dim", [](auto& c, auto k, auto v) { c.feature_dim = parse_uint(k, v); }},
      {"users", [](auto& c, auto k, auto v) { c.users = parse_uint(k, v); }},
      {"slots", [](auto& c, auto k, auto v) { c.slots = parse_uint(k, v); }},
      {"zipf_betas", [](auto& c, auto k, auto v) { c.zipf_betas = parse_doubles(k, v); }},
      {"preference_alphas",
       [](auto& c, auto k, auto v) { c.preference_alphas = parse_doubles(k, v); }},
      {"popularity_transition",
       [](auto& c, auto k, auto v) { c.popularity_transition = parse_transition(k, v); }},
      {"preference_transition",
       [](auto& c, auto k, auto v) { c.preference_transition = parse_transition(k, v); }},
      {"turnover_prob", [](auto& c, auto k, auto v) { c.turnover_prob = parse_double(k, v); }},
      {"requests_per_user",
       [](auto& c, auto k, auto v) { c.requests_per_user = parse_double(k, v); }},
      {"mix_lambda", [](auto& c, auto k, auto v) { c.mix_lambda = parse_double(k, v); }},
      {"kernel",
       [](auto& c, auto k, auto v) {
         if (v == "distance") c.kernel_form = KernelForm::kSquaredDistance;
         else if (v == "literal") c.kernel_form = KernelForm::kLiteral;
         else bad_value(k, v, "distance or literal");
       }},
      {"gamma", [](auto& c, auto k, auto v) { c.gamma = parse_double(k, v); }},
      {"rho", [](auto& c, auto k, auto v) { c.rho = parse_double(k, v); }},
      {"epsilon_start", [](auto& c, auto k, auto v) { c.epsilon.start = parse_double(k, v); }},
      {"epsilon_decay", [](auto& c, auto k, auto v) { c.epsilon.decay = parse_double(k, v); }},
      {"epsilon_floor", [](auto& c, auto k, auto v) { c.epsilon.floor = parse_double(k, v); }},
      {"td_mode",
       [](auto& c, auto k, auto v) {
         if (v == "signed-td") c.td_mode = TdMode::kSignedTd;
         else if (v == "abs-td") c.td_mode = TdMode::kAbsoluteTd;
         else bad_value(k, v, "signed-td or abs-td");
       }},
      {"quantizer",
       [](auto& c, auto k, auto v) {
         if (v == "oracle") c.quantizer.mode = QuantizerMode::kOracle;
         else if (v == "nearest-centroid") c.quantizer.mode = QuantizerMode::kNearestCentroid;
         else bad_value(k, v, "oracle or nearest-centroid");
       }},
      {"quantizer_update_rate",
       [](auto& c, auto k, auto v) { c.quantizer.update_rate = parse_double(k, v); }},
      {"quantizer_popularity_spawn",
       [](auto& c, auto k, auto v) {
         c.quantizer.popularity_spawn_distance = parse_double(k, v);
       }},
      {"quantizer_preference_spawn",
       [](auto& c, auto k, auto v) {
         c.quantizer.preference_spawn_distance = parse_double(k, v);
       }},
      {"tabular_initial_q",
       [](auto& c, auto k, auto v) { c.tabular_initial_q = parse_double(k, v); }},
      {"tabular_step_clock",
       [](auto& c, auto k, auto v) {
         if (v == "visits") c.tabular_step_clock = StepClock::kPairVisits;
         else if (v == "global") c.tabular_step_clock = StepClock::kGlobal;
         else bad_value(k, v, "visits or global");
       }},
      {"state_includes_prev_action",
       [](auto& c, auto k, auto v) { c.state_includes_prev_action = parse_bool(k, v); }},
      {"agents",
       [](auto& c, auto k, auto v) {
         c.agents.clear();
         for (auto a : split(v, ',')) {
           if (std::find(known_agents().begin(), known_agents().end(), a) ==
               known_agents().end()) {
             bad_value(k, a, "q-vfa, q-tabular, lru or lfu");
           }
           c.agents.emplace_back(a);
         }
       }},
      {"seeds",
       [](auto& c, auto k, auto v) {
         c.seeds.clear();
         for (auto s : split(v, ',')) c.seeds.push_back(parse_uint(k, s));
       }},
      {"window", [](auto& c, auto k, auto v) { c.window = parse_uint(k, v); }},
      {"steady_fraction",
       [](auto& c, auto k, auto v) { c.steady_fraction = parse_double(k, v); }},
      {"convergence_fraction",
       [](auto& c, auto k, auto v) { c.convergence_fraction = parse_double(k, v); }},
      {"record_timing", [](auto& c, auto k, auto v) { c.record_timing = parse_bool(k, v); }},
      {"threads", [](auto& c, auto k, auto v) { c.threads = parse_uint(k, v); }},
      {"sweep_dimension",
       [](auto& c, auto k, auto v) {
         if (v == "none") c.sweep_dimension = SweepDimension::kNone;
         else if (v == "PxQ") c.sweep_dimension = SweepDimension::kChainStates;
         else if (v == "FxB") c.sweep_dimension = SweepDimension::kLibrary;
         else bad_value(k, v, "none, PxQ or FxB");
       }},
      {"sweep_values",
       [](auto& c, auto k, auto v) {
         c.sweep_values = v.empty() ? decltype(c.sweep_values){} : parse_pairs(k, v);
       }},
  };
  return table;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

}  // namespace

TransitionMatrix TransitionSpec::resolve(std::size_t states) const {
  if (sticky_stay) return sticky_transition(states, *sticky_stay);
  return matrix;
}

std::string TransitionSpec::to_string() const {
  if (sticky_stay) return "sticky:" + format_number(*sticky_stay);
  std::string out;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    if (i) out += "; ";
    out += join(matrix[i], format_number);
  }
  return out;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string to_string(SweepDimension d) {
  switch (d) {
    case SweepDimension::kChainStates: return "PxQ";
    case SweepDimension::kLibrary: return "FxB";
    default: return "none";
  }
}

std::string to_string(TdMode m) {
  return m == TdMode::kSignedTd ? "signed-td" : "abs-td";
}

std::string to_string(StepClock s) {
  return s == StepClock::kPairVisits ? "visits" : "global";
}

std::string to_string(QuantizerMode m) {
  return m == QuantizerMode::kOracle ? "oracle" : "nearest-centroid";
}

std::string to_string(KernelForm k) {
  return k == KernelForm::kSquaredDistance ? "distance" : "literal";
}

std::vector<double> respace(const std::vector<double>& values, std::size_t k) {
  if (values.empty() || k == 0) return {};
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(k, lo);
  for (std::size_t i = 1; i < k; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k - 1);
  }
  return out;
}

void ExperimentConfig::validate() const {
  require(contents >= 1, "contents must be >= 1");
  require(contents <= 64, "contents must be <= 64");
  require(capacity <= contents, "capacity must not exceed contents");
  require(users >= 1, "users must be >= 1");
  require(slots >= 1, "slots must be >= 1");
  require(window >= 1, "window must be >= 1");
  require(!seeds.empty(), "at least one seed is required");
  require(!agents.empty(), "at least one agent is required");
  require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0,1]");
  require(rho > 0.0, "rho must be positive");
  require(epsilon.start >= 0.0 && epsilon.start <= 1.0, "epsilon_start outside [0,1]");
  require(epsilon.floor >= 0.0 && epsilon.floor <= 1.0, "epsilon_floor outside [0,1]");
  require(epsilon.decay > 0.0 && epsilon.decay <= 1.0, "epsilon_decay outside (0,1]");
  require(steady_fraction > 0.0 && steady_fraction <= 1.0, "steady_fraction outside (0,1]");
  require(convergence_fraction > 0.0 && convergence_fraction < 1.0,
          "convergence_fraction outside (0,1)");
  require(std::isfinite(tabular_initial_q), "tabular_initial_q must be finite");
  try {
    environment().validate();
    StateQuantizer(popularity_states(), preference_states(), quantizer);
    ActionSpace(contents, capacity);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (sweep_dimension != SweepDimension::kNone) {
    require(!sweep_values.empty(), "sweep_values required when sweep_dimension is set");
    for (auto [a, b] : sweep_values) {
      if (sweep_dimension == SweepDimension::kLibrary) {
        require(a >= 1 && a <= 64 && b <= a, "sweep FxB values need 1 <= B <= F <= 64");
      } else {
        require(a >= 1 && b >= 1, "sweep PxQ values need positive state counts");
        require(popularity_transition.sticky_stay && preference_transition.sticky_stay,
                "PxQ sweeps need sticky transition shorthand");
      }
    }
  }
}

EnvironmentParams ExperimentConfig::environment() const {
  EnvironmentParams p;
  p.contents = contents;
  p.feature_dim = feature_dim;
  p.users = users;
  p.zipf_betas = zipf_betas;
  p.preference_alphas = preference_alphas;
  p.popularity_transition = popularity_transition.resolve(zipf_betas.size());
  p.preference_transition = preference_transition.resolve(preference_alphas.size());
  p.turnover_prob = turnover_prob;
  p.request_model.requests_per_user = requests_per_user;
  p.request_model.mix_lambda = mix_lambda;
  p.request_model.kernel_form = kernel_form;
  return p;
}

TabularOptions ExperimentConfig::tabular_options() const {
  TabularOptions o;
  o.gamma = gamma;
  o.epsilon = epsilon;
  o.initial_q = tabular_initial_q;
  o.step_clock = tabular_step_clock;
  o.state_includes_prev_action = state_includes_prev_action;
  o.quantizer = quantizer;
  return o;
}

VfaOptions ExperimentConfig::vfa_options() const {
  VfaOptions o;
  o.gamma = gamma;
  o.rho = rho;
  o.epsilon = epsilon;
  o.td_mode = td_mode;
  return o;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config: line " + std::to_string(line_no) + " is not 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto& table = setters();
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("config: unknown key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError("config: key '" + std::string(key) + "' given twice");
    }
    it->second(config, key, value);
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream out;
  auto num = [](double v) { return format_number(v); };
  auto integer = [](std::uint64_t v) { return std::to_string(v); };
  out << "contents = " << c.contents << '\n'
      << "capacity = " << c.capacity << '\n'
      << "feature_dim = " << c.feature_dim << '\n'
      << "users = " << c.users << '\n'
      << "slots = " << c.slots << '\n'
      << "zipf_betas = " << join(c.zipf_betas, num) << '\n'
      << "preference_alphas = " << join(c.preference_alphas, num) << '\n'
      << "popularity_transition = " << c.popularity_transition.to_string() << '\n'
      << "preference_transition = " << c.preference_transition.to_string() << '\n'
      << "turnover_prob = " << num(c.turnover_prob) << '\n'
      << "requests_per_user = " << num(c.requests_per_user) << '\n'
      << "mix_lambda = " << num(c.mix_lambda) << '\n'
      << "kernel = " << to_string(c.kernel_form) << '\n'
      << "gamma = " << num(c.gamma) << '\n'
      << "rho = " << num(c.rho) << '\n'
      << "epsilon_start = " << num(c.epsilon.start) << '\n'
      << "epsilon_decay = " << num(c.epsilon.decay) << '\n'
      << "epsilon_floor = " << num(c.epsilon.floor) << '\n'
      << "td_mode = " << to_string(c.td_mode) << '\n'
      << "quantizer = " << to_string(c.quantizer.mode) << '\n'
      << "quantizer_update_rate = " << num(c.quantizer.update_rate) << '\n'
      << "quantizer_popularity_spawn = " << num(c.quantizer.popularity_spawn_distance) << '\n'
      << "quantizer_preference_spawn = " << num(c.quantizer.preference_spawn_distance) << '\n'
      << "tabular_initial_q = " << num(c.tabular_initial_q) << '\n'
      << "tabular_step_clock = " << to_string(c.tabular_step_clock) << '\n'
      << "state_includes_prev_action = " << (c.state_includes_prev_action ? "true" : "false")
      << '\n'
      << "agents = " << join(c.agents, [](const std::string& s) { return s; }) << '\n'
      << "seeds = " << join(c.seeds, integer) << '\n'
      << "window = " << c.window << '\n'
      << "steady_fraction = " << num(c.steady_fraction) << '\n'
      << "convergence_fraction = " << num(c.convergence_fraction) << '\n'
      << "record_timing = " << (c.record_timing ? "true" : "false") << '\n'
      << "threads = " << c.threads << '\n'
      << "sweep_dimension = " << to_string(c.sweep_dimension) << '\n'
      << "sweep_values = "
      << join(c.sweep_values,
              [](const auto& p) {
                return std::to_string(p.first) + "x" + std::to_string(p.second);
              })
      << '\n';
  return out.str();
}

}  // namespace edgecache
