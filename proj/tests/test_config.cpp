#include <doctest.h>

#include <string>

#include "edgecache/config.hpp"
#include "edgecache/errors.hpp"

using namespace edgecache;

namespace {

std::string shipped(const std::string& name) {
  return std::string(EDGECACHE_SOURCE_DIR) + "/configs/" + name;
}

}  // namespace

TEST_CASE("defaults") {
  const ExperimentConfig c = parse_config("");
  CHECK(c.contents == 20);
  CHECK(c.capacity == 5);
  CHECK(c.popularity_states() == 4);
  CHECK(c.preference_states() == 5);
  CHECK(c.gamma == 0.9);
  CHECK(c.rho == 0.005);
  CHECK(c.slots == 20000);
  CHECK(c.window == 100);
  CHECK(c.td_mode == TdMode::kSignedTd);
  CHECK(c.tabular_step_clock == StepClock::kPairVisits);
}

TEST_CASE("shipped configs parse") {
  for (const char* name :
       {"default.cfg", "stationary.cfg", "sweep_library.cfg", "sweep_states.cfg"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_config(shipped(name)));
  }
  const ExperimentConfig d = load_config(shipped("default.cfg"));
  CHECK(d.seeds.size() == 10);
  CHECK(to_text(d) == to_text(parse_config("seeds = 1,2,3,4,5,6,7,8,9,10")));
}

TEST_CASE("values and comments") {
  const ExperimentConfig c = parse_config(R"(
# comment line
contents = 12   # trailing comment
capacity = 3
zipf_betas = 0.5, 1.5
preference_alphas = 0.1
popularity_transition = 0.9, 0.1; 0.2, 0.8
preference_transition = sticky:0.6
td_mode = abs-td
quantizer = oracle
kernel = literal
tabular_step_clock = global
agents = lru, q-vfa
seeds = 4, 9
record_timing = true
sweep_dimension = FxB
sweep_values = 10x3, 20x5
)");
  CHECK(c.contents == 12);
  CHECK(c.capacity == 3);
  CHECK(c.zipf_betas == std::vector<double>{0.5, 1.5});
  CHECK(c.environment().popularity_transition == TransitionMatrix{{0.9, 0.1}, {0.2, 0.8}});
  CHECK(c.environment().preference_transition == TransitionMatrix{{1.0}});
  CHECK(c.td_mode == TdMode::kAbsoluteTd);
  CHECK(c.quantizer.mode == QuantizerMode::kOracle);
  CHECK(c.kernel_form == KernelForm::kLiteral);
  CHECK(c.tabular_step_clock == StepClock::kGlobal);
  CHECK(c.agents == std::vector<std::string>{"lru", "q-vfa"});
  CHECK(c.seeds == std::vector<std::uint64_t>{4, 9});
  CHECK(c.record_timing);
  CHECK(c.sweep_dimension == SweepDimension::kLibrary);
  CHECK(c.sweep_values == std::vector<std::pair<std::size_t, std::size_t>>{{10, 3}, {20, 5}});
}

TEST_CASE("echo round-trips") {
  const ExperimentConfig d = parse_config(
      "contents = 9\ncapacity = 4\nrho = 0.0125\n"
      "popularity_transition = 0.7, 0.3; 0.4, 0.6\nzipf_betas = 1, 2\n"
      "sweep_dimension = FxB\nsweep_values = 9x2, 12x4\n");
  CHECK(to_text(parse_config(to_text(d))) == to_text(d));
  CHECK(to_text(parse_config(to_text(ExperimentConfig{}))) == to_text(ExperimentConfig{}));
}

TEST_CASE("rejections") {
  const char* bad[] = {
      "unknown_key = 1",
      "contents = 5\ncontents = 6",
      "contents",
      "contents = five",
      "contents = 0",
      "contents = 65",
      "capacity = 30",
      "slots = 0",
      "window = 0",
      "gamma = 0",
      "gamma = 1.5",
      "rho = -1",
      "turnover_prob = 1.5",
      "mix_lambda = -0.1",
      "zipf_betas = 0",
      "preference_alphas = 1",
      "popularity_transition = 0.5, 0.4; 0.5, 0.5",
      "popularity_transition = 1",
      "td_mode = unsigned",
      "quantizer = kmeans",
      "tabular_step_clock = wall",
      "agents = fifo",
      "seeds =",
      "record_timing = maybe",
      "sweep_dimension = FxB",
      "sweep_dimension = FxB\nsweep_values = 3x5",
      "sweep_values = 10-3",
      "epsilon_start = 2",
      "steady_fraction = 0",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_config(text), ConfigError);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/path.cfg"), ConfigError);
}

TEST_CASE("respace") {
  CHECK(respace({0.8, 1.0, 1.2, 1.4}, 2) == std::vector<double>{0.8, 1.4});
  const auto r = respace({0.0, 0.8}, 5);
  REQUIRE(r.size() == 5);
  CHECK(r[2] == doctest::Approx(0.4));
  CHECK(respace({0.3, 0.9}, 1) == std::vector<double>{0.3});
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(1.0 / 3) == "0.3333333333333333");
}
