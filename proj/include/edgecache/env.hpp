#pragma once

// Request-stream environment: a content catalog, two hidden Markov chains
// (Zipf popularity regimes and preference strength), a churning user group,
// and per-slot request batches.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "edgecache/random.hpp"

namespace edgecache {

using Vector = std::vector<double>;
using TransitionMatrix = std::vector<std::vector<double>>;

enum class KernelForm {
  kSquaredDistance,  // (1 - |x-y|^2/M)^(-ln(1-alpha)); range [0,1]
  kLiteral,          // (1 - <x,y>)^(ln(1-alpha)); may leave [0,1]
};

// User/content affinity. Throws DomainError for alpha outside [0,1) and
// DimensionError when x and y differ in length.
double kernel(std::span<const double> x, std::span<const double> y,
              double alpha, KernelForm form = KernelForm::kSquaredDistance);

struct ContentCatalog {
  std::size_t feature_dim = 0;
  std::vector<Vector> features;

  std::size_t size() const { return features.size(); }

  static ContentCatalog random(std::size_t contents, std::size_t feature_dim,
                               Rng& rng);
  void validate() const;
};

struct PopularityState {
  double zipf_beta = 1.0;
  // rank_of[f] is the 1-based popularity rank of content f.
  std::vector<std::size_t> rank_of;
};

struct PopularityChain {
  std::vector<PopularityState> states;
  TransitionMatrix transition;
  std::size_t current = 0;

  void validate() const;
};

struct PreferenceChain {
  std::vector<double> alphas;
  TransitionMatrix transition;
  std::size_t current = 0;

  void validate() const;
};

// Rows: stay with probability `stay`, otherwise move uniformly to another
// state. A single state is absorbing.
TransitionMatrix sticky_transition(std::size_t states, double stay);

// Row-stochastic within 1e-12, square, non-negative.
void validate_transition(const TransitionMatrix& m, std::size_t states,
                         std::string_view what);

// Zipf law over ranks: rank k gets (1/k^beta) / sum_j (1/j^beta).
Vector ground_truth_popularity(const PopularityState& state);

std::size_t step_chain(const TransitionMatrix& transition, std::size_t current,
                       Rng& rng);

struct ChainIndices {
  std::size_t popularity = 0;
  std::size_t preference = 0;
};

// Each chain samples from its own transition row; popularity first.
ChainIndices advance_chains(PopularityChain& popularity,
                            PreferenceChain& preference, Rng& rng);

struct User {
  std::uint64_t id = 0;
  Vector characteristic;
};

struct UserPopulation {
  std::vector<User> users;
  double turnover_prob = 0.0;
  std::size_t target_size = 0;
  std::size_t feature_dim = 0;
  std::uint64_t next_id = 0;

  static UserPopulation fresh(std::size_t size, std::size_t feature_dim,
                              double turnover_prob, Rng& rng);
};

// Every user leaves independently with turnover_prob, then newcomers with
// uniform characteristics restore the target size. Returns the number of
// departures.
std::size_t churn_users(UserPopulation& population, Rng& rng);

struct Request {
  std::uint64_t user_id = 0;
  std::size_t content = 0;
};

struct RequestBatch {
  std::uint64_t slot = 0;
  std::vector<std::uint64_t> counts;
  std::vector<Request> per_user;  // arrival order
  // Users whose mixed weights were all zero and who fell back to the
  // ground-truth popularity.
  std::size_t fallback_users = 0;

  std::uint64_t total() const;
};

struct RequestModel {
  double requests_per_user = 5.0;
  double mix_lambda = 0.5;
  KernelForm kernel_form = KernelForm::kSquaredDistance;
};

// Per-user content law: weight_f = p_f^lambda * g(x, y_f, alpha)^(1-lambda),
// renormalized. Sets `fallback` (if given) and returns `popularity` when
// every weight is zero or non-finite.
Vector user_request_distribution(const ContentCatalog& catalog,
                                 std::span<const double> popularity,
                                 std::span<const double> characteristic,
                                 double alpha, const RequestModel& model,
                                 bool* fallback = nullptr);

RequestBatch generate_requests(const ContentCatalog& catalog,
                               const PopularityState& popularity_state,
                               double alpha, const UserPopulation& users,
                               const RequestModel& model, std::uint64_t slot,
                               Rng& rng);

struct Observation {
  Vector popularity;
  Vector preference;
  std::size_t group_size = 0;
  bool empty_batch = false;

  std::size_t size() const { return popularity.size(); }
};

Observation observe(const RequestBatch& batch, const UserPopulation& users,
                    const ContentCatalog& catalog, double alpha,
                    KernelForm form = KernelForm::kSquaredDistance);

// CSV rows (slot,user_id,content_id); content ids are 0-based.
void write_request_log_header(std::ostream& out);
void write_request_log(std::ostream& out, const RequestBatch& batch);

struct EnvironmentParams {
  std::size_t contents = 20;
  std::size_t feature_dim = 3;
  std::size_t users = 20;
  std::vector<double> zipf_betas{0.8, 1.0, 1.2, 1.4};
  std::vector<double> preference_alphas{0.0, 0.2, 0.4, 0.6, 0.8};
  TransitionMatrix popularity_transition = sticky_transition(4, 0.8);
  TransitionMatrix preference_transition = sticky_transition(5, 0.8);
  double turnover_prob = 0.1;
  RequestModel request_model;

  void validate() const;
};

// One environment realization. Catalog features, rank permutations, the
// initial chain states and users are all drawn from the seed's environment
// stream at construction.
class Environment {
 public:
  Environment(const EnvironmentParams& params, std::uint64_t seed);

  // Advance chains, churn users, generate the slot's requests.
  const RequestBatch& next_slot();

  Observation observe() const;
  ChainIndices hidden_state() const;
  Vector true_popularity() const;
  double current_alpha() const;

  const ContentCatalog& catalog() const { return catalog_; }
  const UserPopulation& users() const { return users_; }
  const PopularityChain& popularity_chain() const { return popularity_; }
  const PreferenceChain& preference_chain() const { return preference_; }
  const RequestBatch& last_batch() const { return batch_; }
  const EnvironmentParams& params() const { return params_; }

 private:
  EnvironmentParams params_;
  Rng rng_;
  ContentCatalog catalog_;
  PopularityChain popularity_;
  PreferenceChain preference_;
  UserPopulation users_;
  RequestBatch batch_;
  std::uint64_t slot_ = 0;
};

}  // namespace edgecache
