#include "edgecache/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "edgecache/errors.hpp"

namespace edgecache {

namespace {

constexpr double kRowTolerance = 1e-12;

Vector random_unit_cube(std::size_t dim, Rng& rng) {
  Vector v(dim);
  for (auto& c : v) c = uniform01(rng);
  return v;
}

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

double kernel(std::span<const double> x, std::span<const double> y,
              double alpha, KernelForm form) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw DomainError("kernel: alpha must lie in [0,1)");
  }
  if (x.size() != y.size()) {
    throw DimensionError("kernel: characteristic and feature lengths differ");
  }
  if (form == KernelForm::kLiteral) {
    double inner = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) inner += x[i] * y[i];
    return std::pow(1.0 - inner, std::log1p(-alpha));
  }
  if (x.empty()) return 1.0;
  double dist = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - y[i];
    dist += diff * diff;
  }
  dist = std::min(1.0, dist / static_cast<double>(x.size()));
  // pow(0, 0) == 1 keeps alpha = 0 at exactly 1 even for d = 1.
  return std::pow(1.0 - dist, -std::log1p(-alpha));
}

ContentCatalog ContentCatalog::random(std::size_t contents,
                                      std::size_t feature_dim, Rng& rng) {
  ContentCatalog catalog;
  catalog.feature_dim = feature_dim;
  catalog.features.reserve(contents);
  for (std::size_t f = 0; f < contents; ++f) {
    catalog.features.push_back(random_unit_cube(feature_dim, rng));
  }
  return catalog;
}

void ContentCatalog::validate() const {
  if (features.empty()) throw DomainError("catalog: needs at least one content");
  for (const auto& y : features) {
    if (y.size() != feature_dim) {
      throw DimensionError("catalog: feature vector has wrong dimension");
    }
    if (!std::all_of(y.begin(), y.end(), in_unit_interval)) {
      throw DomainError("catalog: feature coordinate outside [0,1]");
    }
  }
}

TransitionMatrix sticky_transition(std::size_t states, double stay) {
  TransitionMatrix m(states, std::vector<double>(states, 0.0));
  if (states == 1) {
    m[0][0] = 1.0;
    return m;
  }
  const double move = (1.0 - stay) / static_cast<double>(states - 1);
  for (std::size_t i = 0; i < states; ++i) {
    for (std::size_t j = 0; j < states; ++j) m[i][j] = (i == j) ? stay : move;
  }
  return m;
}

void validate_transition(const TransitionMatrix& m, std::size_t states,
                         std::string_view what) {
  std::ostringstream msg;
  if (m.size() != states) {
    msg << what << ": transition matrix has " << m.size() << " rows, expected "
        << states;
    throw DimensionError(msg.str());
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].size() != states) {
      msg << what << ": transition row " << i << " has wrong length";
      throw DimensionError(msg.str());
    }
    double sum = 0.0;
    for (double v : m[i]) {
      if (!(v >= 0.0 && v <= 1.0)) {
        msg << what << ": transition entry outside [0,1] in row " << i;
        throw DomainError(msg.str());
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) {
      msg << what << ": transition row " << i << " sums to " << sum;
      throw DomainError(msg.str());
    }
  }
}

void PopularityChain::validate() const {
  if (states.empty()) throw DomainError("popularity chain: no states");
  validate_transition(transition, states.size(), "popularity chain");
  if (current >= states.size()) throw DomainError("popularity chain: bad state");
  const std::size_t contents = states.front().rank_of.size();
  for (const auto& s : states) {
    if (!(s.zipf_beta > 0.0)) throw DomainError("popularity chain: beta <= 0");
    if (s.rank_of.size() != contents) {
      throw DimensionError("popularity chain: permutation length differs");
    }
    std::vector<std::size_t> sorted = s.rank_of;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      if (sorted[k] != k + 1) {
        throw DomainError("popularity chain: rank permutation is not a bijection");
      }
    }
  }
}

void PreferenceChain::validate() const {
  if (alphas.empty()) throw DomainError("preference chain: no states");
  validate_transition(transition, alphas.size(), "preference chain");
  if (current >= alphas.size()) throw DomainError("preference chain: bad state");
  for (double a : alphas) {
    if (!(a >= 0.0 && a < 1.0)) throw DomainError("preference chain: alpha outside [0,1)");
  }
}

Vector ground_truth_popularity(const PopularityState& state) {
  const std::size_t contents = state.rank_of.size();
  Vector by_rank(contents);
  double norm = 0.0;
  for (std::size_t k = 0; k < contents; ++k) {
    by_rank[k] = 1.0 / std::pow(static_cast<double>(k + 1), state.zipf_beta);
    norm += by_rank[k];
  }
  Vector p(contents);
  for (std::size_t f = 0; f < contents; ++f) {
    p[f] = by_rank[state.rank_of[f] - 1] / norm;
  }
  return p;
}

std::size_t step_chain(const TransitionMatrix& transition, std::size_t current,
                       Rng& rng) {
  const auto& row = transition[current];
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    acc += row[j];
    if (u < acc) return j;
  }
  // u landed in the rounding gap above the final partial sum.
  for (std::size_t j = row.size(); j-- > 0;) {
    if (row[j] > 0.0) return j;
  }
  return current;
}

ChainIndices advance_chains(PopularityChain& popularity,
                            PreferenceChain& preference, Rng& rng) {
  popularity.current = step_chain(popularity.transition, popularity.current, rng);
  preference.current = step_chain(preference.transition, preference.current, rng);
  return {popularity.current, preference.current};
}

UserPopulation UserPopulation::fresh(std::size_t size, std::size_t feature_dim,
                                     double turnover_prob, Rng& rng) {
  UserPopulation pop;
  pop.turnover_prob = turnover_prob;
  pop.target_size = size;
  pop.feature_dim = feature_dim;
  pop.users.reserve(size);
  for (std::size_t n = 0; n < size; ++n) {
    pop.users.push_back({pop.next_id++, random_unit_cube(feature_dim, rng)});
  }
  return pop;
}

std::size_t churn_users(UserPopulation& population, Rng& rng) {
  std::size_t departed = 0;
  std::vector<User> stay;
  stay.reserve(population.target_size);
  for (auto& user : population.users) {
    if (uniform01(rng) < population.turnover_prob) {
      ++departed;
    } else {
      stay.push_back(std::move(user));
    }
  }
  while (stay.size() < population.target_size) {
    stay.push_back({population.next_id++,
                    random_unit_cube(population.feature_dim, rng)});
  }
  population.users = std::move(stay);
  return departed;
}

std::uint64_t RequestBatch::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

Vector user_request_distribution(const ContentCatalog& catalog,
                                 std::span<const double> popularity,
                                 std::span<const double> characteristic,
                                 double alpha, const RequestModel& model,
                                 bool* fallback) {
  const std::size_t contents = catalog.size();
  if (popularity.size() != contents) {
    throw DimensionError("request law: popularity length differs from catalog");
  }
  Vector weights(contents);
  double total = 0.0;
  for (std::size_t f = 0; f < contents; ++f) {
    const double g =
        kernel(characteristic, catalog.features[f], alpha, model.kernel_form);
    double w = std::pow(popularity[f], model.mix_lambda) *
               std::pow(g, 1.0 - model.mix_lambda);
    if (!std::isfinite(w) || w < 0.0) w = 0.0;
    weights[f] = w;
    total += w;
  }
  if (fallback) *fallback = !(total > 0.0);
  if (!(total > 0.0)) return Vector(popularity.begin(), popularity.end());
  for (auto& w : weights) w /= total;
  return weights;
}

RequestBatch generate_requests(const ContentCatalog& catalog,
                               const PopularityState& popularity_state,
                               double alpha, const UserPopulation& users,
                               const RequestModel& model, std::uint64_t slot,
                               Rng& rng) {
  if (!(model.mix_lambda >= 0.0 && model.mix_lambda <= 1.0)) {
    throw DomainError("generate_requests: mix_lambda outside [0,1]");
  }
  if (!(model.requests_per_user >= 0.0)) {
    throw DomainError("generate_requests: negative requests_per_user");
  }
  const Vector truth = ground_truth_popularity(popularity_state);
  RequestBatch batch;
  batch.slot = slot;
  batch.counts.assign(catalog.size(), 0);

  for (const auto& user : users.users) {
    bool fell_back = false;
    const Vector law = user_request_distribution(catalog, truth, user.characteristic,
                                                 alpha, model, &fell_back);
    if (fell_back) ++batch.fallback_users;
    std::uint64_t n = 0;
    if (model.requests_per_user > 0.0) {
      n = std::poisson_distribution<std::uint64_t>(model.requests_per_user)(rng);
    }
    std::discrete_distribution<std::size_t> pick(law.begin(), law.end());
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::size_t f = pick(rng);
      ++batch.counts[f];
      batch.per_user.push_back({user.id, f});
    }
  }
  std::shuffle(batch.per_user.begin(), batch.per_user.end(), rng);
  return batch;
}

Observation observe(const RequestBatch& batch, const UserPopulation& users,
                    const ContentCatalog& catalog, double alpha,
                    KernelForm form) {
  const std::size_t contents = catalog.size();
  Observation obs;
  obs.group_size = users.users.size();
  obs.popularity.assign(contents, 0.0);
  obs.preference.assign(contents, 0.0);

  const std::uint64_t total = batch.total();
  if (total == 0) {
    obs.empty_batch = true;
    std::fill(obs.popularity.begin(), obs.popularity.end(),
              1.0 / static_cast<double>(contents));
  } else {
    for (std::size_t f = 0; f < contents; ++f) {
      obs.popularity[f] =
          static_cast<double>(batch.counts[f]) / static_cast<double>(total);
    }
  }

  if (!users.users.empty()) {
    const double inv_n = 1.0 / static_cast<double>(users.users.size());
    for (std::size_t f = 0; f < contents; ++f) {
      double sum = 0.0;
      for (const auto& user : users.users) {
        const double g = kernel(user.characteristic, catalog.features[f], alpha, form);
        sum += std::isfinite(g) ? g : 0.0;
      }
      obs.preference[f] = sum * inv_n;
    }
  }
  return obs;
}

void write_request_log_header(std::ostream& out) {
  out << "slot,user_id,content_id\n";
}

void write_request_log(std::ostream& out, const RequestBatch& batch) {
  for (const auto& r : batch.per_user) {
    out << batch.slot << ',' << r.user_id << ',' << r.content << '\n';
  }
}

void EnvironmentParams::validate() const {
  if (contents < 1) throw DomainError("contents must be >= 1");
  if (users < 1) throw DomainError("users must be >= 1");
  if (zipf_betas.empty()) throw DomainError("need at least one popularity state");
  if (preference_alphas.empty()) throw DomainError("need at least one preference state");
  for (double b : zipf_betas) {
    if (!(b > 0.0)) throw DomainError("zipf beta must be positive");
  }
  for (double a : preference_alphas) {
    if (!(a >= 0.0 && a < 1.0)) throw DomainError("preference alpha outside [0,1)");
  }
  validate_transition(popularity_transition, zipf_betas.size(), "popularity chain");
  validate_transition(preference_transition, preference_alphas.size(),
                      "preference chain");
  if (!(turnover_prob >= 0.0 && turnover_prob <= 1.0)) {
    throw DomainError("turnover_prob outside [0,1]");
  }
  if (!(request_model.requests_per_user >= 0.0)) {
    throw DomainError("requests_per_user must be >= 0");
  }
  if (!(request_model.mix_lambda >= 0.0 && request_model.mix_lambda <= 1.0)) {
    throw DomainError("mix_lambda outside [0,1]");
  }
}

Environment::Environment(const EnvironmentParams& params, std::uint64_t seed)
    : params_(params), rng_(make_rng(seed, Stream::kEnvironment)) {
  params_.validate();
  catalog_ = ContentCatalog::random(params_.contents, params_.feature_dim, rng_);

  popularity_.transition = params_.popularity_transition;
  for (double beta : params_.zipf_betas) {
    PopularityState state;
    state.zipf_beta = beta;
    state.rank_of.resize(params_.contents);
    std::iota(state.rank_of.begin(), state.rank_of.end(), std::size_t{1});
    std::shuffle(state.rank_of.begin(), state.rank_of.end(), rng_);
    popularity_.states.push_back(std::move(state));
  }
  preference_.alphas = params_.preference_alphas;
  preference_.transition = params_.preference_transition;

  popularity_.current = std::uniform_int_distribution<std::size_t>(
      0, popularity_.states.size() - 1)(rng_);
  preference_.current = std::uniform_int_distribution<std::size_t>(
      0, preference_.alphas.size() - 1)(rng_);
  popularity_.validate();
  preference_.validate();

  users_ = UserPopulation::fresh(params_.users, params_.feature_dim,
                                 params_.turnover_prob, rng_);
}

const RequestBatch& Environment::next_slot() {
  advance_chains(popularity_, preference_, rng_);
  churn_users(users_, rng_);
  batch_ = generate_requests(catalog_, popularity_.states[popularity_.current],
                             current_alpha(), users_, params_.request_model,
                             slot_, rng_);
  ++slot_;
  return batch_;
}

Observation Environment::observe() const {
  return edgecache::observe(batch_, users_, catalog_, current_alpha(),
                            params_.request_model.kernel_form);
}

ChainIndices Environment::hidden_state() const {
  return {popularity_.current, preference_.current};
}

Vector Environment::true_popularity() const {
  return ground_truth_popularity(popularity_.states[popularity_.current]);
}

double Environment::current_alpha() const {
  return preference_.alphas[preference_.current];
}

}  // namespace edgecache
