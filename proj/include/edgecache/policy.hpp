#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "edgecache/env.hpp"

namespace edgecache {

// epsilon_t = max(floor, start * decay^t)
struct EpsilonSchedule {
  double start = 0.5;
  double decay = 0.999;
  double floor = 0.01;

  double at(std::uint64_t t) const {
    return std::max(floor, start * std::pow(decay, static_cast<double>(t)));
  }
};

struct StepOutcome {
  // Squared TD error of this slot's learning step, if one happened.
  std::optional<double> discrepancy;
  // Wall time spent choosing the next action.
  double select_micros = 0.0;
};

// A cache controller driven by the slot loop. serve() is called once per slot
// with that slot's requests and returns the slot hit rate; end_slot() lets
// learning agents update and commit the next slot's cache content.
class CachePolicy {
 public:
  virtual ~CachePolicy() = default;

  virtual std::string name() const = 0;
  virtual double serve(const RequestBatch& batch) = 0;
  virtual StepOutcome end_slot(const Observation& obs, const ChainIndices& truth,
                               double reward, std::uint64_t slot) = 0;
};

}  // namespace edgecache
