#include "edgecache/caching.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "edgecache/errors.hpp"

namespace edgecache {

CacheAction CacheAction::from_bits(std::vector<std::uint8_t> bits,
                                   std::size_t capacity) {
  std::size_t ones = 0;
  for (auto b : bits) {
    if (b > 1) throw DomainError("cache action: bits must be 0 or 1");
    ones += b;
  }
  if (ones != capacity) {
    std::ostringstream msg;
    msg << "cache action: " << ones << " contents cached, capacity is " << capacity;
    throw DomainError(msg.str());
  }
  CacheAction a;
  a.bits_ = std::move(bits);
  a.capacity_ = capacity;
  return a;
}

CacheAction CacheAction::from_contents(std::size_t library_size,
                                       std::span<const std::size_t> contents) {
  std::vector<std::uint8_t> bits(library_size, 0);
  for (auto f : contents) {
    if (f >= library_size) throw DomainError("cache action: content id out of range");
    if (bits[f]) throw DomainError("cache action: duplicate content id");
    bits[f] = 1;
  }
  return from_bits(std::move(bits), contents.size());
}

std::vector<std::size_t> CacheAction::contents() const {
  std::vector<std::size_t> out;
  out.reserve(capacity_);
  for (std::size_t f = 0; f < bits_.size(); ++f) {
    if (bits_[f]) out.push_back(f);
  }
  return out;
}

std::uint64_t ActionSpace::binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    // result * (n - k + i) / i stays integral at every step; the product
    // may exceed 64 bits even when the quotient does not.
    const unsigned __int128 next =
        static_cast<unsigned __int128>(result) * (n - k + i) / i;
    if (next > std::numeric_limits<std::uint64_t>::max()) {
      throw DomainError("binomial coefficient overflows 64 bits");
    }
    result = static_cast<std::uint64_t>(next);
  }
  return result;
}

ActionSpace::ActionSpace(std::size_t library_size, std::size_t capacity)
    : library_size_(library_size), capacity_(capacity) {
  if (capacity > library_size) throw DomainError("action space: capacity exceeds library");
  size_ = binomial(library_size, capacity);
}

ActionIndex ActionSpace::rank(const CacheAction& action) const {
  if (action.library_size() != library_size_ || action.capacity() != capacity_) {
    throw DomainError("rank: action does not belong to this action space");
  }
  ActionIndex index = 0;
  std::size_t slot = 0;  // position within the sorted subset
  std::size_t next = 0;  // smallest content the current position may take
  for (std::size_t f = 0; f < library_size_ && slot < capacity_; ++f) {
    if (!action.cached(f)) continue;
    const std::size_t remaining = capacity_ - slot - 1;
    // Subsets that put a smaller content at this position come first.
    for (std::size_t c = next; c < f; ++c) {
      index += binomial(library_size_ - c - 1, remaining);
    }
    next = f + 1;
    ++slot;
  }
  return index;
}

CacheAction ActionSpace::unrank(ActionIndex index) const {
  if (index >= size_) throw DomainError("unrank: index out of range");
  std::vector<std::uint8_t> bits(library_size_, 0);
  std::size_t c = 0;
  for (std::size_t slot = 0; slot < capacity_; ++slot) {
    const std::size_t remaining = capacity_ - slot - 1;
    while (true) {
      const std::uint64_t block = binomial(library_size_ - c - 1, remaining);
      if (index < block) break;
      index -= block;
      ++c;
    }
    bits[c] = 1;
    ++c;
  }
  return CacheAction::from_bits(std::move(bits), capacity_);
}

CacheAction ActionSpace::random(Rng& rng) const {
  return unrank(std::uniform_int_distribution<ActionIndex>(0, size_ - 1)(rng));
}

double hit_rate(std::span<const std::uint64_t> counts, const CacheAction& action) {
  if (counts.size() != action.library_size()) {
    throw DimensionError("hit_rate: request vector length differs from library");
  }
  std::uint64_t total = 0;
  std::uint64_t hits = 0;
  for (std::size_t f = 0; f < counts.size(); ++f) {
    total += counts[f];
    if (action.cached(f)) hits += counts[f];
  }
  if (total == 0) return 1.0;
  return static_cast<double>(hits) / static_cast<double>(total);
}

double reward(double theta) { return 1.0 - theta; }

namespace {

template <typename Cache>
double serve_batch(Cache& cache, const RequestBatch& batch) {
  if (batch.per_user.empty()) return 1.0;
  std::uint64_t hits = 0;
  for (const auto& r : batch.per_user) hits += cache.access(r.content) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(batch.per_user.size());
}

}  // namespace

bool LruCache::access(std::size_t content) {
  if (auto it = where_.find(content); it != where_.end()) {
    order_.splice(order_.begin(), order_, it->second);
    return true;
  }
  if (capacity_ == 0) return false;
  if (order_.size() == capacity_) {
    where_.erase(order_.back());
    order_.pop_back();
  }
  order_.push_front(content);
  where_[content] = order_.begin();
  return false;
}

double LruCache::serve(const RequestBatch& batch) { return serve_batch(*this, batch); }

std::vector<std::size_t> LruCache::resident() const {
  return {order_.begin(), order_.end()};
}

bool LfuCache::access(std::size_t content) {
  const std::uint64_t count = ++frequency_[content];
  ++clock_;
  if (inserted_at_.contains(content)) return true;
  if (capacity_ == 0) return false;
  if (inserted_at_.size() < capacity_) {
    inserted_at_[content] = clock_;
    return false;
  }
  auto victim = inserted_at_.end();
  for (auto it = inserted_at_.begin(); it != inserted_at_.end(); ++it) {
    if (victim == inserted_at_.end()) {
      victim = it;
      continue;
    }
    const auto fv = frequency_[victim->first];
    const auto fi = frequency_[it->first];
    if (fi < fv || (fi == fv && it->second < victim->second)) victim = it;
  }
  // The newcomer would be the newest insertion, so it only displaces a
  // resident whose count does not exceed its own.
  if (frequency_[victim->first] <= count) {
    inserted_at_.erase(victim);
    inserted_at_[content] = clock_;
  }
  return false;
}

double LfuCache::serve(const RequestBatch& batch) { return serve_batch(*this, batch); }

std::vector<std::size_t> LfuCache::resident() const {
  std::vector<std::size_t> out;
  out.reserve(inserted_at_.size());
  for (const auto& [content, stamp] : inserted_at_) out.push_back(content);
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t LfuCache::frequency(std::size_t content) const {
  auto it = frequency_.find(content);
  return it == frequency_.end() ? 0 : it->second;
}

}  // namespace edgecache
