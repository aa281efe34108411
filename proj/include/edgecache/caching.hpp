#pragma once

#include <cstddef>
#include <cstdint>
#include <list>
#include <span>
#include <unordered_map>
#include <vector>

#include "edgecache/env.hpp"
#include "edgecache/random.hpp"

namespace edgecache {

using ActionIndex = std::uint64_t;

// Binary cache incidence vector over the library with exactly `capacity` ones.
class CacheAction {
 public:
  CacheAction() = default;

  // Throws DomainError unless popcount(bits) == capacity and bits are 0/1.
  static CacheAction from_bits(std::vector<std::uint8_t> bits, std::size_t capacity);
  // `contents` are distinct 0-based ids; capacity is their count.
  static CacheAction from_contents(std::size_t library_size,
                                   std::span<const std::size_t> contents);

  std::span<const std::uint8_t> bits() const { return bits_; }
  bool cached(std::size_t content) const { return bits_[content] != 0; }
  std::size_t library_size() const { return bits_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::vector<std::size_t> contents() const;

  friend bool operator==(const CacheAction&, const CacheAction&) = default;

 private:
  std::vector<std::uint8_t> bits_;
  std::size_t capacity_ = 0;
};

// All B-subsets of F contents in lexicographic order of their sorted content
// lists; index 0 caches contents {0..B-1}.
class ActionSpace {
 public:
  ActionSpace(std::size_t library_size, std::size_t capacity);

  std::size_t library_size() const { return library_size_; }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t size() const { return size_; }

  ActionIndex rank(const CacheAction& action) const;
  CacheAction unrank(ActionIndex index) const;
  CacheAction random(Rng& rng) const;

  static std::uint64_t binomial(std::size_t n, std::size_t k);

 private:
  std::size_t library_size_;
  std::size_t capacity_;
  std::uint64_t size_;
};

// Fraction of the slot's requests whose content is cached; 1 when there are
// no requests.
double hit_rate(std::span<const std::uint64_t> counts, const CacheAction& action);

// Per-slot cost minimized by the agents: 1 - theta.
double reward(double theta);

// Per-request LRU: a hit refreshes recency, a miss inserts and evicts the
// least recently used resident when full.
class LruCache {
 public:
  explicit LruCache(std::size_t capacity) : capacity_(capacity) {}

  bool access(std::size_t content);
  double serve(const RequestBatch& batch);

  std::size_t capacity() const { return capacity_; }
  std::vector<std::size_t> resident() const;  // most recent first

 private:
  std::size_t capacity_;
  std::list<std::size_t> order_;
  std::unordered_map<std::size_t, std::list<std::size_t>::iterator> where_;
};

// Per-request LFU over cumulative request counts (kept for every content ever
// seen, resident or not). On a miss with a full cache, the requested content
// competes with the residents: whichever has the smallest count, ties going to
// the earliest insertion, is left out.
class LfuCache {
 public:
  explicit LfuCache(std::size_t capacity) : capacity_(capacity) {}

  bool access(std::size_t content);
  double serve(const RequestBatch& batch);

  std::size_t capacity() const { return capacity_; }
  std::vector<std::size_t> resident() const;  // sorted by content id
  std::uint64_t frequency(std::size_t content) const;

 private:
  std::size_t capacity_;
  std::uint64_t clock_ = 0;
  std::unordered_map<std::size_t, std::uint64_t> frequency_;
  std::unordered_map<std::size_t, std::uint64_t> inserted_at_;  // residents
};

}  // namespace edgecache
