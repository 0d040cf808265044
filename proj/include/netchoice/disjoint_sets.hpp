#pragma once

#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

namespace netchoice {

// Union-find with union by size and path halving. Tracks the size of the
// largest set, which only ever grows.
template <typename Index = std::uint32_t>
class DisjointSets {
 public:
  DisjointSets() = default;
  explicit DisjointSets(std::size_t n) { reset(n); }

  void reset(std::size_t n) {
    parent_.resize(n);
    std::iota(parent_.begin(), parent_.end(), Index{0});
    size_.assign(n, 1);
    largest_root_ = 0;
    largest_size_ = n == 0 ? 0 : 1;
  }

  std::size_t size() const { return parent_.size(); }

  Index find(Index x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Read-only find, usable from concurrent readers.
  Index find(Index x) const {
    while (parent_[x] != x) x = parent_[x];
    return x;
  }

  // Returns false if already joined.
  bool unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    if (size_[a] > largest_size_) {
      largest_size_ = size_[a];
      largest_root_ = a;
    }
    return true;
  }

  bool same(Index a, Index b) const { return find(a) == find(b); }
  std::size_t set_size(Index x) const { return size_[find(x)]; }
  std::size_t largest_size() const { return largest_size_; }
  Index largest_root() const { return find(largest_root_); }

 private:
  std::vector<Index> parent_;
  std::vector<std::size_t> size_;
  Index largest_root_ = 0;
  std::size_t largest_size_ = 0;
};

}  // namespace netchoice
