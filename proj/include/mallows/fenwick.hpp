#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mallows {

/// Binary indexed tree over positions 1..size with integer counts.
/// Supports O(log n) prefix sums, point updates and k-th order statistic
/// selection, which is what the iterative Mallows samplers need to pick
/// the Z-th smallest still-unused value.
class FenwickTree {
 public:
  explicit FenwickTree(std::int64_t size)
      : size_(size), tree_(static_cast<std::size_t>(size) + 1, 0) {
    if (size < 0) throw std::invalid_argument("FenwickTree: negative size");
    recompute_step();
  }

  /// Tree over 1..size with every count set to one, built in O(n).
  static FenwickTree all_ones(std::int64_t size) {
    FenwickTree f(size);
    for (std::int64_t i = 1; i <= size; ++i) {
      f.tree_[i] += 1;
      const std::int64_t parent = i + (i & -i);
      if (parent <= size) f.tree_[parent] += f.tree_[i];
    }
    f.total_ = size;
    return f;
  }

  std::int64_t size() const { return size_; }
  std::int64_t total() const { return total_; }

  void add(std::int64_t pos, std::int64_t delta) {
    total_ += delta;
    for (; pos <= size_; pos += pos & -pos) tree_[pos] += delta;
  }

  std::int64_t prefix_sum(std::int64_t pos) const {
    std::int64_t s = 0;
    if (pos > size_) pos = size_;
    for (; pos > 0; pos -= pos & -pos) s += tree_[pos];
    return s;
  }

  /// Smallest position p with prefix_sum(p) >= k. Requires 1 <= k <= total().
  std::int64_t select_kth(std::int64_t k) const {
    if (k < 1 || k > total_)
      throw std::out_of_range("FenwickTree::select_kth: k out of range");
    std::int64_t pos = 0;
    for (std::int64_t step = step_; step > 0; step >>= 1) {
      const std::int64_t next = pos + step;
      if (next <= size_ && tree_[next] < k) {
        pos = next;
        k -= tree_[next];
      }
    }
    return pos + 1;
  }

 private:
  void recompute_step() {
    step_ = 0;
    if (size_ >= 1) {
      step_ = 1;
      while ((step_ << 1) <= size_) step_ <<= 1;
    }
  }

  std::int64_t size_;
  std::int64_t step_ = 0;
  std::int64_t total_ = 0;
  std::vector<std::int64_t> tree_;
};

}  // namespace mallows
