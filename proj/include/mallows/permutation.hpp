#pragma once

#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mallows {

/// A permutation of {1..n}, stored as the image list pi(1), ..., pi(n).
class Permutation {
 public:
  using Image = std::int32_t;

  Permutation() = default;

  explicit Permutation(std::vector<Image> images) : images_(std::move(images)) {}

  static Permutation identity(std::int64_t n) {
    std::vector<Image> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), Image{1});
    return Permutation(std::move(v));
  }

  std::int64_t size() const { return static_cast<std::int64_t>(images_.size()); }

  /// Image of i, 1-based.
  Image operator()(std::int64_t i) const { return images_[static_cast<std::size_t>(i - 1)]; }

  Image& at(std::int64_t i) { return images_[static_cast<std::size_t>(i - 1)]; }

  const std::vector<Image>& images() const { return images_; }

  /// O(n) bijection check: every value of 1..n appears exactly once.
  bool is_bijection() const {
    const std::int64_t n = size();
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (Image v : images_) {
      if (v < 1 || v > n || seen[static_cast<std::size_t>(v - 1)]) return false;
      seen[static_cast<std::size_t>(v - 1)] = true;
    }
    return true;
  }

  Permutation inverse() const {
    std::vector<Image> inv(images_.size());
    for (std::size_t i = 0; i < images_.size(); ++i)
      inv[static_cast<std::size_t>(images_[i] - 1)] = static_cast<Image>(i + 1);
    return Permutation(std::move(inv));
  }

  bool operator==(const Permutation& o) const { return images_ == o.images_; }

  /// One-line space-separated image list, 1-based.
  std::string to_line() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < images_.size(); ++i) {
      if (i) os << ' ';
      os << images_[i];
    }
    return os.str();
  }

  static Permutation parse_line(const std::string& line) {
    std::istringstream is(line);
    std::vector<Image> v;
    Image x;
    while (is >> x) v.push_back(x);
    Permutation p(std::move(v));
    if (!p.is_bijection())
      throw std::invalid_argument("Permutation::parse_line: not a bijection of {1..n}");
    return p;
  }

 private:
  std::vector<Image> images_;
};

/// Composition with the reversal map: returns r_n o pi, i.e. i -> n+1-pi(i).
/// Turns a Mallows(n,q) sample into a Mallows(n,1/q) sample and vice versa.
inline Permutation reverse_compose(const Permutation& perm) {
  const std::int64_t n = perm.size();
  std::vector<Permutation::Image> v(static_cast<std::size_t>(n));
  for (std::int64_t i = 1; i <= n; ++i)
    v[static_cast<std::size_t>(i - 1)] = static_cast<Permutation::Image>(n + 1 - perm(i));
  return Permutation(std::move(v));
}

/// A bijection of the integer interval [lo .. lo+len-1], used to approximate
/// the bi-infinite Mallows model near 0. Carries a trust margin: statistics
/// must only be read at indices at least `margin` away from either edge.
class WindowPermutation {
 public:
  WindowPermutation(std::int64_t lo, std::vector<std::int64_t> images, std::int64_t margin = 0)
      : lo_(lo), images_(std::move(images)), margin_(margin) {}

  std::int64_t lo() const { return lo_; }
  std::int64_t hi() const { return lo_ + size() - 1; }
  std::int64_t size() const { return static_cast<std::int64_t>(images_.size()); }
  std::int64_t margin() const { return margin_; }

  std::int64_t trusted_lo() const { return lo_ + margin_; }
  std::int64_t trusted_hi() const { return hi() - margin_; }
  bool has_trusted_range() const { return trusted_lo() <= trusted_hi(); }

  /// Image of absolute index i in [lo, hi].
  std::int64_t operator()(std::int64_t i) const {
    return images_[static_cast<std::size_t>(i - lo_)];
  }

  bool contains(std::int64_t i) const { return i >= lo_ && i <= hi(); }

  bool is_bijection() const {
    const std::int64_t n = size();
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (std::int64_t v : images_) {
      const std::int64_t j = v - lo_;
      if (j < 0 || j >= n || seen[static_cast<std::size_t>(j)]) return false;
      seen[static_cast<std::size_t>(j)] = true;
    }
    return true;
  }

  /// Relabels to a permutation of {1..n} by subtracting the offset.
  Permutation to_permutation() const {
    std::vector<Permutation::Image> v(images_.size());
    for (std::size_t j = 0; j < images_.size(); ++j)
      v[j] = static_cast<Permutation::Image>(images_[j] - lo_ + 1);
    return Permutation(std::move(v));
  }

  /// Relabels a permutation of {1..n} onto [lo .. lo+n-1].
  static WindowPermutation from_permutation(const Permutation& perm, std::int64_t lo,
                                            std::int64_t margin = 0) {
    std::vector<std::int64_t> v(static_cast<std::size_t>(perm.size()));
    for (std::int64_t i = 1; i <= perm.size(); ++i)
      v[static_cast<std::size_t>(i - 1)] = perm(i) + lo - 1;
    return WindowPermutation(lo, std::move(v), margin);
  }

 private:
  std::int64_t lo_;
  std::vector<std::int64_t> images_;
  std::int64_t margin_;
};

}  // namespace mallows
