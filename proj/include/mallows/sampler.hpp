#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mallows/fenwick.hpp"
#include "mallows/permutation.hpp"
#include "mallows/qparam.hpp"
#include "mallows/rng.hpp"

namespace mallows {
namespace sampler {

/// Truncated geometric on {1..n}: pmf(k) = p(1-p)^{k-1} / (1-(1-p)^n) for
/// p > 0. The p = 0 spec means uniform on {1..n} (the q = 1 degenerate case).
struct TruncGeomSpec {
  std::int64_t n = 1;
  double p = 0.5;

  TruncGeomSpec(std::int64_t n_, double p_) : n(n_), p(p_) {
    if (n < 1) throw std::domain_error("TruncGeomSpec: n must be >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("TruncGeomSpec: p must be in [0,1]");
  }

  double pmf(std::int64_t k) const {
    if (k < 1 || k > n) return 0.0;
    if (p == 0.0) return 1.0 / static_cast<double>(n);
    if (p == 1.0) return k == 1 ? 1.0 : 0.0;
    const double g = 1.0 - p;
    return p * std::pow(g, static_cast<double>(k - 1)) /
           (1.0 - std::pow(g, static_cast<double>(n)));
  }
};

/// Closed-form inverse CDF; exactly one uniform draw per variate.
inline std::int64_t sample_trunc_geom(const TruncGeomSpec& spec, RngStream& rng) {
  const double u = rng.next_double();
  if (spec.n == 1 || spec.p == 1.0) return 1;
  if (spec.p == 0.0) {
    const auto k = 1 + static_cast<std::int64_t>(u * static_cast<double>(spec.n));
    return k > spec.n ? spec.n : k;
  }
  const double g = 1.0 - spec.p;
  const double lng = std::log(g);
  const double mass = -std::expm1(static_cast<double>(spec.n) * lng);  // 1 - g^n
  std::int64_t k = static_cast<std::int64_t>(std::ceil(std::log1p(-u * mass) / lng));
  if (k < 1) k = 1;
  if (k > spec.n) k = spec.n;
  return k;
}

/// Geometric on {1,2,...} with success probability 1-q (so P(Z=k) = (1-q)q^{k-1}).
inline std::int64_t sample_geometric(const QParam& q, RngStream& rng) {
  q.require_sub_critical("sample_geometric");
  const double u = rng.next_double();
  std::int64_t k = static_cast<std::int64_t>(std::ceil(std::log1p(-u) / std::log(q.value())));
  return k < 1 ? 1 : k;
}

/// Exact Mallows(n,q) sample by the one-sided iterative procedure: position i
/// receives the Z_i-th smallest unused value, Z_i ~ TGeo(n+1-i, 1-q).
/// q = 1 degenerates to a uniform permutation; q > 1 samples at 1/q and
/// composes with the reversal map.
inline Permutation sample_mallows_finite(std::int64_t n, const QParam& q, RngStream& rng) {
  if (n < 1) throw std::domain_error("sample_mallows_finite: n must be >= 1");
  if (q.super_critical()) {
    return reverse_compose(sample_mallows_finite(n, q.reciprocal(), rng));
  }
  const double p = q.critical() ? 0.0 : 1.0 - q.value();
  FenwickTree avail = FenwickTree::all_ones(n);
  std::vector<Permutation::Image> images(static_cast<std::size_t>(n));
  for (std::int64_t i = 1; i <= n; ++i) {
    const std::int64_t z = sample_trunc_geom(TruncGeomSpec(n + 1 - i, p), rng);
    const std::int64_t v = avail.select_kth(z);
    avail.add(v, -1);
    images[static_cast<std::size_t>(i - 1)] = static_cast<Permutation::Image>(v);
  }
  return Permutation(std::move(images));
}

/// Two-sided procedure: iteration i fixes the images of both i and n+1-i,
/// the former as the Z_{2i-1}-th smallest and the latter as the Z_{2i}-th
/// largest of the unused values. Same law as the one-sided sampler.
inline Permutation sample_mallows_two_sided(std::int64_t n, const QParam& q, RngStream& rng) {
  if (n < 1) throw std::domain_error("sample_mallows_two_sided: n must be >= 1");
  if (q.super_critical()) {
    return reverse_compose(sample_mallows_two_sided(n, q.reciprocal(), rng));
  }
  const double p = q.critical() ? 0.0 : 1.0 - q.value();
  FenwickTree avail = FenwickTree::all_ones(n);
  std::vector<Permutation::Image> images(static_cast<std::size_t>(n));
  std::int64_t draw = 0;
  for (std::int64_t i = 1; i <= n / 2; ++i) {
    ++draw;
    std::int64_t z = sample_trunc_geom(TruncGeomSpec(n + 1 - draw, p), rng);
    std::int64_t v = avail.select_kth(z);
    avail.add(v, -1);
    images[static_cast<std::size_t>(i - 1)] = static_cast<Permutation::Image>(v);

    ++draw;
    z = sample_trunc_geom(TruncGeomSpec(n + 1 - draw, p), rng);
    v = avail.select_kth(avail.total() - z + 1);  // z-th largest
    avail.add(v, -1);
    images[static_cast<std::size_t>(n - i)] = static_cast<Permutation::Image>(v);
  }
  if (n % 2 == 1) {
    images[static_cast<std::size_t>(n / 2)] = static_cast<Permutation::Image>(avail.select_kth(1));
  }
  return Permutation(std::move(images));
}

/// Trust margin for a window of `len` consecutive integers: indices closer
/// than this to either edge may disagree with the bi-infinite model. The
/// distance-B coupling failure has probability O(len * q^B); with
/// B = ceil(5 log_{1/q} len) that is O(len^{-4}).
inline std::int64_t window_margin(std::int64_t len, const QParam& q) {
  q.require_sub_critical("window_margin");
  if (len <= 1) return 0;
  const double b = 5.0 * std::log(static_cast<double>(len)) / std::log(1.0 / q.value());
  return static_cast<std::int64_t>(std::ceil(b));
}

/// Mallows sample of the integer interval [lo..hi], approximating the
/// bi-infinite model away from the edges. Margin metadata per window_margin.
inline WindowPermutation sample_mallows_interval(std::int64_t lo, std::int64_t hi,
                                                 const QParam& q, RngStream& rng) {
  q.require_sub_critical("sample_mallows_interval");
  if (hi < lo) throw std::domain_error("sample_mallows_interval: empty interval");
  const std::int64_t len = hi - lo + 1;
  const Permutation perm = sample_mallows_finite(len, q, rng);
  return WindowPermutation::from_permutation(perm, lo, window_margin(len, q));
}

/// Symmetric window [-W..W] (odd length), the r-reflection-compatible shape.
inline WindowPermutation sample_mallows_window(std::int64_t w, const QParam& q, RngStream& rng) {
  if (w < 0) throw std::domain_error("sample_mallows_window: W must be >= 0");
  return sample_mallows_interval(-w, w, q, rng);
}

/// rho-reflection-compatible window [-W+1..W] (even length).
inline WindowPermutation sample_mallows_window_rho(std::int64_t w, const QParam& q,
                                                   RngStream& rng) {
  if (w < 1) throw std::domain_error("sample_mallows_window_rho: W must be >= 1");
  return sample_mallows_interval(-w + 1, w, q, rng);
}

/// Lazy Mallows(N,q) process for 0 < q < 1. Yields Pi(1), Pi(2), ... together
/// with a regeneration flag that is true at position j iff Pi([j]) = [j].
///
/// Internally tracks M_j = max_{i<=j} Pi(i) - j via M_j = max(M_{j-1}, Z_j) - 1,
/// so the flag costs O(1); value selection runs against an order-statistic
/// window over the values above the last regeneration point, pruned whenever
/// the process regenerates. Memory is O(current excursion height).
class MallowsStream {
 public:
  struct Step {
    std::int64_t value = 0;
    bool is_regeneration = false;
  };

  MallowsStream(const QParam& q, RngStream rng) : q_(q), rng_(rng), avail_(0) {
    q.require_sub_critical("MallowsStream");
  }

  std::int64_t position() const { return pos_; }

  Step next() {
    const std::int64_t z = sample_geometric(q_, rng_);
    const std::int64_t unused = avail_.total();
    std::int64_t rel;
    if (z <= unused) {
      rel = avail_.select_kth(z);
    } else {
      rel = cap_ + (z - unused);
      grow_to(rel);
    }
    avail_.add(rel, -1);
    used_[static_cast<std::size_t>(rel)] = true;

    const std::int64_t value = base_ + rel;
    ++pos_;
    m_ = std::max(m_, z) - 1;

    Step step{value, m_ == 0};
    if (step.is_regeneration) prune();
    return step;
  }

 private:
  void grow_to(std::int64_t need) {
    std::int64_t new_cap = cap_ < 32 ? 64 : cap_ * 2;
    if (new_cap < need) new_cap = need;
    used_.resize(static_cast<std::size_t>(new_cap) + 1, false);
    FenwickTree next(new_cap);
    for (std::int64_t v = 1; v <= new_cap; ++v)
      if (!used_[static_cast<std::size_t>(v)]) next.add(v, 1);
    avail_ = std::move(next);
    cap_ = new_cap;
  }

  void prune() {
    base_ = pos_;
    cap_ = 0;
    used_.clear();
    avail_ = FenwickTree(0);
  }

  QParam q_;
  RngStream rng_;
  std::int64_t base_ = 0;  // last regeneration position; all values <= base_ are used
  std::int64_t pos_ = 0;
  std::int64_t m_ = 0;
  std::int64_t cap_ = 0;
  std::vector<bool> used_;  // used_[v] for values base_+v, v = 1..cap_
  FenwickTree avail_;
};

}  // namespace sampler
}  // namespace mallows
