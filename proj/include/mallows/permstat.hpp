#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mallows/fenwick.hpp"
#include "mallows/permutation.hpp"
#include "mallows/sampler.hpp"
#include "mallows/stats.hpp"

namespace mallows {
namespace permstat {

/// Exact inversion count in O(n log n).
inline std::int64_t inversions(const Permutation& perm) {
  const std::int64_t n = perm.size();
  FenwickTree seen(n);
  std::int64_t inv = 0;
  for (std::int64_t i = 1; i <= n; ++i) {
    const std::int64_t v = perm(i);
    inv += (i - 1) - seen.prefix_sum(v);  // earlier values above v
    seen.add(v, 1);
  }
  return inv;
}

/// Histogram of cycle lengths: counts[i] = number of cycles of length i.
struct CycleCounts {
  std::vector<std::int64_t> counts;  // index 0 unused; size n+1
  std::int64_t total_cycles = 0;

  std::int64_t of_length(std::int64_t i) const {
    return (i >= 1 && i < static_cast<std::int64_t>(counts.size()))
               ? counts[static_cast<std::size_t>(i)]
               : 0;
  }

  std::int64_t elements() const {
    std::int64_t s = 0;
    for (std::size_t i = 1; i < counts.size(); ++i)
      s += static_cast<std::int64_t>(i) * counts[i];
    return s;
  }

  std::int64_t odd_total() const {
    std::int64_t s = 0;
    for (std::size_t i = 1; i < counts.size(); i += 2) s += counts[i];
    return s;
  }
};

namespace detail {

// Cycle histogram of the map i -> next(i) over n points labeled 0..n-1.
template <typename Next>
CycleCounts cycle_histogram(std::int64_t n, Next next) {
  CycleCounts out;
  out.counts.assign(static_cast<std::size_t>(n) + 1, 0);
  std::vector<bool> visited(static_cast<std::size_t>(n), false);
  for (std::int64_t i = 0; i < n; ++i) {
    if (visited[static_cast<std::size_t>(i)]) continue;
    std::int64_t len = 0;
    std::int64_t j = i;
    while (!visited[static_cast<std::size_t>(j)]) {
      visited[static_cast<std::size_t>(j)] = true;
      j = next(j);
      ++len;
    }
    ++out.counts[static_cast<std::size_t>(len)];
    ++out.total_cycles;
  }
  return out;
}

}  // namespace detail

inline CycleCounts cycle_counts(const Permutation& perm) {
  return detail::cycle_histogram(perm.size(),
                                 [&](std::int64_t i) { return perm(i + 1) - 1; });
}

/// Optional composition with a reflection before taking the cycle structure:
/// R counts cycles of r∘σ with r(i) = -i, Rho of ρ∘σ with ρ(i) = 1-i.
/// Theorems for odd/even n limits read these off symmetric windows.
enum class Reflection { None, R, Rho };

inline CycleCounts cycle_counts(const WindowPermutation& window, Reflection mode) {
  const std::int64_t lo = window.lo();
  const std::int64_t hi = window.hi();
  switch (mode) {
    case Reflection::None:
      break;
    case Reflection::R:
      if (lo != -hi)
        throw std::domain_error("cycle_counts: R needs a window symmetric about 0");
      break;
    case Reflection::Rho:
      if (lo != 1 - hi)
        throw std::domain_error("cycle_counts: Rho needs a window symmetric about 1/2");
      break;
  }
  return detail::cycle_histogram(window.size(), [&](std::int64_t j) {
    std::int64_t img = window(lo + j);
    if (mode == Reflection::R) img = -img;
    if (mode == Reflection::Rho) img = 1 - img;
    return img - lo;
  });
}

/// Number of indices inside the trust margin with sigma(i) = -i (R) or
/// sigma(i) = 1-i (Rho): the fixed points of the reflected composition.
inline std::int64_t fixed_points_reflected(const WindowPermutation& window, Reflection mode) {
  if (mode == Reflection::None)
    throw std::domain_error("fixed_points_reflected: pick a reflection");
  if (mode == Reflection::R && window.lo() != -window.hi())
    throw std::domain_error("fixed_points_reflected: R needs a window symmetric about 0");
  if (mode == Reflection::Rho && window.lo() != 1 - window.hi())
    throw std::domain_error("fixed_points_reflected: Rho needs a window symmetric about 1/2");
  std::int64_t count = 0;
  for (std::int64_t i = window.trusted_lo(); i <= window.trusted_hi(); ++i) {
    const std::int64_t target = mode == Reflection::R ? -i : 1 - i;
    if (window(i) == target) ++count;
  }
  return count;
}

/// The arc chain kappa_t = |{i <= t : pi(i) > t}| for t = 0..n, in O(n).
struct ArcPath {
  std::vector<std::int64_t> kappa;  // size n+1, kappa[0] = kappa[n] = 0
};

inline ArcPath arc_path(const Permutation& perm) {
  const std::int64_t n = perm.size();
  const Permutation inv = perm.inverse();
  ArcPath path;
  path.kappa.assign(static_cast<std::size_t>(n) + 1, 0);
  std::int64_t k = 0;
  for (std::int64_t t = 1; t <= n; ++t) {
    if (perm(t) > t) ++k;
    if (inv(t) < t) --k;
    path.kappa[static_cast<std::size_t>(t)] = k;
  }
  return path;
}

/// One regeneration excursion: the prefix-to-prefix block length X and the
/// cycle histogram of the block's internal permutation.
struct RegenBlock {
  std::int64_t length = 0;
  CycleCounts cycles;
};

/// Simultaneous excursion of two processes: block length and the cycle
/// histogram of sigma' o sigma on the block.
struct PairedRegenBlock {
  std::int64_t length = 0;
  CycleCounts composed_cycles;
};

/// Single code path turning a flagged value sequence into blocks; both the
/// stream and the finite-permutation decompositions feed it.
class BlockBuilder {
 public:
  /// Feed Pi(position) with its regeneration flag; returns a block when one closes.
  std::optional<RegenBlock> feed(std::int64_t value, bool is_regeneration) {
    buffer_.push_back(value - start_);
    if (!is_regeneration) return std::nullopt;
    RegenBlock block;
    block.length = static_cast<std::int64_t>(buffer_.size());
    block.cycles = detail::cycle_histogram(
        block.length, [&](std::int64_t j) { return buffer_[static_cast<std::size_t>(j)] - 1; });
    start_ += block.length;
    buffer_.clear();
    return block;
  }

  bool mid_block() const { return !buffer_.empty(); }

 private:
  std::int64_t start_ = 0;
  std::vector<std::int64_t> buffer_;
};

/// Blocks of a finite permutation; flags computed by the prefix-maximum scan
/// (the prefix [j] maps onto itself iff max_{i<=j} pi(i) = j).
inline std::vector<RegenBlock> regen_blocks(const Permutation& perm) {
  BlockBuilder builder;
  std::vector<RegenBlock> out;
  std::int64_t prefix_max = 0;
  for (std::int64_t i = 1; i <= perm.size(); ++i) {
    prefix_max = std::max<std::int64_t>(prefix_max, perm(i));
    if (auto block = builder.feed(perm(i), prefix_max == i)) out.push_back(std::move(*block));
  }
  return out;
}

/// Runs the stream until at least min_steps values have been consumed and the
/// current excursion closes, so every step belongs to a complete block.
inline std::vector<RegenBlock> collect_blocks(sampler::MallowsStream& stream,
                                              std::int64_t min_steps) {
  BlockBuilder builder;
  std::vector<RegenBlock> out;
  std::int64_t steps = 0;
  while (steps < min_steps || builder.mid_block()) {
    const auto step = stream.next();
    ++steps;
    if (auto block = builder.feed(step.value, step.is_regeneration))
      out.push_back(std::move(*block));
  }
  return out;
}

/// Simultaneous regeneration blocks of two independent streams: a block ends
/// where both prefixes map onto themselves at the same position. Emits the
/// cycle histogram of sigma' o sigma per block.
inline std::vector<PairedRegenBlock> collect_paired_blocks(sampler::MallowsStream& a,
                                                           sampler::MallowsStream& b,
                                                           std::int64_t min_steps) {
  std::vector<PairedRegenBlock> out;
  std::vector<std::int64_t> va, vb;
  std::int64_t start = 0;
  std::int64_t steps = 0;
  while (steps < min_steps || !va.empty()) {
    const auto sa = a.next();
    const auto sb = b.next();
    ++steps;
    va.push_back(sa.value - start);
    vb.push_back(sb.value - start);
    if (sa.is_regeneration && sb.is_regeneration) {
      PairedRegenBlock block;
      block.length = static_cast<std::int64_t>(va.size());
      block.composed_cycles = detail::cycle_histogram(block.length, [&](std::int64_t j) {
        return vb[static_cast<std::size_t>(va[static_cast<std::size_t>(j)] - 1)] - 1;
      });
      start += block.length;
      va.clear();
      vb.clear();
      out.push_back(std::move(block));
    }
  }
  return out;
}

/// Per-block values Y_i = f(block), ready for renewal estimators.
template <typename Block, typename F>
std::vector<double> additive_statistic(const std::vector<Block>& blocks, F f) {
  std::vector<double> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back(static_cast<double>(f(b)));
  return out;
}

namespace detail {

// Ratio estimator mean(y)/(scale*mean(x)) with delta-method standard error.
inline Estimate ratio_estimate(const std::vector<double>& y, const std::vector<double>& x,
                               double scale) {
  const std::int64_t n = static_cast<std::int64_t>(y.size());
  double my = 0, mx = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    my += y[static_cast<std::size_t>(i)];
    mx += x[static_cast<std::size_t>(i)];
  }
  my /= static_cast<double>(n);
  mx /= static_cast<double>(n);
  const double r = my / (scale * mx);
  double s2 = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = y[static_cast<std::size_t>(i)] - scale * r * x[static_cast<std::size_t>(i)];
    s2 += d * d;
  }
  s2 /= static_cast<double>(n - 1);
  Estimate e;
  e.mean = r;
  e.std_error = std::sqrt(s2 / static_cast<double>(n)) / (scale * mx);
  e.replicates = n;
  return e;
}

}  // namespace detail

/// m_i estimator: mean C_i(block) / mean X over regeneration blocks.
inline Estimate estimate_mi(const std::vector<RegenBlock>& blocks, std::int64_t i) {
  if (blocks.size() < 1000)
    throw std::invalid_argument("estimate_mi: need at least 1000 blocks");
  std::vector<double> y, x;
  y.reserve(blocks.size());
  x.reserve(blocks.size());
  for (const auto& b : blocks) {
    y.push_back(static_cast<double>(b.cycles.of_length(i)));
    x.push_back(static_cast<double>(b.length));
  }
  return detail::ratio_estimate(y, x, 1.0);
}

/// mu_{2i} estimator: mean C_i(sigma' o sigma) / (2 mean X) over paired blocks.
inline Estimate estimate_mu2i(const std::vector<PairedRegenBlock>& blocks, std::int64_t i) {
  if (blocks.size() < 1000)
    throw std::invalid_argument("estimate_mu2i: need at least 1000 blocks");
  std::vector<double> y, x;
  y.reserve(blocks.size());
  x.reserve(blocks.size());
  for (const auto& b : blocks) {
    y.push_back(static_cast<double>(b.composed_cycles.of_length(i)));
    x.push_back(static_cast<double>(b.length));
  }
  return detail::ratio_estimate(y, x, 2.0);
}

/// Plug-in covariance of the standardized block variables
/// U_i = (C_i(block) E X - X E C_i) / (E X)^{3/2}; its (i,i) entry estimates
/// the CLT variance of (C_i(Pi_n) - m_i n)/sqrt(n).
struct CovarianceEstimate {
  std::vector<std::vector<double>> matrix;  // ell x ell
  std::int64_t replicates = 0;
};

namespace detail {

template <typename Block, typename CountOf>
CovarianceEstimate covariance_from_blocks(const std::vector<Block>& blocks, std::int64_t ell,
                                          CountOf count_of, double denom_scale) {
  const std::int64_t n = static_cast<std::int64_t>(blocks.size());
  if (n < 10000)
    throw std::invalid_argument("estimate_covariance: need at least 10^4 blocks");
  double mean_x = 0;
  std::vector<double> mean_c(static_cast<std::size_t>(ell), 0.0);
  for (const auto& b : blocks) {
    mean_x += static_cast<double>(b.length);
    for (std::int64_t i = 1; i <= ell; ++i)
      mean_c[static_cast<std::size_t>(i - 1)] += static_cast<double>(count_of(b, i));
  }
  mean_x /= static_cast<double>(n);
  for (auto& c : mean_c) c /= static_cast<double>(n);

  const double denom = denom_scale * std::pow(mean_x, 1.5);
  std::vector<double> u(static_cast<std::size_t>(ell));
  std::vector<double> mean_u(static_cast<std::size_t>(ell), 0.0);
  std::vector<std::vector<double>> acc(static_cast<std::size_t>(ell),
                                       std::vector<double>(static_cast<std::size_t>(ell), 0.0));
  std::vector<std::vector<double>> us;
  us.reserve(static_cast<std::size_t>(n));
  for (const auto& b : blocks) {
    for (std::int64_t i = 1; i <= ell; ++i) {
      const std::size_t k = static_cast<std::size_t>(i - 1);
      u[k] = (static_cast<double>(count_of(b, i)) * mean_x -
              static_cast<double>(b.length) * mean_c[k]) /
             denom;
      mean_u[k] += u[k];
    }
    us.push_back(u);
  }
  for (auto& m : mean_u) m /= static_cast<double>(n);
  for (const auto& row : us)
    for (std::int64_t i = 0; i < ell; ++i)
      for (std::int64_t j = 0; j < ell; ++j)
        acc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +=
            (row[static_cast<std::size_t>(i)] - mean_u[static_cast<std::size_t>(i)]) *
            (row[static_cast<std::size_t>(j)] - mean_u[static_cast<std::size_t>(j)]);
  CovarianceEstimate out;
  out.matrix.assign(static_cast<std::size_t>(ell),
                    std::vector<double>(static_cast<std::size_t>(ell), 0.0));
  for (std::int64_t i = 0; i < ell; ++i)
    for (std::int64_t j = 0; j < ell; ++j)
      out.matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          acc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] /
          static_cast<double>(n - 1);
  out.replicates = n;
  return out;
}

}  // namespace detail

inline CovarianceEstimate estimate_covariance(const std::vector<RegenBlock>& blocks,
                                              std::int64_t ell) {
  return detail::covariance_from_blocks(
      blocks, ell,
      [](const RegenBlock& b, std::int64_t i) { return b.cycles.of_length(i); }, 1.0);
}

/// Even-cycle analogue: the extra sqrt(2) reflects blocks covering two
/// symmetric stretches of the permutation.
inline CovarianceEstimate estimate_covariance_paired(const std::vector<PairedRegenBlock>& blocks,
                                                     std::int64_t ell) {
  return detail::covariance_from_blocks(
      blocks, ell,
      [](const PairedRegenBlock& b, std::int64_t i) { return b.composed_cycles.of_length(i); },
      std::sqrt(2.0));
}

}  // namespace permstat
}  // namespace mallows
