#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mallows/permstat.hpp"
#include "mallows/permutation.hpp"
#include "mallows/qparam.hpp"
#include "mallows/qseries.hpp"
#include "mallows/stats.hpp"

namespace mallows {
namespace oracle {

constexpr std::int64_t kMaxEnumeration = 8;        // 8! = 40320 states
constexpr std::int64_t kMaxWindowEnumeration = 9;  // single-marginal op only

/// Exact Mallows pmf over all of S_n, support in lexicographic order so that
/// the k-th entry is the permutation of lexicographic rank k.
struct ExactPmf {
  std::vector<Permutation> support;
  std::vector<double> probs;
  double normalizer = 0;  // equals Z(n,q)
};

/// Lexicographic rank of a permutation (its Lehmer code in factorial base).
inline std::int64_t perm_rank(const Permutation& perm) {
  const std::int64_t n = perm.size();
  std::vector<std::int64_t> factorial(static_cast<std::size_t>(n), 1);
  for (std::int64_t k = 1; k < n; ++k)
    factorial[static_cast<std::size_t>(k)] = factorial[static_cast<std::size_t>(k - 1)] * k;
  std::int64_t rank = 0;
  for (std::int64_t i = 1; i <= n; ++i) {
    std::int64_t smaller_later = 0;
    for (std::int64_t j = i + 1; j <= n; ++j)
      if (perm(j) < perm(i)) ++smaller_later;
    rank += smaller_later * factorial[static_cast<std::size_t>(n - i)];
  }
  return rank;
}

inline ExactPmf enumerate_pmf(std::int64_t n, const QParam& q) {
  if (n < 1 || n > kMaxEnumeration)
    throw std::domain_error("enumerate_pmf: need 1 <= n <= 8");
  ExactPmf pmf;
  std::vector<Permutation::Image> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Permutation::Image{1});
  double z = 0;
  do {
    Permutation p{std::vector<Permutation::Image>(v)};
    const double w = std::pow(q.value(), static_cast<double>(permstat::inversions(p)));
    z += w;
    pmf.support.push_back(std::move(p));
    pmf.probs.push_back(w);
  } while (std::next_permutation(v.begin(), v.end()));
  for (auto& p : pmf.probs) p /= z;
  pmf.normalizer = z;
  return pmf;
}

/// E C_i(Pi_n) by full enumeration.
inline double exact_expected_cycles(std::int64_t n, const QParam& q, std::int64_t i) {
  const ExactPmf pmf = enumerate_pmf(n, q);
  double e = 0;
  for (std::size_t k = 0; k < pmf.support.size(); ++k)
    e += pmf.probs[k] *
         static_cast<double>(permstat::cycle_counts(pmf.support[k]).of_length(i));
  return e;
}

/// Exact marginal of the arc chain kappa_t under Mallows(n,q).
inline std::map<std::int64_t, double> exact_arc_marginal(std::int64_t n, const QParam& q,
                                                         std::int64_t t) {
  if (t < 0 || t > n) throw std::domain_error("exact_arc_marginal: need 0 <= t <= n");
  const ExactPmf pmf = enumerate_pmf(n, q);
  std::map<std::int64_t, double> out;
  for (std::size_t k = 0; k < pmf.support.size(); ++k) {
    const auto path = permstat::arc_path(pmf.support[k]);
    out[path.kappa[static_cast<std::size_t>(t)]] += pmf.probs[k];
  }
  return out;
}

/// P(center maps to center + d) for the window Mallows(n,q), n odd <= 9.
inline double exact_window_displacement(std::int64_t n, const QParam& q, std::int64_t d) {
  if (n < 1 || n > kMaxWindowEnumeration || n % 2 == 0)
    throw std::domain_error("exact_window_displacement: need odd 1 <= n <= 9");
  const std::int64_t center = (n + 1) / 2;
  if (center + d < 1 || center + d > n) return 0.0;
  std::vector<Permutation::Image> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Permutation::Image{1});
  double z = 0, hit = 0;
  do {
    Permutation p{std::vector<Permutation::Image>(v)};
    const double w = std::pow(q.value(), static_cast<double>(permstat::inversions(p)));
    z += w;
    if (p(center) == center + d) hit += w;
  } while (std::next_permutation(v.begin(), v.end()));
  return hit / z;
}

/// Pearson goodness-of-fit report. Cells whose expected count falls below 5
/// are pooled (smallest expected first) before the statistic is formed.
struct GofReport {
  double statistic = 0;
  std::int64_t dof = 0;
  double p_value = 1;
  std::int64_t cells_merged = 0;
};

namespace detail {

inline GofReport pearson(const std::vector<double>& observed,
                         const std::vector<double>& expected_counts) {
  // Pool underpopulated cells: sparse cells (expected < 5) are grouped in
  // ascending order until each group carries mass >= 5; populated cells
  // stand alone. A final group below 1 folds into the previous group.
  std::vector<std::size_t> order(expected_counts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return expected_counts[a] < expected_counts[b]; });

  std::vector<double> obs_bins, exp_bins;
  double o_acc = 0, e_acc = 0;
  for (std::size_t idx : order) {
    if (expected_counts[idx] >= 5.0) {
      obs_bins.push_back(observed[idx]);
      exp_bins.push_back(expected_counts[idx]);
      continue;
    }
    o_acc += observed[idx];
    e_acc += expected_counts[idx];
    if (e_acc >= 5.0) {
      obs_bins.push_back(o_acc);
      exp_bins.push_back(e_acc);
      o_acc = e_acc = 0;
    }
  }
  if (e_acc > 0) {
    if (e_acc >= 1.0 || exp_bins.empty()) {
      obs_bins.push_back(o_acc);
      exp_bins.push_back(e_acc);
    } else {
      obs_bins.back() += o_acc;
      exp_bins.back() += e_acc;
    }
  }
  if (obs_bins.size() < 2)
    throw std::invalid_argument("chi_square_gof: fewer than two cells after merging");
  const std::int64_t merged =
      static_cast<std::int64_t>(expected_counts.size() - obs_bins.size());

  GofReport report;
  for (std::size_t i = 0; i < obs_bins.size(); ++i) {
    const double d = obs_bins[i] - exp_bins[i];
    report.statistic += d * d / exp_bins[i];
  }
  report.dof = static_cast<std::int64_t>(obs_bins.size()) - 1;
  report.p_value = stats::chi_square_pvalue(report.statistic, report.dof);
  report.cells_merged = merged;
  return report;
}

}  // namespace detail

/// Chi-square GOF of observed cell counts against expected cell probabilities.
inline GofReport chi_square_gof(const std::vector<std::int64_t>& observed,
                                const std::vector<double>& expected_probs) {
  if (observed.empty() || observed.size() != expected_probs.size())
    throw std::invalid_argument("chi_square_gof: empty or mismatched observation");
  const double total =
      std::accumulate(observed.begin(), observed.end(), 0.0,
                      [](double a, std::int64_t b) { return a + static_cast<double>(b); });
  if (total < 1.0) throw std::invalid_argument("chi_square_gof: empty observation");
  const double prob_mass = std::accumulate(expected_probs.begin(), expected_probs.end(), 0.0);
  std::vector<double> obs(observed.begin(), observed.end());
  std::vector<double> exp_counts(expected_probs.size());
  for (std::size_t i = 0; i < expected_probs.size(); ++i)
    exp_counts[i] = expected_probs[i] / prob_mass * total;
  return detail::pearson(obs, exp_counts);
}

inline GofReport chi_square_gof(const std::map<std::int64_t, std::int64_t>& observed,
                                const std::map<std::int64_t, double>& expected) {
  std::vector<std::int64_t> obs;
  std::vector<double> probs;
  for (const auto& [state, prob] : expected) {
    probs.push_back(prob);
    const auto it = observed.find(state);
    obs.push_back(it == observed.end() ? 0 : it->second);
  }
  // observed states outside the expected support indicate a real mismatch;
  // give them a near-zero expected cell so the statistic blows up honestly
  for (const auto& [state, count] : observed) {
    if (!expected.count(state) && count > 0) {
      obs.push_back(count);
      probs.push_back(1e-12);
    }
  }
  return chi_square_gof(obs, probs);
}

/// Two-sample chi-square for equality of two multinomials over shared cells.
inline GofReport two_sample_chi_square(const std::vector<std::int64_t>& a,
                                       const std::vector<std::int64_t>& b) {
  if (a.empty() || a.size() != b.size())
    throw std::invalid_argument("two_sample_chi_square: empty or mismatched samples");
  const double na = std::accumulate(a.begin(), a.end(), 0.0,
                                    [](double x, std::int64_t y) { return x + y; });
  const double nb = std::accumulate(b.begin(), b.end(), 0.0,
                                    [](double x, std::int64_t y) { return x + y; });
  if (na < 1 || nb < 1) throw std::invalid_argument("two_sample_chi_square: empty sample");

  // Pool cells until each pooled cell has combined count >= 10.
  std::vector<double> pa, pb;
  double aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa += static_cast<double>(a[i]);
    bb += static_cast<double>(b[i]);
    if (aa + bb >= 10.0) {
      pa.push_back(aa);
      pb.push_back(bb);
      aa = bb = 0;
    }
  }
  if (aa + bb > 0 && !pa.empty()) {
    pa.back() += aa;
    pb.back() += bb;
  }
  if (pa.size() < 2)
    throw std::invalid_argument("two_sample_chi_square: fewer than two cells after merging");

  GofReport report;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double tot = pa[i] + pb[i];
    const double ea = tot * na / (na + nb);
    const double eb = tot * nb / (na + nb);
    report.statistic += (pa[i] - ea) * (pa[i] - ea) / ea + (pb[i] - eb) * (pb[i] - eb) / eb;
  }
  report.dof = static_cast<std::int64_t>(pa.size()) - 1;
  report.p_value = stats::chi_square_pvalue(report.statistic, report.dof);
  report.cells_merged = static_cast<std::int64_t>(a.size() - pa.size());
  return report;
}

}  // namespace oracle
}  // namespace mallows
