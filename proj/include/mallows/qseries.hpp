#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mallows/qparam.hpp"

namespace mallows {
namespace qseries {

/// Normalizing constant Z(n,q) = prod_{i=1..n} (1-q^i)/(1-q); n! at q = 1.
/// Throws std::range_error instead of silently returning infinity.
inline double z_partition(std::int64_t n, const QParam& q) {
  if (n < 1) throw std::domain_error("z_partition: n must be >= 1");
  double z = 1.0;
  if (q.critical()) {
    for (std::int64_t i = 2; i <= n; ++i) z *= static_cast<double>(i);
  } else {
    const double qv = q.value();
    double qi = 1.0;
    for (std::int64_t i = 1; i <= n; ++i) {
      qi *= qv;
      z *= (1.0 - qi) / (1.0 - qv);
    }
  }
  if (!std::isfinite(z))
    throw std::range_error("z_partition: value exceeds the floating range");
  return z;
}

/// q-Pochhammer symbol (a;q)_n = prod_{i=1..n} (1 - a q^{i-1}).
inline double q_pochhammer(double a, const QParam& q, std::int64_t n) {
  if (n < 0) throw std::domain_error("q_pochhammer: n must be >= 0");
  double out = 1.0;
  double f = a;
  for (std::int64_t i = 0; i < n; ++i) {
    out *= (1.0 - f);
    f *= q.value();
  }
  return out;
}

/// (a;q)_infty for 0 < q < 1, truncated once the remaining factors are
/// provably within `tol` (relative) of 1.
inline double q_pochhammer_inf(double a, const QParam& q, double tol = 1e-14) {
  q.require_sub_critical("q_pochhammer_inf");
  const double qv = q.value();
  double out = 1.0;
  double f = a;
  // The log of the remaining product after factor i is bounded in magnitude by
  // |a| q^i / ((1-q)(1 - |a| q^i)) once |a| q^i < 1.
  for (std::int64_t i = 0; i < (1 << 26); ++i) {
    const double af = std::abs(f);
    if (af < 0.5 && af / (1.0 - qv) / (1.0 - af) < 0.5 * tol) break;
    out *= (1.0 - f);
    f *= qv;
  }
  return out;
}

/// Truncated symmetric pmf of the bi-infinite displacement Sigma(0), with a
/// certified bound on the mass outside the window [-radius .. radius].
struct DisplacementPmf {
  double q = 0;
  std::int64_t radius = 0;
  std::vector<double> half;  // half[d] = P[Sigma(0) = d] for d = 0..radius
  double tail_bound = 0;     // certified mass at |d| > radius

  double operator[](std::int64_t d) const {
    const std::int64_t a = d < 0 ? -d : d;
    return a <= radius ? half[static_cast<std::size_t>(a)] : 0.0;
  }

  double sum() const {
    double s = half[0];
    for (std::int64_t d = 1; d <= radius; ++d) s += 2.0 * half[static_cast<std::size_t>(d)];
    return s;
  }
};

namespace detail {

// Prefix log (q;q)_r values, grown on demand.
class LogPochTable {
 public:
  explicit LogPochTable(double q) : q_(q), lnqq_{0.0} {}

  double operator[](std::size_t r) {
    while (lnqq_.size() <= r) {
      const std::size_t i = lnqq_.size();
      lnqq_.push_back(lnqq_.back() + std::log1p(-std::pow(q_, static_cast<double>(i))));
    }
    return lnqq_[r];
  }

 private:
  double q_;
  std::vector<double> lnqq_;
};

// log of (1-q)(q;q)_infty, the displacement pmf prefactor.
inline double log_displacement_prefactor(double q) {
  double s = std::log1p(-q);
  double qi = q;
  for (std::int64_t i = 1;; ++i) {
    if (qi / (1.0 - q) / (1.0 - qi) < 1e-18 && qi < 0.5) break;
    s += std::log1p(-qi);
    qi *= q;
  }
  return s;
}

// P[Sigma(0)=d] for d >= 0 via the double q-series, summed over l with
// r = l + d. Terms decay super-geometrically (the exponent carries r*l).
// Returns the value and accumulates a bound on the truncated remainder.
inline double displacement_term(double q, double lnq, double lnpre, LogPochTable& lnqq,
                                std::int64_t d, double floor_abs, double& remainder) {
  double sum = 0.0;
  for (std::int64_t l = 0;; ++l) {
    const std::int64_t r = l + d;
    const double expo = static_cast<double>(r) * static_cast<double>(l) +
                        static_cast<double>(r) + static_cast<double>(l);
    const double term =
        std::exp(lnpre + expo * lnq - lnqq[static_cast<std::size_t>(r)] -
                 lnqq[static_cast<std::size_t>(l)]);
    sum += term;
    // ratio of consecutive terms: q^{2l+d+3} / ((1-q^{l+d+1})(1-q^{l+1}))
    const double ratio = std::pow(q, static_cast<double>(2 * l + d + 3)) /
                         ((1.0 - std::pow(q, static_cast<double>(l + d + 1))) *
                          (1.0 - std::pow(q, static_cast<double>(l + 1))));
    if (ratio < 0.5 && term * ratio / (1.0 - ratio) < floor_abs) {
      remainder += term * ratio / (1.0 - ratio);
      break;
    }
  }
  return sum;
}

}  // namespace detail

/// Evaluates P[Sigma(0) = d] on a window wide enough that the certified tail
/// mass is at most `tol`. Symmetric by construction (d >= 0 computed, mirrored).
inline DisplacementPmf displacement_pmf(const QParam& q, double tol = 1e-10) {
  q.require_sub_critical("displacement_pmf");
  if (!(tol > 0.0 && tol < 1.0))
    throw std::domain_error("displacement_pmf: tol must lie in (0,1)");
  if (tol < 1e-13)
    throw std::range_error("displacement_pmf: tol below double-precision resolution");

  const double qv = q.value();
  const double lnq = std::log(qv);
  const double lnpre = detail::log_displacement_prefactor(qv);
  detail::LogPochTable lnqq(qv);

  double inner_remainder = 0.0;

  DisplacementPmf pmf;
  pmf.q = qv;
  for (std::int64_t d = 0;; ++d) {
    // Per-d floor summable over any window width: sum_d 1/(d+1)^2 < 2.
    const double inner_floor = tol * 1e-4 / (static_cast<double>(d + 1) * static_cast<double>(d + 1));
    pmf.half.push_back(
        detail::displacement_term(qv, lnq, lnpre, lnqq, d, inner_floor, inner_remainder));
    // Outward ratio bound: p(d+1) <= p(d) * q / (1 - q^{d+1}), term by term.
    const double rho = qv / (1.0 - std::pow(qv, static_cast<double>(d + 1)));
    if (rho < 1.0) {
      const double edge = pmf.half.back() + inner_remainder;
      const double geo_tail = 2.0 * edge * rho / (1.0 - rho);
      if (geo_tail < 0.5 * tol) {
        pmf.radius = d;
        pmf.tail_bound = geo_tail + 2.0 * inner_remainder;
        break;
      }
    }
    if (d > (1 << 24))
      throw std::range_error("displacement_pmf: window failed to close");
  }
  return pmf;
}

/// Stationary distribution of the (infinity,q) arc chain, to certified tail.
struct StationaryArc {
  double q = 0;
  std::vector<double> weights;  // nu_0 .. nu_S
  double tail_bound = 0;        // certified stationary mass at s > S
};

inline StationaryArc nu_stationary(const QParam& q, double tol = 1e-12) {
  q.require_sub_critical("nu_stationary");
  if (!(tol > 0.0 && tol < 1.0))
    throw std::domain_error("nu_stationary: tol must lie in (0,1)");
  const double qv = q.value();
  const double lnq = std::log(qv);

  // ln t_s for t_s = prod_{i<=s} q^{2i-1}/(1-q^i)^2; the term ratio
  // q^{2s+1}/(1-q^{s+1})^2 is strictly decreasing in s, so once it drops
  // below 1/2 the remaining tail is bounded by a geometric series.
  std::vector<double> lnt{0.0};
  double ln_max = 0.0;
  double tail = 0.0;
  for (std::int64_t s = 0;; ++s) {
    const double ratio_ln = (2.0 * static_cast<double>(s) + 1.0) * lnq -
                            2.0 * std::log1p(-std::pow(qv, static_cast<double>(s + 1)));
    lnt.push_back(lnt.back() + ratio_ln);
    ln_max = std::max(ln_max, lnt.back());
    const double next_ratio = std::exp((2.0 * static_cast<double>(s) + 3.0) * lnq -
                                       2.0 * std::log1p(-std::pow(qv, static_cast<double>(s + 2))));
    if (next_ratio < 0.5) {
      const double rel_tail = std::exp(lnt.back() - ln_max) * next_ratio / (1.0 - next_ratio);
      if (rel_tail < 0.25 * tol) {
        tail = rel_tail;  // still relative to exp(ln_max); normalized below
        break;
      }
    }
    if (s > (1 << 26)) throw std::range_error("nu_stationary: series failed to converge");
  }

  double k_shifted = 0.0;
  for (double v : lnt) k_shifted += std::exp(v - ln_max);
  StationaryArc nu;
  nu.q = qv;
  nu.weights.reserve(lnt.size());
  for (double v : lnt) nu.weights.push_back(std::exp(v - ln_max) / (k_shifted + tail));
  nu.tail_bound = tail / (k_shifted + tail);
  return nu;
}

/// m_1 = sum_s nu_s q^{2s} (1-q): the limiting density of fixed points for
/// 0 < q < 1, equal to P[Sigma(0) = 0].
inline double m1_exact(const QParam& q, double tol = 1e-10) {
  q.require_sub_critical("m1_exact");
  const StationaryArc nu = nu_stationary(q, tol);
  const double qv = q.value();
  double s = 0.0;
  double q2s = 1.0;
  for (double w : nu.weights) {
    s += w * q2s;
    q2s *= qv * qv;
  }
  return s * (1.0 - qv);
}

/// mu_2 = (1/2) sum_d P[Sigma(0)=d]^2 with Sigma ~ Mallows(Z, 1/q); the
/// limiting density of 2-cycles for q > 1.
inline double mu2_exact(const QParam& q, double tol = 1e-10) {
  q.require_super_critical("mu2_exact");
  const DisplacementPmf pmf = displacement_pmf(q.reciprocal(), 0.1 * tol);
  double s = pmf.half[0] * pmf.half[0];
  for (std::int64_t d = 1; d <= pmf.radius; ++d) {
    const double p = pmf.half[static_cast<std::size_t>(d)];
    s += 2.0 * p * p;
  }
  return 0.5 * s;
}

/// (c_e, c_o) for q > 1: the limiting expected fixed-point counts of the
/// even-n and odd-n reflected models, equal to P[Sigma(0) odd] and
/// P[Sigma(0) even] respectively, with Sigma ~ Mallows(Z, 1/q).
inline std::pair<double, double> ce_co_exact(const QParam& q, double tol = 1e-10) {
  q.require_super_critical("ce_co_exact");
  const DisplacementPmf pmf = displacement_pmf(q.reciprocal(), 0.1 * tol);
  double even = pmf.half[0];
  double odd = 0.0;
  for (std::int64_t d = 1; d <= pmf.radius; ++d) {
    const double p = 2.0 * pmf.half[static_cast<std::size_t>(d)];
    if (d % 2 == 0)
      even += p;
    else
      odd += p;
  }
  return {odd, even};  // (c_e, c_o)
}

/// One row of the (n,q) arc chain kernel: probabilities of moving to
/// j = k-1, k, k+1 at time t. Zero elsewhere; rows sum to one.
inline std::map<std::int64_t, double> arc_transition_finite(std::int64_t k, std::int64_t t,
                                                            std::int64_t n, const QParam& q) {
  q.require_sub_critical("arc_transition_finite");
  if (t < 0 || t >= n || k < 0 || k > t || k > n - t)
    throw std::domain_error("arc_transition_finite: need 0 <= k <= min(t, n-t) and 0 <= t < n");
  const double qv = q.value();
  const double a = std::pow(qv, static_cast<double>(k));
  const double b = std::pow(qv, static_cast<double>(n - t));
  const double denom = (1.0 - b) * (1.0 - b);
  std::map<std::int64_t, double> row;
  row[k - 1] = (1.0 - a) * (1.0 - a) / denom;
  row[k] = (a - b) * (2.0 - a - a * qv) / denom;
  row[k + 1] = (a - b) * (a * qv - b) / denom;
  return row;
}

/// Kernel row of the (infinity,q) arc chain.
inline std::map<std::int64_t, double> arc_transition_infinite(std::int64_t k, const QParam& q) {
  q.require_sub_critical("arc_transition_infinite");
  if (k < 0) throw std::domain_error("arc_transition_infinite: need k >= 0");
  const double qv = q.value();
  const double a = std::pow(qv, static_cast<double>(k));
  std::map<std::int64_t, double> row;
  row[k - 1] = (1.0 - a) * (1.0 - a);
  row[k] = 2.0 * a - a * a - a * a * qv;
  row[k + 1] = a * a * qv;
  return row;
}

/// P[Pi_n(t+1) = t+1 | kappa_t = k] for the (n,q) model.
inline double fixed_point_prob_given_arc(std::int64_t k, std::int64_t t, std::int64_t n,
                                         const QParam& q) {
  q.require_sub_critical("fixed_point_prob_given_arc");
  if (t < 0 || t >= n || k < 0 || k > t || k > n - t)
    throw std::domain_error(
        "fixed_point_prob_given_arc: need 0 <= k <= min(t, n-t) and 0 <= t < n");
  const double qv = q.value();
  const double a = std::pow(qv, static_cast<double>(k));
  const double b = std::pow(qv, static_cast<double>(n - t));
  return (a - a * qv) * (a - b) / ((1.0 - b) * (1.0 - b));
}

/// The limit constants bundled for export; fields inapplicable to the regime
/// of q are left empty.
struct ExactConstants {
  double q = 0;
  double tol = 0;
  std::optional<double> m1;
  std::optional<double> mu2;
  std::optional<double> c_e;
  std::optional<double> c_o;
};

inline ExactConstants exact_constants(const QParam& q, double tol = 1e-10) {
  q.require_not_critical("exact_constants");
  ExactConstants c;
  c.q = q.value();
  c.tol = tol;
  if (q.sub_critical()) {
    c.m1 = m1_exact(q, tol);
  } else {
    c.mu2 = mu2_exact(q, tol);
    const auto [ce, co] = ce_co_exact(q, tol);
    c.c_e = ce;
    c.c_o = co;
  }
  return c;
}

}  // namespace qseries
}  // namespace mallows
