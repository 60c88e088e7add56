#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mallows/oracle.hpp"
#include "mallows/permstat.hpp"
#include "mallows/qparam.hpp"
#include "mallows/qseries.hpp"
#include "mallows/sampler.hpp"
#include "mallows/stats.hpp"

namespace mallows {
namespace experiments {

struct ExperimentConfig {
  std::string name;
  std::vector<double> q_grid;
  std::int64_t n = 1000;
  std::int64_t replicates = 10000;
  std::uint64_t seed = 20201019;
  std::int64_t workers = 1;
  std::string output_path;
  double tol = 1e-8;
};

/// Default grids overlaying the paper's figure ranges.
inline std::vector<double> figure1_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 19; ++i) g.push_back(0.05 * i);
  return g;
}

inline std::vector<double> figure23_grid() {
  return {1.25, 1.5, 2.0, 3.0, 5.0, 10.0, 15.0, 20.0, 25.0};
}

namespace detail {

// Distinct stream ids per (experiment phase, grid index, replicate), so no
// two replicates anywhere share a substream for a given seed.
inline std::uint64_t stream_id(std::uint64_t phase, std::uint64_t grid_index,
                               std::uint64_t replicate) {
  return (phase << 48) ^ (grid_index << 32) ^ replicate;
}

}  // namespace detail

/// Runs f once per replicate, each on its own derived RngStream, distributing
/// replicates over `workers` threads. Results are indexed by replicate, so the
/// outcome is independent of the worker count.
template <typename T, typename F>
std::vector<T> replicate_map(std::int64_t replicates, std::int64_t workers, std::uint64_t seed,
                             std::uint64_t phase, std::uint64_t grid_index, F&& f) {
  if (replicates < 1) throw std::invalid_argument("replicate_map: replicates must be >= 1");
  std::vector<T> out(static_cast<std::size_t>(replicates));
  const std::int64_t nw = std::max<std::int64_t>(1, std::min(workers, replicates));
  if (nw == 1) {
    for (std::int64_t r = 0; r < replicates; ++r) {
      RngStream rng(seed, detail::stream_id(phase, grid_index, static_cast<std::uint64_t>(r)));
      out[static_cast<std::size_t>(r)] = f(rng);
    }
    return out;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::int64_t w = 0; w < nw; ++w) {
    const std::int64_t lo = replicates * w / nw;
    const std::int64_t hi = replicates * (w + 1) / nw;
    pool.emplace_back([&, lo, hi]() {
      try {
        for (std::int64_t r = lo; r < hi; ++r) {
          RngStream rng(seed, detail::stream_id(phase, grid_index, static_cast<std::uint64_t>(r)));
          out[static_cast<std::size_t>(r)] = f(rng);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

// ---------------------------------------------------------------------------
// CSV output: 12 significant digits, provenance columns on every row.
// ---------------------------------------------------------------------------

inline std::string csv_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size())
      throw std::invalid_argument("CsvTable: row width does not match header");
    rows_.push_back(std::move(cells));
  }

  std::string to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
    os << '\n';
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
      os << '\n';
    }
    return os.str();
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("CsvTable: cannot open " + path);
    out << to_string();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// ---------------------------------------------------------------------------
// Figure curves
// ---------------------------------------------------------------------------

struct CurveRow {
  double q = 0;
  Estimate mc;       // normalized cycle-count mean
  double exact = 0;  // matching series constant
};

/// Figure 1: mean C_1(Pi_n)/n against m1_exact over a subcritical q grid.
inline std::vector<CurveRow> run_m1_curve(const ExperimentConfig& cfg) {
  std::vector<CurveRow> rows;
  for (std::size_t gi = 0; gi < cfg.q_grid.size(); ++gi) {
    const QParam q(cfg.q_grid[gi]);
    q.require_sub_critical("run_m1_curve");
    const auto values = replicate_map<double>(
        cfg.replicates, cfg.workers, cfg.seed, 1, gi, [&](RngStream& rng) {
          const auto perm = sampler::sample_mallows_finite(cfg.n, q, rng);
          return static_cast<double>(permstat::cycle_counts(perm).of_length(1)) /
                 static_cast<double>(cfg.n);
        });
    rows.push_back({q.value(), stats::estimate_of(values), qseries::m1_exact(q, cfg.tol)});
  }
  return rows;
}

/// Figure 2: mean C_2(Pi_n)/n against mu2_exact over a supercritical q grid.
inline std::vector<CurveRow> run_mu2_curve(const ExperimentConfig& cfg) {
  std::vector<CurveRow> rows;
  for (std::size_t gi = 0; gi < cfg.q_grid.size(); ++gi) {
    const QParam q(cfg.q_grid[gi]);
    q.require_super_critical("run_mu2_curve");
    const auto values = replicate_map<double>(
        cfg.replicates, cfg.workers, cfg.seed, 2, gi, [&](RngStream& rng) {
          const auto perm = sampler::sample_mallows_finite(cfg.n, q, rng);
          return static_cast<double>(permstat::cycle_counts(perm).of_length(2)) /
                 static_cast<double>(cfg.n);
        });
    rows.push_back({q.value(), stats::estimate_of(values), qseries::mu2_exact(q, cfg.tol)});
  }
  return rows;
}

struct CecoRow {
  double q = 0;
  Estimate even_n;  // mean C_1(Pi_n), n even -- tight, not divided by n
  Estimate odd_n;   // mean C_1(Pi_{n+1})
  double exact_ce = 0;
  double exact_co = 0;
};

/// Figure 3: expected 1-cycle counts at matched parities against c_e, c_o.
inline std::vector<CecoRow> run_ceco_curve(const ExperimentConfig& cfg) {
  if (cfg.n % 2 != 0)
    throw std::invalid_argument("run_ceco_curve: n must be even (the odd run uses n+1)");
  std::vector<CecoRow> rows;
  for (std::size_t gi = 0; gi < cfg.q_grid.size(); ++gi) {
    const QParam q(cfg.q_grid[gi]);
    q.require_super_critical("run_ceco_curve");
    const auto fixed_count = [&](std::int64_t n) {
      return replicate_map<double>(
          cfg.replicates, cfg.workers, cfg.seed, n % 2 == 0 ? 3 : 4, gi, [&](RngStream& rng) {
            const auto perm = sampler::sample_mallows_finite(n, q, rng);
            return static_cast<double>(permstat::cycle_counts(perm).of_length(1));
          });
    };
    const auto even = fixed_count(cfg.n);
    const auto odd = fixed_count(cfg.n + 1);
    const auto [ce, co] = qseries::ce_co_exact(q, cfg.tol);
    rows.push_back({q.value(), stats::estimate_of(even), stats::estimate_of(odd), ce, co});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CLT property checks
// ---------------------------------------------------------------------------

struct CltRow {
  std::int64_t cycle_length = 0;  // i for q<1; 2i for the even check
  double mean_std = 0;            // moments of (C - center*n)/sqrt(n)
  double var_std = 0;
  double skewness = 0;
  double excess_kurtosis = 0;
  double cov_hat = 0;    // regeneration-based P^ or Q^ diagonal entry
  double var_ratio = 0;  // var_std / cov_hat
  bool mean_ok = false, skew_ok = false, kurt_ok = false, var_ok = false;

  bool pass() const { return mean_ok && skew_ok && kurt_ok && var_ok; }
};

struct CltReport {
  std::vector<CltRow> rows;
  Estimate center_hat;        // m^_1 (or mu^_2)
  double center_exact = 0;    // m1_exact (or mu2_exact)
  bool center_ok = false;     // |hat - exact| <= 4 SE

  bool all_pass() const {
    if (!center_ok) return false;
    for (const auto& r : rows)
      if (!r.pass()) return false;
    return true;
  }
};

// Acceptance bands: ~4 sigma normal-sampling bands for skewness/kurtosis at
// 5000 replicates, and a 15% variance agreement window.
constexpr double kSkewBand = 0.15;
constexpr double kKurtosisBand = 0.3;
constexpr double kVarianceWindow = 0.15;

namespace detail {

inline CltRow standardized_row(std::int64_t cycle_length, std::span<const double> counts,
                               double center, std::int64_t n, double cov_hat) {
  std::vector<double> std_values(counts.size());
  const double root_n = std::sqrt(static_cast<double>(n));
  for (std::size_t r = 0; r < counts.size(); ++r)
    std_values[r] = (counts[r] - center * static_cast<double>(n)) / root_n;
  const auto m = stats::moments(std_values);
  CltRow row;
  row.cycle_length = cycle_length;
  row.mean_std = m.mean;
  row.var_std = m.variance;
  row.skewness = m.skewness;
  row.excess_kurtosis = m.excess_kurtosis;
  row.cov_hat = cov_hat;
  row.var_ratio = m.variance / cov_hat;
  const double reps = static_cast<double>(counts.size());
  row.mean_ok = std::abs(m.mean) <= 4.0 * std::sqrt(m.variance / reps);
  row.skew_ok = std::abs(m.skewness) <= kSkewBand;
  row.kurt_ok = std::abs(m.excess_kurtosis) <= kKurtosisBand;
  row.var_ok = std::abs(row.var_ratio - 1.0) <= kVarianceWindow;
  return row;
}

}  // namespace detail

/// Gaussian-limit property check for 0 < q < 1: standardized moments of
/// (C_i(Pi_n) - m^_i n)/sqrt(n) for i <= ell, with the variance compared to
/// the regeneration covariance estimate. `stream_steps` sizes the block run;
/// it must be large enough that the centering error m^_i - m_i stays well
/// inside the mean band (steps >> n * replicates / 16).
inline CltReport run_clt_check(const ExperimentConfig& cfg, std::int64_t ell,
                               std::int64_t stream_steps = 20'000'000) {
  if (cfg.q_grid.size() != 1)
    throw std::invalid_argument("run_clt_check: expects a single q");
  const QParam q(cfg.q_grid[0]);
  q.require_sub_critical("run_clt_check");

  sampler::MallowsStream stream(q, RngStream(cfg.seed, detail::stream_id(5, 0, 0)));
  const auto blocks = permstat::collect_blocks(stream, stream_steps);
  const auto cov = permstat::estimate_covariance(blocks, ell);

  const auto counts = replicate_map<std::vector<std::int64_t>>(
      cfg.replicates, cfg.workers, cfg.seed, 6, 0, [&](RngStream& rng) {
        const auto perm = sampler::sample_mallows_finite(cfg.n, q, rng);
        const auto cc = permstat::cycle_counts(perm);
        std::vector<std::int64_t> c(static_cast<std::size_t>(ell));
        for (std::int64_t i = 1; i <= ell; ++i)
          c[static_cast<std::size_t>(i - 1)] = cc.of_length(i);
        return c;
      });

  CltReport report;
  report.center_hat = permstat::estimate_mi(blocks, 1);
  report.center_exact = qseries::m1_exact(q, cfg.tol);
  report.center_ok = std::abs(report.center_hat.mean - report.center_exact) <=
                     4.0 * report.center_hat.std_error;
  for (std::int64_t i = 1; i <= ell; ++i) {
    std::vector<double> ci(counts.size());
    for (std::size_t r = 0; r < counts.size(); ++r)
      ci[r] = static_cast<double>(counts[r][static_cast<std::size_t>(i - 1)]);
    const double center = permstat::estimate_mi(blocks, i).mean;
    report.rows.push_back(detail::standardized_row(
        i, ci, center, cfg.n,
        cov.matrix[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(i - 1)]));
  }
  return report;
}

/// Even-cycle analogue for q > 1: paired streams at 1/q provide mu^_{2i} and
/// Q^; C_2 is centered with mu2_exact (closed form), higher even counts with
/// their estimates.
inline CltReport run_even_clt_check(const ExperimentConfig& cfg, std::int64_t ell,
                                    std::int64_t stream_steps = 20'000'000) {
  if (cfg.q_grid.size() != 1)
    throw std::invalid_argument("run_even_clt_check: expects a single q");
  const QParam q(cfg.q_grid[0]);
  q.require_super_critical("run_even_clt_check");
  const QParam qi = q.reciprocal();

  sampler::MallowsStream a(qi, RngStream(cfg.seed, detail::stream_id(7, 0, 0)));
  sampler::MallowsStream b(qi, RngStream(cfg.seed, detail::stream_id(7, 0, 1)));
  const auto blocks = permstat::collect_paired_blocks(a, b, stream_steps);
  const auto cov = permstat::estimate_covariance_paired(blocks, ell);

  const auto counts = replicate_map<std::vector<std::int64_t>>(
      cfg.replicates, cfg.workers, cfg.seed, 8, 0, [&](RngStream& rng) {
        const auto perm = sampler::sample_mallows_finite(cfg.n, q, rng);
        const auto cc = permstat::cycle_counts(perm);
        std::vector<std::int64_t> c(static_cast<std::size_t>(ell));
        for (std::int64_t i = 1; i <= ell; ++i)
          c[static_cast<std::size_t>(i - 1)] = cc.of_length(2 * i);
        return c;
      });

  CltReport report;
  report.center_hat = permstat::estimate_mu2i(blocks, 1);
  report.center_exact = qseries::mu2_exact(q, cfg.tol);
  report.center_ok = std::abs(report.center_hat.mean - report.center_exact) <=
                     4.0 * report.center_hat.std_error;
  for (std::int64_t i = 1; i <= ell; ++i) {
    std::vector<double> ci(counts.size());
    for (std::size_t r = 0; r < counts.size(); ++r)
      ci[r] = static_cast<double>(counts[r][static_cast<std::size_t>(i - 1)]);
    const double center =
        i == 1 ? report.center_exact : permstat::estimate_mu2i(blocks, i).mean;
    report.rows.push_back(detail::standardized_row(
        2 * i, ci, center, cfg.n,
        cov.matrix[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(i - 1)]));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Odd-cycle tightness (q > 1)
// ---------------------------------------------------------------------------

struct TightnessReport {
  double q = 0;
  std::int64_t n = 0;  // base size; runs use n/2, n, n/2+1, n+1
  std::int64_t replicates = 0;
  double tv_even_pair = 0, tv_even_pair_se = 0;  // odd-count pmf: n/2 vs n
  double tv_odd_pair = 0, tv_odd_pair_se = 0;    // n/2+1 vs n+1
  double tv_parity = 0, tv_parity_se = 0;        // n vs n+1
  double mean_elems_half = 0, mean_elems_full = 0;      // even sizes
  double mean_elems_half_odd = 0, mean_elems_full_odd = 0;
  bool same_parity_ok = false, parity_split_ok = false, ratio_ok = false;

  bool all_pass() const { return same_parity_ok && parity_split_ok && ratio_ok; }
};

namespace detail {

struct OddCountSample {
  std::map<std::int64_t, std::int64_t> histogram;  // total odd-cycle count
  double mean_elements = 0;                        // elements in odd cycles
};

inline OddCountSample odd_count_sample(const QParam& q, std::int64_t n, std::int64_t reps,
                                       std::int64_t workers, std::uint64_t seed,
                                       std::uint64_t phase) {
  const auto values = replicate_map<std::pair<std::int64_t, std::int64_t>>(
      reps, workers, seed, phase, static_cast<std::uint64_t>(n), [&](RngStream& rng) {
        const auto perm = sampler::sample_mallows_finite(n, q, rng);
        const auto cc = permstat::cycle_counts(perm);
        std::int64_t elems = 0;
        for (std::size_t i = 1; i < cc.counts.size(); i += 2)
          elems += static_cast<std::int64_t>(i) * cc.counts[i];
        return std::make_pair(cc.odd_total(), elems);
      });
  OddCountSample out;
  double sum_elems = 0;
  for (const auto& [count, elems] : values) {
    ++out.histogram[count];
    sum_elems += static_cast<double>(elems);
  }
  out.mean_elements = sum_elems / static_cast<double>(reps);
  return out;
}

struct TvEstimate {
  double tv = 0;
  double se = 0;
};

// Total variation distance between two empirical pmfs, with a multinomial
// delta-method standard error (covariances ignored, slightly conservative).
inline TvEstimate tv_distance(const std::map<std::int64_t, std::int64_t>& a, std::int64_t na,
                              const std::map<std::int64_t, std::int64_t>& b, std::int64_t nb) {
  std::map<std::int64_t, std::pair<double, double>> cells;
  for (const auto& [k, c] : a) cells[k].first = static_cast<double>(c) / static_cast<double>(na);
  for (const auto& [k, c] : b) cells[k].second = static_cast<double>(c) / static_cast<double>(nb);
  TvEstimate out;
  double var = 0;
  for (const auto& [k, pq] : cells) {
    out.tv += 0.5 * std::abs(pq.first - pq.second);
    var += 0.25 * (pq.first * (1 - pq.first) / static_cast<double>(na) +
                   pq.second * (1 - pq.second) / static_cast<double>(nb));
  }
  out.se = std::sqrt(var);
  return out;
}

}  // namespace detail

/// Theorem-1.3-style check: the total odd-cycle count needs no rescaling, and
/// the even-n and odd-n limits are distinct.
inline TightnessReport run_odd_tightness(const ExperimentConfig& cfg) {
  if (cfg.q_grid.size() != 1)
    throw std::invalid_argument("run_odd_tightness: expects a single q");
  const QParam q(cfg.q_grid[0]);
  q.require_super_critical("run_odd_tightness");
  if (cfg.n % 2 != 0 || cfg.n < 4)
    throw std::invalid_argument("run_odd_tightness: n must be even and >= 4");

  const std::int64_t reps = cfg.replicates;
  const auto half = detail::odd_count_sample(q, cfg.n / 2, reps, cfg.workers, cfg.seed, 9);
  const auto full = detail::odd_count_sample(q, cfg.n, reps, cfg.workers, cfg.seed, 9);
  const auto half_odd =
      detail::odd_count_sample(q, cfg.n / 2 + 1, reps, cfg.workers, cfg.seed, 10);
  const auto full_odd = detail::odd_count_sample(q, cfg.n + 1, reps, cfg.workers, cfg.seed, 10);

  TightnessReport report;
  report.q = q.value();
  report.n = cfg.n;
  report.replicates = reps;
  const auto even_pair = detail::tv_distance(half.histogram, reps, full.histogram, reps);
  const auto odd_pair = detail::tv_distance(half_odd.histogram, reps, full_odd.histogram, reps);
  const auto parity = detail::tv_distance(full.histogram, reps, full_odd.histogram, reps);
  report.tv_even_pair = even_pair.tv;
  report.tv_even_pair_se = even_pair.se;
  report.tv_odd_pair = odd_pair.tv;
  report.tv_odd_pair_se = odd_pair.se;
  report.tv_parity = parity.tv;
  report.tv_parity_se = parity.se;
  report.mean_elems_half = half.mean_elements;
  report.mean_elems_full = full.mean_elements;
  report.mean_elems_half_odd = half_odd.mean_elements;
  report.mean_elems_full_odd = full_odd.mean_elements;

  report.same_parity_ok = even_pair.tv <= 0.02 + 4.0 * even_pair.se &&
                          odd_pair.tv <= 0.02 + 4.0 * odd_pair.se;
  report.parity_split_ok = parity.tv >= 5.0 * parity.se;
  report.ratio_ok = full.mean_elements <= 1.2 * half.mean_elements &&
                    full_odd.mean_elements <= 1.2 * half_odd.mean_elements;
  return report;
}

// ---------------------------------------------------------------------------
// Parity oscillation tails (windows, q < 1)
// ---------------------------------------------------------------------------

struct ParityTailRow {
  std::int64_t m = 0;       // threshold
  double p_rho = 0, se_rho = 0;  // P(C_1(rho o Sigma) >= m)
  double p_r = 0, se_r = 0;      // P(C_1(r o Sigma) >= m)
};

struct ParityTailReport {
  double q = 0;
  std::int64_t w = 0;
  std::int64_t replicates = 0;
  std::vector<ParityTailRow> rows;  // m = 1 .. 2*kmax+1

  const ParityTailRow& at(std::int64_t m) const { return rows.at(static_cast<std::size_t>(m - 1)); }
};

/// Tail estimates of the reflected fixed-point counts over sampled windows.
/// Each replicate draws one r-shaped and one rho-shaped window; counts only
/// read inside the trust margins.
inline ParityTailReport run_parity_tail(const ExperimentConfig& cfg, std::int64_t w,
                                        std::int64_t kmax) {
  if (cfg.q_grid.size() != 1)
    throw std::invalid_argument("run_parity_tail: expects a single q");
  const QParam q(cfg.q_grid[0]);
  q.require_sub_critical("run_parity_tail");
  if (w < 32) throw std::invalid_argument("run_parity_tail: need W >= 32");
  if (kmax < 1) throw std::invalid_argument("run_parity_tail: need kmax >= 1");
  {
    // margin sanity: the window must keep a usable center band
    const std::int64_t margin = sampler::window_margin(2 * w + 1, q);
    if (margin >= w)
      throw std::invalid_argument(
          "run_parity_tail: trust margin swallows the window; increase W or lower q");
  }

  const auto counts = replicate_map<std::pair<std::int64_t, std::int64_t>>(
      cfg.replicates, cfg.workers, cfg.seed, 11, 0, [&](RngStream& rng) {
        const auto win_r = sampler::sample_mallows_window(w, q, rng);
        const auto win_rho = sampler::sample_mallows_window_rho(w, q, rng);
        return std::make_pair(
            permstat::fixed_points_reflected(win_rho, permstat::Reflection::Rho),
            permstat::fixed_points_reflected(win_r, permstat::Reflection::R));
      });

  ParityTailReport report;
  report.q = q.value();
  report.w = w;
  report.replicates = cfg.replicates;
  const double n = static_cast<double>(cfg.replicates);
  for (std::int64_t m = 1; m <= 2 * kmax + 1; ++m) {
    std::int64_t rho_ge = 0, r_ge = 0;
    for (const auto& [rho_count, r_count] : counts) {
      if (rho_count >= m) ++rho_ge;
      if (r_count >= m) ++r_ge;
    }
    ParityTailRow row;
    row.m = m;
    row.p_rho = static_cast<double>(rho_ge) / n;
    row.p_r = static_cast<double>(r_ge) / n;
    row.se_rho = std::sqrt(row.p_rho * (1 - row.p_rho) / n);
    row.se_r = std::sqrt(row.p_r * (1 - row.p_r) / n);
    report.rows.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------
// CSV emission per subcommand schema
// ---------------------------------------------------------------------------

inline CsvTable m1_curve_csv(const ExperimentConfig& cfg, const std::vector<CurveRow>& rows) {
  CsvTable t({"q", "n", "replicates", "seed", "mc_mean", "mc_se", "exact_m1"});
  for (const auto& r : rows)
    t.add_row({csv_double(r.q), std::to_string(cfg.n), std::to_string(cfg.replicates),
               std::to_string(cfg.seed), csv_double(r.mc.mean), csv_double(r.mc.std_error),
               csv_double(r.exact)});
  return t;
}

inline CsvTable mu2_curve_csv(const ExperimentConfig& cfg, const std::vector<CurveRow>& rows) {
  CsvTable t({"q", "n", "replicates", "seed", "mc_mean", "mc_se", "exact_mu2"});
  for (const auto& r : rows)
    t.add_row({csv_double(r.q), std::to_string(cfg.n), std::to_string(cfg.replicates),
               std::to_string(cfg.seed), csv_double(r.mc.mean), csv_double(r.mc.std_error),
               csv_double(r.exact)});
  return t;
}

inline CsvTable ceco_curve_csv(const ExperimentConfig& cfg, const std::vector<CecoRow>& rows) {
  CsvTable t({"q", "n", "replicates", "seed", "mc_even_n", "se_even", "mc_odd_n", "se_odd",
              "exact_ce", "exact_co"});
  for (const auto& r : rows)
    t.add_row({csv_double(r.q), std::to_string(cfg.n), std::to_string(cfg.replicates),
               std::to_string(cfg.seed), csv_double(r.even_n.mean),
               csv_double(r.even_n.std_error), csv_double(r.odd_n.mean),
               csv_double(r.odd_n.std_error), csv_double(r.exact_ce), csv_double(r.exact_co)});
  return t;
}

inline CsvTable clt_csv(const ExperimentConfig& cfg, const CltReport& report) {
  CsvTable t({"q", "n", "replicates", "seed", "cycle_length", "mean_std", "var_std", "skewness",
              "excess_kurtosis", "cov_hat", "var_ratio", "pass"});
  for (const auto& r : report.rows)
    t.add_row({csv_double(cfg.q_grid[0]), std::to_string(cfg.n), std::to_string(cfg.replicates),
               std::to_string(cfg.seed), std::to_string(r.cycle_length), csv_double(r.mean_std),
               csv_double(r.var_std), csv_double(r.skewness), csv_double(r.excess_kurtosis),
               csv_double(r.cov_hat), csv_double(r.var_ratio), r.pass() ? "1" : "0"});
  return t;
}

inline CsvTable odd_tightness_csv(const ExperimentConfig& cfg, const TightnessReport& r) {
  CsvTable t({"q", "n", "replicates", "seed", "tv_even_pair", "tv_even_pair_se", "tv_odd_pair",
              "tv_odd_pair_se", "tv_parity", "tv_parity_se", "mean_elems_half",
              "mean_elems_full", "mean_elems_half_odd", "mean_elems_full_odd", "pass"});
  t.add_row({csv_double(r.q), std::to_string(r.n), std::to_string(r.replicates),
             std::to_string(cfg.seed), csv_double(r.tv_even_pair), csv_double(r.tv_even_pair_se),
             csv_double(r.tv_odd_pair), csv_double(r.tv_odd_pair_se), csv_double(r.tv_parity),
             csv_double(r.tv_parity_se), csv_double(r.mean_elems_half),
             csv_double(r.mean_elems_full), csv_double(r.mean_elems_half_odd),
             csv_double(r.mean_elems_full_odd), r.all_pass() ? "1" : "0"});
  return t;
}

inline CsvTable parity_tail_csv(const ExperimentConfig& cfg, const ParityTailReport& report) {
  CsvTable t({"q", "n", "replicates", "seed", "w", "m", "p_rho_ge_m", "se_rho", "p_r_ge_m",
              "se_r"});
  for (const auto& r : report.rows)
    t.add_row({csv_double(report.q), std::to_string(2 * report.w + 1),
               std::to_string(report.replicates), std::to_string(cfg.seed),
               std::to_string(report.w), std::to_string(r.m), csv_double(r.p_rho),
               csv_double(r.se_rho), csv_double(r.p_r), csv_double(r.se_r)});
  return t;
}

/// Block sequences as CSV rows (block_index, X, c1 .. c_ellmax).
inline CsvTable blocks_csv(const std::vector<permstat::RegenBlock>& blocks,
                           std::int64_t ell_max) {
  std::vector<std::string> header{"block_index", "X"};
  for (std::int64_t i = 1; i <= ell_max; ++i) header.push_back("c" + std::to_string(i));
  CsvTable t(std::move(header));
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    std::vector<std::string> row{std::to_string(b), std::to_string(blocks[b].length)};
    for (std::int64_t i = 1; i <= ell_max; ++i)
      row.push_back(std::to_string(blocks[b].cycles.of_length(i)));
    t.add_row(std::move(row));
  }
  return t;
}

inline CsvTable constants_csv(const std::vector<qseries::ExactConstants>& rows) {
  CsvTable t({"q", "m1", "mu2", "c_e", "c_o", "tol"});
  const auto opt = [](const std::optional<double>& v) {
    return v ? csv_double(*v) : std::string();
  };
  for (const auto& c : rows)
    t.add_row({csv_double(c.q), opt(c.m1), opt(c.mu2), opt(c.c_e), opt(c.c_o),
               csv_double(c.tol)});
  return t;
}

// ---------------------------------------------------------------------------
// Plot script emission
// ---------------------------------------------------------------------------

enum class Figure { M1, Mu2, CeCo };

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace detail

/// Writes a gnuplot script next to the CSV reproducing the figure layout:
/// exact curve as a line, Monte Carlo means as crosses. Returns the script
/// path. Errors out (writing nothing) on a missing column or an empty CSV.
inline std::string emit_plot_script(const std::string& csv_path, Figure figure,
                                    const std::string& script_path = "") {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("emit_plot_script: cannot open " + csv_path);
  std::string header_line;
  if (!std::getline(in, header_line) || header_line.empty())
    throw std::runtime_error("emit_plot_script: empty CSV " + csv_path);
  std::string first_data;
  if (!std::getline(in, first_data) || first_data.empty())
    throw std::runtime_error("emit_plot_script: CSV has no data rows: " + csv_path);

  const auto header = detail::split_csv_line(header_line);
  const auto col = [&](const std::string& name) -> std::int64_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<std::int64_t>(i) + 1;  // gnuplot is 1-based
    return -1;
  };

  struct FigureSpec {
    std::vector<std::string> required;
    std::string xrange, yrange, ylabel;
  };
  FigureSpec spec;
  switch (figure) {
    case Figure::M1:
      spec = {{"q", "mc_mean", "mc_se", "exact_m1"}, "[0:1]", "[0:1]", "m_1"};
      break;
    case Figure::Mu2:
      spec = {{"q", "mc_mean", "mc_se", "exact_mu2"}, "[0:25]", "[0:0.5]", "mu_2"};
      break;
    case Figure::CeCo:
      spec = {{"q", "mc_even_n", "se_even", "mc_odd_n", "se_odd", "exact_ce", "exact_co"},
              "[1:25]",
              "[0:1]",
              "c_e, c_o"};
      break;
  }
  std::vector<std::string> missing;
  for (const auto& name : spec.required)
    if (col(name) < 0) missing.push_back(name);
  if (!missing.empty()) {
    std::string msg = "emit_plot_script: CSV missing columns:";
    for (const auto& m : missing) msg += " " + m;
    throw std::runtime_error(msg);
  }

  const std::string out_path = script_path.empty() ? csv_path + ".gp" : script_path;
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set xlabel 'q'\n"
     << "set ylabel '" << spec.ylabel << "'\n"
     << "set xrange " << spec.xrange << "\n"
     << "set yrange " << spec.yrange << "\n"
     << "set key top right\n";
  const std::string src = "'" + csv_path + "' skip 1";
  if (figure == Figure::CeCo) {
    os << "plot " << src << " using " << col("q") << ":" << col("exact_ce")
       << " with lines title 'c_e exact', \\\n"
       << "     '' skip 1 using " << col("q") << ":" << col("exact_co")
       << " with lines title 'c_o exact', \\\n"
       << "     '' skip 1 using " << col("q") << ":" << col("mc_even_n")
       << " with points pt 2 title 'n even', \\\n"
       << "     '' skip 1 using " << col("q") << ":" << col("mc_odd_n")
       << " with points pt 6 title 'n odd'\n";
  } else {
    const std::string exact_col = figure == Figure::M1 ? "exact_m1" : "exact_mu2";
    os << "plot " << src << " using " << col("q") << ":" << col(exact_col)
       << " with lines title 'exact', \\\n"
       << "     '' skip 1 using " << col("q") << ":" << col("mc_mean")
       << " with points pt 2 title 'simulations'\n";
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_plot_script: cannot write " + out_path);
  out << os.str();
  return out_path;
}

}  // namespace experiments
}  // namespace mallows
