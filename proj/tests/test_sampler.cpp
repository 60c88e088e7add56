#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "mallows/oracle.hpp"
#include "mallows/permstat.hpp"
#include "mallows/qseries.hpp"
#include "mallows/sampler.hpp"

using namespace mallows;
using namespace mallows::sampler;

namespace {

int naive_inversions(const Permutation& p) {
  int inv = 0;
  for (std::int64_t i = 1; i <= p.size(); ++i)
    for (std::int64_t j = i + 1; j <= p.size(); ++j)
      if (p(i) > p(j)) ++inv;
  return inv;
}

// GOF of `reps` sampler draws against the exact n-cell pmf
oracle::GofReport sampler_gof(std::int64_t n, double q, std::int64_t reps, bool two_sided,
                              std::uint64_t seed) {
  const QParam qp(q);
  const auto pmf = oracle::enumerate_pmf(n, qp);
  std::vector<std::int64_t> counts(pmf.support.size(), 0);
  RngStream rng(seed, 1);
  for (std::int64_t r = 0; r < reps; ++r) {
    const auto perm =
        two_sided ? sample_mallows_two_sided(n, qp, rng) : sample_mallows_finite(n, qp, rng);
    ++counts[static_cast<std::size_t>(oracle::perm_rank(perm))];
  }
  return oracle::chi_square_gof(counts, pmf.probs);
}

}  // namespace

TEST_CASE("truncated geometric: single support point and pmf shape") {
  RngStream rng(1, 1);
  for (int i = 0; i < 50; ++i) CHECK(sample_trunc_geom(TruncGeomSpec(1, 0.3), rng) == 1);
  CHECK_THROWS_AS(TruncGeomSpec(0, 0.5), std::domain_error);
  CHECK_THROWS_AS(TruncGeomSpec(5, 1.5), std::domain_error);
  // pmf sums to one
  for (double p : {0.0, 0.2, 0.8, 1.0}) {
    const TruncGeomSpec spec(6, p);
    double s = 0;
    for (int k = 1; k <= 6; ++k) s += spec.pmf(k);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("truncated geometric: uniform case GOF at p=0") {
  const std::int64_t reps = 1000000;
  RngStream rng(42, 2);
  std::vector<std::int64_t> counts(4, 0);
  for (std::int64_t i = 0; i < reps; ++i)
    ++counts[static_cast<std::size_t>(sample_trunc_geom(TruncGeomSpec(4, 0.0), rng) - 1)];
  const auto gof = oracle::chi_square_gof(counts, {0.25, 0.25, 0.25, 0.25});
  CHECK(gof.p_value > 0.001);
}

TEST_CASE("truncated geometric: GOF against the closed-form pmf") {
  const TruncGeomSpec spec(5, 0.5);
  const std::int64_t reps = 1000000;
  RngStream rng(42, 3);
  std::vector<std::int64_t> counts(5, 0);
  for (std::int64_t i = 0; i < reps; ++i)
    ++counts[static_cast<std::size_t>(sample_trunc_geom(spec, rng) - 1)];
  std::vector<double> probs;
  for (int k = 1; k <= 5; ++k) probs.push_back(spec.pmf(k));
  CHECK(oracle::chi_square_gof(counts, probs).p_value > 0.001);
}

TEST_CASE("geometric yields mean 1/(1-q)") {
  RngStream rng(7, 4);
  const QParam q(0.5);
  const std::int64_t reps = 1000000;
  double sum = 0, sumsq = 0;
  for (std::int64_t i = 0; i < reps; ++i) {
    const double z = static_cast<double>(sample_geometric(q, rng));
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sumsq / reps - mean * mean) / reps);
  CHECK(std::abs(mean - 2.0) <= 4 * se);
}

TEST_CASE("finite sampler collapses to the identity as q -> 0") {
  RngStream rng(3, 5);
  const QParam q(1e-9);
  for (int i = 0; i < 100; ++i) {
    CHECK(sample_mallows_finite(3, q, rng) == Permutation::identity(3));
  }
}

TEST_CASE("every sampler output is a bijection") {
  RngStream rng(11, 6);
  for (double qv : {0.3, 1.0, 2.5})
    for (std::int64_t n : {1LL, 2LL, 17LL, 256LL}) {
      CHECK(sample_mallows_finite(n, QParam(qv), rng).is_bijection());
      CHECK(sample_mallows_two_sided(n, QParam(qv), rng).is_bijection());
    }
}

TEST_CASE("one-sided sampler GOF against the exact pmf (n=5, q=0.7)") {
  const auto gof = sampler_gof(5, 0.7, 1000000, false, 2020);
  CHECK(gof.p_value > 0.001);
}

TEST_CASE("two-sided sampler: trivial n=1 and GOF (n=5, q=0.7)") {
  RngStream rng(5, 7);
  CHECK(sample_mallows_two_sided(1, QParam(0.5), rng) == Permutation::identity(1));
  const auto gof = sampler_gof(5, 0.7, 1000000, true, 2021);
  CHECK(gof.p_value > 0.001);
}

TEST_CASE("reversal composition realizes q > 1 (GOF at n=5, q=2)") {
  // the oracle pmf uses q directly; the sampler goes through 1/q + reversal
  const auto gof = sampler_gof(5, 2.0, 1000000, false, 2022);
  CHECK(gof.p_value > 0.001);
}

TEST_CASE("one-sided and two-sided samplers agree in law (two-sample, n=4, q=0.5)") {
  const QParam q(0.5);
  const std::int64_t reps = 1000000;
  std::vector<std::int64_t> a(24, 0), b(24, 0);
  RngStream ra(77, 8), rb(77, 9);
  for (std::int64_t r = 0; r < reps; ++r) {
    ++a[static_cast<std::size_t>(oracle::perm_rank(sample_mallows_finite(4, q, ra)))];
    ++b[static_cast<std::size_t>(oracle::perm_rank(sample_mallows_two_sided(4, q, rb)))];
  }
  CHECK(oracle::two_sample_chi_square(a, b).p_value > 0.001);
}

TEST_CASE("inversion weighting on S4: sampler frequencies match q^inv law") {
  // equivalent to checking log-frequency differences against inv differences
  const auto gof = sampler_gof(4, 0.5, 1000000, false, 2023);
  CHECK(gof.p_value > 0.001);
}

TEST_CASE("uniform q=1 control: mean fixed points is 1") {
  const QParam q(1.0);
  RngStream rng(123, 10);
  const std::int64_t reps = 100000;
  double sum = 0, sumsq = 0;
  for (std::int64_t r = 0; r < reps; ++r) {
    const auto c1 = static_cast<double>(
        permstat::cycle_counts(sample_mallows_finite(100, q, rng)).of_length(1));
    sum += c1;
    sumsq += c1 * c1;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sumsq / reps - mean * mean) / reps);
  CHECK(std::abs(mean - 1.0) <= 4 * se);
}

TEST_CASE("reverse_compose basics and inversion complement on S4") {
  CHECK(reverse_compose(Permutation::identity(3)) ==
        Permutation{std::vector<Permutation::Image>{3, 2, 1}});
  RngStream rng(9, 11);
  for (int r = 0; r < 20; ++r) {
    const auto p = sample_mallows_finite(8, QParam(0.6), rng);
    CHECK(reverse_compose(reverse_compose(p)) == p);
    CHECK(naive_inversions(reverse_compose(p)) + naive_inversions(p) == 28);  // C(8,2)
  }
  // exhaustive on S4
  std::vector<Permutation::Image> v{1, 2, 3, 4};
  do {
    const Permutation p{std::vector<Permutation::Image>(v)};
    CHECK(naive_inversions(reverse_compose(p)) == 6 - naive_inversions(p));
  } while (std::next_permutation(v.begin(), v.end()));
}

TEST_CASE("window sampler: degenerate W=0 and relabeling invariants") {
  RngStream rng(31, 12);
  const auto w0 = sample_mallows_window(0, QParam(0.5), rng);
  CHECK(w0.size() == 1);
  CHECK(w0(0) == 0);
  for (int r = 0; r < 10; ++r) {
    const auto win = sample_mallows_window(16, QParam(0.4), rng);
    CHECK(win.lo() == -16);
    CHECK(win.hi() == 16);
    CHECK(win.is_bijection());
    CHECK(win.to_permutation().is_bijection());
    const auto rho_win = sample_mallows_window_rho(16, QParam(0.4), rng);
    CHECK(rho_win.lo() == -15);
    CHECK(rho_win.hi() == 16);
    CHECK(rho_win.is_bijection());
  }
  CHECK_THROWS_AS(sample_mallows_window(4, QParam(2.0), rng), std::domain_error);
}

TEST_CASE("window margin is positive and leaves a usable band at W=64, q=0.5") {
  const auto b = window_margin(129, QParam(0.5));
  CHECK(b >= 1);
  CHECK(b < 64);
  RngStream rng(32, 13);
  const auto win = sample_mallows_window(64, QParam(0.5), rng);
  CHECK(win.margin() == b);
  CHECK(win.has_trusted_range());
}

TEST_CASE("window center displacement matches the series pmf (W=32, q=0.5)") {
  const QParam q(0.5);
  const auto series = qseries::displacement_pmf(q, 1e-10);
  const std::int64_t reps = 1000000;
  RngStream rng(2024, 14);
  std::map<std::int64_t, std::int64_t> hist;
  for (std::int64_t r = 0; r < reps; ++r) {
    const auto win = sample_mallows_window(32, q, rng);
    ++hist[win(0)];
  }
  for (std::int64_t d = -5; d <= 5; ++d) {
    const double p_hat = static_cast<double>(hist[d]) / static_cast<double>(reps);
    const double se = std::sqrt(p_hat * (1 - p_hat) / static_cast<double>(reps));
    CHECK(std::abs(p_hat - series[d]) <= 4 * se);
  }
}

TEST_CASE("stream: first value is Geom(1-q)") {
  const QParam q(0.5);
  const std::int64_t reps = 1000000;
  double sum = 0, sumsq = 0;
  for (std::int64_t r = 0; r < reps; ++r) {
    MallowsStream stream(q, RngStream(555, static_cast<std::uint64_t>(r)));
    const double v = static_cast<double>(stream.next().value);
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sumsq / reps - mean * mean) / reps);
  CHECK(std::abs(mean - 2.0) <= 4 * se);
}

TEST_CASE("stream: prefixes map onto themselves exactly at regenerations") {
  const QParam q(0.6);
  MallowsStream stream(q, RngStream(99, 15));
  std::vector<std::int64_t> block;
  std::int64_t base = 0;
  std::int64_t checked = 0;
  while (checked < 2000) {
    const auto step = stream.next();
    block.push_back(step.value);
    const std::int64_t pos = base + static_cast<std::int64_t>(block.size());
    // the flag must agree with the direct prefix property
    std::int64_t maxv = 0;
    for (auto v : block) maxv = std::max(maxv, v);
    CHECK(step.is_regeneration == (maxv == pos));
    if (step.is_regeneration) {
      auto sorted = block;
      std::sort(sorted.begin(), sorted.end());
      bool consecutive = true;
      for (std::size_t i = 0; i < sorted.size(); ++i)
        consecutive &= sorted[i] == base + static_cast<std::int64_t>(i) + 1;
      CHECK(consecutive);
      base = pos;
      block.clear();
      ++checked;
    }
  }
}

TEST_CASE("stream: two estimators of the mean regeneration gap agree (q=0.4)") {
  const QParam q(0.4);
  MallowsStream stream(q, RngStream(404, 16));
  std::vector<double> gaps;
  std::int64_t last = 0;
  std::int64_t steps = 0;
  const std::int64_t total = 1000000;
  while (steps < total) {
    const auto step = stream.next();
    ++steps;
    if (step.is_regeneration) {
      gaps.push_back(static_cast<double>(steps - last));
      last = steps;
    }
  }
  // gap average vs renewal rate (steps at last regeneration / regeneration count)
  const double gap_mean = stats::mean(gaps);
  const double renewal_rate_mean = static_cast<double>(last) / static_cast<double>(gaps.size());
  const double se = std::sqrt(stats::variance(gaps) / static_cast<double>(gaps.size()));
  CHECK(std::abs(gap_mean - renewal_rate_mean) <= 4 * se);
}

TEST_CASE("stream: regeneration gaps are i.i.d. (two-sample across halves)") {
  const QParam q(0.5);
  MallowsStream stream(q, RngStream(606, 17));
  std::vector<std::int64_t> gaps;
  std::int64_t last = 0, steps = 0;
  while (gaps.size() < 100000) {
    const auto step = stream.next();
    ++steps;
    if (step.is_regeneration) {
      gaps.push_back(steps - last);
      last = steps;
    }
  }
  const std::int64_t cap = 30;
  std::vector<std::int64_t> first(static_cast<std::size_t>(cap), 0),
      second(static_cast<std::size_t>(cap), 0);
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const auto bin = static_cast<std::size_t>(std::min(gaps[i], cap) - 1);
    (i < gaps.size() / 2 ? first : second)[bin] += 1;
  }
  CHECK(oracle::two_sample_chi_square(first, second).p_value > 0.001);
}

TEST_CASE("determinism: identical (seed, stream) reproduce identical output") {
  const QParam q(0.3);
  RngStream a(1234, 42), b(1234, 42);
  CHECK(sample_mallows_finite(300, q, a) == sample_mallows_finite(300, q, b));
  MallowsStream sa(q, RngStream(5, 6)), sb(q, RngStream(5, 6));
  for (int i = 0; i < 1000; ++i) {
    const auto x = sa.next(), y = sb.next();
    CHECK(x.value == y.value);
    CHECK(x.is_regeneration == y.is_regeneration);
  }
  RngStream c(1234, 43);
  CHECK_FALSE(sample_mallows_finite(300, q, c) == sample_mallows_finite(300, q, a));
}
