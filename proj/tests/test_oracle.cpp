#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mallows/oracle.hpp"
#include "mallows/qseries.hpp"
#include "mallows/sampler.hpp"

using namespace mallows;
using namespace mallows::oracle;

#ifndef FIXTURE_DIR
#define FIXTURE_DIR "tests/fixtures"
#endif

TEST_CASE("enumerate_pmf: smallest cases and normalization") {
  {
    const auto pmf = enumerate_pmf(2, QParam(0.5));
    REQUIRE(pmf.support.size() == 2);
    CHECK(pmf.probs[0] == doctest::Approx(2.0 / 3.0));  // identity
    CHECK(pmf.probs[1] == doctest::Approx(1.0 / 3.0));  // swap
  }
  {
    const auto pmf = enumerate_pmf(3, QParam(1.0));
    for (double p : pmf.probs) CHECK(p == doctest::Approx(1.0 / 6.0));
  }
  {
    const auto pmf = enumerate_pmf(8, QParam(0.9));
    double s = 0;
    for (double p : pmf.probs) s += p;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(enumerate_pmf(9, QParam(0.5)), std::domain_error);
}

TEST_CASE("enumeration normalizer equals the product formula") {
  for (std::int64_t n = 1; n <= 8; ++n)
    for (double q : {0.2, 0.5, 0.7, 0.9, 1.0, 2.0}) {
      const auto pmf = enumerate_pmf(n, QParam(q));
      const double z = qseries::z_partition(n, QParam(q));
      CHECK(std::abs(pmf.normalizer - z) <= 1e-10 * z);
    }
}

TEST_CASE("perm_rank is the lexicographic index of the support") {
  for (std::int64_t n : {1LL, 3LL, 5LL}) {
    const auto pmf = enumerate_pmf(n, QParam(0.5));
    for (std::size_t k = 0; k < pmf.support.size(); ++k)
      CHECK(perm_rank(pmf.support[k]) == static_cast<std::int64_t>(k));
  }
}

TEST_CASE("expected cycle counts: q=1 gives E C_i = 1/i") {
  for (std::int64_t n = 1; n <= 8; ++n)
    CHECK(std::abs(exact_expected_cycles(n, QParam(1.0), 1) - 1.0) <= 1e-12);
  for (std::int64_t i = 1; i <= 6; ++i)
    CHECK(exact_expected_cycles(6, QParam(1.0), i) ==
          doctest::Approx(1.0 / static_cast<double>(i)).epsilon(1e-12));
  CHECK(exact_expected_cycles(1, QParam(0.3), 1) == doctest::Approx(1.0));
}

TEST_CASE("exact arc marginal: endpoints and kernel-product agreement") {
  const QParam q(0.7);
  {
    const auto m0 = exact_arc_marginal(6, q, 0);
    REQUIRE(m0.size() == 1);
    CHECK(m0.at(0) == doctest::Approx(1.0));
    const auto mn = exact_arc_marginal(6, q, 6);
    REQUIRE(mn.size() == 1);
    CHECK(mn.at(0) == doctest::Approx(1.0));
  }
  // stepping the exact kernels from t=0 must reproduce the marginal
  std::map<std::int64_t, double> stepped{{0, 1.0}};
  for (std::int64_t t = 0; t < 3; ++t) {
    std::map<std::int64_t, double> next;
    for (const auto& [k, pk] : stepped)
      for (const auto& [j, pj] : qseries::arc_transition_finite(k, t, 6, q))
        if (j >= 0 && pj > 0) next[j] += pk * pj;
    stepped = std::move(next);
  }
  const auto marginal = exact_arc_marginal(6, q, 3);
  for (const auto& [k, p] : marginal) CHECK(std::abs(p - stepped[k]) <= 1e-10);
  CHECK_THROWS_AS(exact_arc_marginal(6, q, 7), std::domain_error);
}

TEST_CASE("exact window displacement: degenerate case, symmetry, series limit") {
  CHECK(exact_window_displacement(1, QParam(0.5), 0) == doctest::Approx(1.0));
  for (std::int64_t d = 1; d <= 3; ++d)
    CHECK(std::abs(exact_window_displacement(7, QParam(0.5), d) -
                   exact_window_displacement(7, QParam(0.5), -d)) <= 1e-12);
  const double fin = exact_window_displacement(9, QParam(0.3), 0);
  const double lim = qseries::displacement_pmf(QParam(0.3), 1e-10)[0];
  CHECK(std::abs(fin - lim) <= 0.01);
  CHECK_THROWS_AS(exact_window_displacement(8, QParam(0.5), 0), std::domain_error);
  CHECK_THROWS_AS(exact_window_displacement(11, QParam(0.5), 0), std::domain_error);
}

TEST_CASE("S4 inversion identities") {
  const auto pmf = enumerate_pmf(4, QParam(0.5));
  for (const auto& p : pmf.support) {
    const auto inv_count = permstat::inversions(p);
    CHECK(permstat::inversions(p.inverse()) == inv_count);
    CHECK(permstat::inversions(reverse_compose(p)) == 6 - inv_count);
    // r o p o r: conjugation preserves the inversion count
    const auto rpr = reverse_compose(reverse_compose(p).inverse()).inverse();
    CHECK(permstat::inversions(rpr) == inv_count);
  }
}

TEST_CASE("chi-square GOF: exact fit, self-test, and power") {
  {
    // observed exactly proportional to expected: statistic 0, p-value 1
    std::vector<std::int64_t> obs{2000, 3000, 5000};
    std::vector<double> probs{0.2, 0.3, 0.5};
    const auto rep = chi_square_gof(obs, probs);
    CHECK(rep.statistic == doctest::Approx(0.0));
    CHECK(rep.p_value == doctest::Approx(1.0));
  }
  {
    // draws simulated from the expected law pass
    const auto pmf = enumerate_pmf(5, QParam(0.2));
    std::vector<std::int64_t> counts(pmf.support.size(), 0);
    RngStream rng(17, 1);
    for (int r = 0; r < 1000000; ++r)
      ++counts[static_cast<std::size_t>(
          perm_rank(sampler::sample_mallows_finite(5, QParam(0.2), rng)))];
    CHECK(chi_square_gof(counts, pmf.probs).p_value > 0.001);
    // and a grossly wrong null is destroyed
    const auto uniform = enumerate_pmf(5, QParam(1.0));
    CHECK(chi_square_gof(counts, uniform.probs).p_value < 1e-10);
  }
  CHECK_THROWS_AS(chi_square_gof(std::vector<std::int64_t>{}, std::vector<double>{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(chi_square_gof(std::vector<std::int64_t>{0, 0}, std::vector<double>{0.5, 0.5}),
                  std::invalid_argument);
}

TEST_CASE("chi-square GOF merges sparse cells") {
  std::vector<std::int64_t> obs{9996, 1, 1, 1, 1};
  std::vector<double> probs{0.9996, 0.0001, 0.0001, 0.0001, 0.0001};
  const auto rep = chi_square_gof(obs, probs);
  CHECK(rep.cells_merged > 0);
  CHECK(rep.p_value > 0.001);
}

TEST_CASE("committed fixtures still reproduce") {
  std::ifstream in(std::string(FIXTURE_DIR) + "/oracle_fixtures.csv");
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);  // header
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string n_s, q_s, stat, value_s;
    std::getline(is, n_s, ',');
    std::getline(is, q_s, ',');
    std::getline(is, stat, ',');
    std::getline(is, value_s, ',');
    const std::int64_t n = std::stoll(n_s);
    const QParam q(std::stod(q_s));
    const double expected = std::stod(value_s);
    double got = 0;
    if (stat == "z")
      got = enumerate_pmf(n, q).normalizer;
    else if (stat == "expected_c1")
      got = exact_expected_cycles(n, q, 1);
    else if (stat == "expected_c2")
      got = exact_expected_cycles(n, q, 2);
    else if (stat == "expected_c3")
      got = exact_expected_cycles(n, q, 3);
    else if (stat == "window_d0")
      got = exact_window_displacement(n, q, 0);
    else
      FAIL("unknown fixture statistic: " << stat);
    CHECK(got == doctest::Approx(expected).epsilon(1e-10));
    ++rows;
  }
  CHECK(rows == 8);
}
