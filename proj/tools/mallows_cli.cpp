// Command-line harness around the mallows library: reproduces the figure
// curves and the desk-scale limit-theorem checks, with CSV + gnuplot output.
//
// Exit codes: 0 all gates pass, 1 an acceptance gate failed, 2 usage error.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mallows/mallows.hpp"

namespace {

using namespace mallows;
namespace exp_ = mallows::experiments;

struct CommonOpts {
  std::vector<double> q_grid;
  double q = 0;
  std::int64_t n = 0;
  std::int64_t reps = 0;
  std::uint64_t seed = 20201019;
  std::int64_t workers = 1;
  std::string out;
  double tol = 1e-8;
};

void add_common(CLI::App* cmd, CommonOpts& o, std::int64_t def_n, std::int64_t def_reps,
                const std::string& def_out) {
  o.n = def_n;
  o.reps = def_reps;
  o.out = def_out;
  cmd->add_option("--q", o.q, "single q value");
  cmd->add_option("--q-grid", o.q_grid, "list of q values")->expected(-1);
  cmd->add_option("--n", o.n, "permutation size");
  cmd->add_option("--reps", o.reps, "Monte Carlo replicates");
  cmd->add_option("--seed", o.seed, "64-bit RNG seed");
  cmd->add_option("--workers", o.workers, "worker threads");
  cmd->add_option("--out", o.out, "output CSV path");
  cmd->add_option("--tol", o.tol, "series tolerance");
}

exp_::ExperimentConfig make_config(const CommonOpts& o, std::vector<double> default_grid) {
  exp_::ExperimentConfig cfg;
  cfg.q_grid = !o.q_grid.empty() ? o.q_grid
               : o.q > 0        ? std::vector<double>{o.q}
                                : std::move(default_grid);
  cfg.n = o.n;
  cfg.replicates = o.reps;
  cfg.seed = o.seed;
  cfg.workers = o.workers;
  cfg.output_path = o.out;
  cfg.tol = o.tol;
  return cfg;
}

bool report_gate(const char* label, bool ok) {
  std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", label);
  return ok;
}

int run_curve(const exp_::ExperimentConfig& cfg, exp_::Figure figure) {
  bool all_ok = true;
  exp_::CsvTable table({"_"});
  if (figure == exp_::Figure::M1) {
    const auto rows = exp_::run_m1_curve(cfg);
    for (const auto& r : rows) {
      char label[128];
      std::snprintf(label, sizeof label, "q=%-6g mc=%.6f se=%.2e exact=%.6f", r.q, r.mc.mean,
                    r.mc.std_error, r.exact);
      all_ok &= report_gate(label, std::abs(r.mc.mean - r.exact) <= 4.0 * r.mc.std_error);
    }
    table = exp_::m1_curve_csv(cfg, rows);
  } else if (figure == exp_::Figure::Mu2) {
    const auto rows = exp_::run_mu2_curve(cfg);
    for (const auto& r : rows) {
      char label[128];
      std::snprintf(label, sizeof label, "q=%-6g mc=%.6f se=%.2e exact=%.6f", r.q, r.mc.mean,
                    r.mc.std_error, r.exact);
      all_ok &= report_gate(label, std::abs(r.mc.mean - r.exact) <= 4.0 * r.mc.std_error);
    }
    table = exp_::mu2_curve_csv(cfg, rows);
  } else {
    const auto rows = exp_::run_ceco_curve(cfg);
    for (const auto& r : rows) {
      char label[160];
      std::snprintf(label, sizeof label,
                    "q=%-6g even=%.4f (c_e=%.4f) odd=%.4f (c_o=%.4f)", r.q, r.even_n.mean,
                    r.exact_ce, r.odd_n.mean, r.exact_co);
      const bool ok = std::abs(r.even_n.mean - r.exact_ce) <= 4.0 * r.even_n.std_error &&
                      std::abs(r.odd_n.mean - r.exact_co) <= 4.0 * r.odd_n.std_error;
      all_ok &= report_gate(label, ok);
    }
    table = exp_::ceco_curve_csv(cfg, rows);
  }
  table.write(cfg.output_path);
  const auto script = exp_::emit_plot_script(cfg.output_path, figure);
  std::printf("wrote %s and %s\n", cfg.output_path.c_str(), script.c_str());
  return all_ok ? 0 : 1;
}

int run_clt_cmd(const exp_::ExperimentConfig& cfg, std::int64_t ell, bool even) {
  const auto report = even ? exp_::run_even_clt_check(cfg, ell) : exp_::run_clt_check(cfg, ell);
  char label[160];
  std::snprintf(label, sizeof label, "center: hat=%.6f exact=%.6f se=%.2e",
                report.center_hat.mean, report.center_exact, report.center_hat.std_error);
  bool all_ok = report_gate(label, report.center_ok);
  for (const auto& r : report.rows) {
    std::snprintf(label, sizeof label,
                  "C_%lld: mean=%+.4f var_ratio=%.3f skew=%+.3f exkurt=%+.3f",
                  static_cast<long long>(r.cycle_length), r.mean_std, r.var_ratio, r.skewness,
                  r.excess_kurtosis);
    all_ok &= report_gate(label, r.pass());
  }
  if (!cfg.output_path.empty()) {
    exp_::clt_csv(cfg, report).write(cfg.output_path);
    std::printf("wrote %s\n", cfg.output_path.c_str());
  }
  return all_ok ? 0 : 1;
}

int run_odd_tightness_cmd(const exp_::ExperimentConfig& cfg) {
  const auto r = exp_::run_odd_tightness(cfg);
  char label[160];
  std::snprintf(label, sizeof label, "same-parity TV: even %.4f (se %.1e), odd %.4f (se %.1e)",
                r.tv_even_pair, r.tv_even_pair_se, r.tv_odd_pair, r.tv_odd_pair_se);
  bool all_ok = report_gate(label, r.same_parity_ok);
  std::snprintf(label, sizeof label, "parity split TV: %.4f >= 5 x %.1e", r.tv_parity,
                r.tv_parity_se);
  all_ok &= report_gate(label, r.parity_split_ok);
  std::snprintf(label, sizeof label, "odd-cycle element means: %.3f -> %.3f / %.3f -> %.3f",
                r.mean_elems_half, r.mean_elems_full, r.mean_elems_half_odd,
                r.mean_elems_full_odd);
  all_ok &= report_gate(label, r.ratio_ok);
  if (!cfg.output_path.empty()) {
    exp_::odd_tightness_csv(cfg, r).write(cfg.output_path);
    std::printf("wrote %s\n", cfg.output_path.c_str());
  }
  return all_ok ? 0 : 1;
}

int run_parity_tail_cmd(const exp_::ExperimentConfig& cfg, std::int64_t w, std::int64_t kmax) {
  const auto report = exp_::run_parity_tail(cfg, w, kmax);
  for (const auto& r : report.rows)
    std::printf("m=%lld: P(rho>=m)=%.6f (se %.1e)  P(r>=m)=%.6f (se %.1e)\n",
                static_cast<long long>(r.m), r.p_rho, r.se_rho, r.p_r, r.se_r);
  const auto& m2 = report.at(2);
  const auto& m3 = report.at(3);
  bool all_ok = report_gate("even threshold: rho dominates with disjoint 95% CIs",
                            m2.p_rho - 1.96 * m2.se_rho > m2.p_r + 1.96 * m2.se_r);
  all_ok &= report_gate("odd threshold: r dominates with disjoint 95% CIs",
                        m3.p_r - 1.96 * m3.se_r > m3.p_rho + 1.96 * m3.se_rho);
  bool monotone = true;
  for (std::size_t i = 1; i < report.rows.size(); ++i)
    monotone &= report.rows[i].p_rho <= report.rows[i - 1].p_rho &&
                report.rows[i].p_r <= report.rows[i - 1].p_r;
  all_ok &= report_gate("tails monotone nonincreasing", monotone);
  if (!cfg.output_path.empty()) {
    exp_::parity_tail_csv(cfg, report).write(cfg.output_path);
    std::printf("wrote %s\n", cfg.output_path.c_str());
  }
  return all_ok ? 0 : 1;
}

int run_constants_cmd(const exp_::ExperimentConfig& cfg) {
  std::vector<qseries::ExactConstants> rows;
  for (double qv : cfg.q_grid) rows.push_back(qseries::exact_constants(QParam(qv), cfg.tol));
  const auto table = exp_::constants_csv(rows);
  if (!cfg.output_path.empty()) {
    table.write(cfg.output_path);
    std::printf("wrote %s\n", cfg.output_path.c_str());
  } else {
    std::fputs(table.to_string().c_str(), stdout);
  }
  return 0;
}

int run_selftest(std::uint64_t seed, std::int64_t workers) {
  bool all_ok = true;
  // oracle normalizer against the product formula
  {
    bool ok = true;
    for (std::int64_t n = 2; n <= 6; ++n)
      for (double qv : {0.2, 0.5, 0.7, 1.0, 2.0}) {
        const QParam q(qv);
        ok &= std::abs(oracle::enumerate_pmf(n, q).normalizer - qseries::z_partition(n, q)) <
              1e-10 * qseries::z_partition(n, q);
      }
    all_ok &= report_gate("enumeration normalizer = Z(n,q)", ok);
  }
  // the two series routes to m1 agree
  {
    bool ok = true;
    for (double qv : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const QParam q(qv);
      ok &= std::abs(qseries::m1_exact(q, 1e-10) - qseries::displacement_pmf(q, 1e-10)[0]) < 1e-8;
    }
    all_ok &= report_gate("m1 series = displacement pmf at 0", ok);
  }
  // sampler GOF against full enumeration, both procedures, both regimes
  for (const auto& [label, qv, two_sided] :
       {std::tuple{"one-sided sampler GOF at q=0.7", 0.7, false},
        std::tuple{"two-sided sampler GOF at q=0.7", 0.7, true},
        std::tuple{"reversal-composed sampler GOF at q=2", 2.0, false}}) {
    const QParam q(qv);
    const auto pmf = oracle::enumerate_pmf(5, q);
    std::vector<std::int64_t> counts(pmf.support.size(), 0);
    RngStream rng(seed, 991);
    const std::int64_t reps = 200000;
    for (std::int64_t r = 0; r < reps; ++r) {
      const auto perm = two_sided ? sampler::sample_mallows_two_sided(5, q, rng)
                                  : sampler::sample_mallows_finite(5, q, rng);
      ++counts[static_cast<std::size_t>(oracle::perm_rank(perm))];
    }
    const auto gof = oracle::chi_square_gof(counts, pmf.probs);
    char line[128];
    std::snprintf(line, sizeof line, "%s (p=%.4f)", label, gof.p_value);
    all_ok &= report_gate(line, gof.p_value > 0.001);
  }
  // arc kernel marginals against enumeration
  {
    const QParam q(0.7);
    const auto marginal = oracle::exact_arc_marginal(6, q, 3);
    std::map<std::int64_t, double> stepped{{0, 1.0}};
    for (std::int64_t t = 0; t < 3; ++t) {
      std::map<std::int64_t, double> next;
      for (const auto& [k, pk] : stepped)
        for (const auto& [j, pj] : qseries::arc_transition_finite(k, t, 6, q))
          if (j >= 0 && pj > 0) next[j] += pk * pj;
      stepped = std::move(next);
    }
    bool ok = true;
    for (const auto& [k, p] : marginal) ok &= std::abs(p - stepped[k]) < 1e-10;
    all_ok &= report_gate("arc kernel product = enumeration marginal", ok);
  }
  (void)workers;
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mallows permutation cycle-statistics laboratory"};
  app.require_subcommand(1);

  CommonOpts m1o, mu2o, cecoo, clto, eclto, oddo, parityo, consto;
  std::int64_t clt_ell = 2, eclt_ell = 1;
  std::int64_t parity_w = 64, parity_kmax = 1;
  std::uint64_t selftest_seed = 20201019;
  std::int64_t selftest_workers = 1;

  auto* m1 = app.add_subcommand("m1-curve", "Figure 1: mean C_1/n vs exact m_1 (0<q<1)");
  add_common(m1, m1o, 1000, 10000, "m1_curve.csv");
  auto* mu2 = app.add_subcommand("mu2-curve", "Figure 2: mean C_2/n vs exact mu_2 (q>1)");
  add_common(mu2, mu2o, 1000, 10000, "mu2_curve.csv");
  auto* ceco = app.add_subcommand("ceco-curve", "Figure 3: mean C_1 at both parities vs c_e, c_o");
  add_common(ceco, cecoo, 1000, 10000, "ceco_curve.csv");
  auto* clt = app.add_subcommand("clt", "Gaussian-limit property check for q<1");
  add_common(clt, clto, 4000, 5000, "");
  clt->add_option("--ell", clt_ell, "max cycle length");
  auto* eclt = app.add_subcommand("even-clt", "Gaussian-limit property check for even cycles, q>1");
  add_common(eclt, eclto, 4000, 5000, "");
  eclt->add_option("--ell", eclt_ell, "max even cycle index (checks C_2..C_2ell)");
  auto* odd = app.add_subcommand("odd-tightness", "odd-cycle tightness and parity split, q>1");
  add_common(odd, oddo, 1000, 10000, "");
  auto* parity = app.add_subcommand("parity-tail", "reflected fixed-point tails over windows, q<1");
  add_common(parity, parityo, 0, 1000000, "");
  parity->add_option("--w", parity_w, "window half-width");
  parity->add_option("--kmax", parity_kmax, "max k (tails up to m=2k+1)");
  auto* consts = app.add_subcommand("constants", "dump the exact constants grid as CSV");
  add_common(consts, consto, 0, 0, "");
  consto.tol = 1e-10;
  auto* self = app.add_subcommand("selftest", "oracle-backed quick verification suite");
  self->add_option("--seed", selftest_seed, "64-bit RNG seed");
  self->add_option("--workers", selftest_workers, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (m1->parsed())
      return run_curve(make_config(m1o, exp_::figure1_grid()), exp_::Figure::M1);
    if (mu2->parsed())
      return run_curve(make_config(mu2o, exp_::figure23_grid()), exp_::Figure::Mu2);
    if (ceco->parsed())
      return run_curve(make_config(cecoo, exp_::figure23_grid()), exp_::Figure::CeCo);
    if (clt->parsed()) return run_clt_cmd(make_config(clto, {0.5}), clt_ell, false);
    if (eclt->parsed()) return run_clt_cmd(make_config(eclto, {2.0}), eclt_ell, true);
    if (odd->parsed()) return run_odd_tightness_cmd(make_config(oddo, {2.0}));
    if (parity->parsed())
      return run_parity_tail_cmd(make_config(parityo, {0.5}), parity_w, parity_kmax);
    if (consts->parsed()) {
      auto grid = exp_::figure1_grid();
      for (double v : exp_::figure23_grid()) grid.push_back(v);
      return run_constants_cmd(make_config(consto, std::move(grid)));
    }
    if (self->parsed()) return run_selftest(selftest_seed, selftest_workers);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
