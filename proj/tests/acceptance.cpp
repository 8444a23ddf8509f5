// Acceptance gate: one line per criterion, nonzero exit on any failure.
// Usage: acceptance <isoquad-cli-path> <default-suite-config>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "isoquad/constants.hpp"
#include "isoquad/ensembles.hpp"
#include "isoquad/experiment.hpp"
#include "isoquad/serialize.hpp"

using namespace isoquad;

namespace {

int g_failures = 0;

void verdict(int idx, bool pass, const std::string& desc) {
  std::printf("[%s] %2d. %s\n", pass ? "PASS" : "FAIL", idx, desc.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return std::string(buf);
}

double agg(const CheckResult& res, const std::string& key) {
  for (const auto& kv : res.aggregates)
    if (kv.first == key) return kv.second;
  throw std::runtime_error("aggregate '" + key + "' missing from " + res.check);
}

// ---- criteria 1 and 3: solver vs oracle, and the ordering chain ------------

struct SolverOracleOutcome {
  double worst_rel = 0.0;
  int ordering_violations = 0;
  int instances = 0;
  double elapsed = 0.0;
};

EnsembleSpec instance_spec(int i, int p) {
  EnsembleSpec spec;
  spec.p = p;
  if (i % 2 == 0) {
    spec.variant = Variant::gaussian;
    if (i % 4 != 0) {
      // equicorrelated 0.3, PD for every p here
      std::vector<double> rows(static_cast<size_t>(p) * p, 0.3);
      for (int j = 0; j < p; ++j) rows[static_cast<size_t>(j) * p + j] = 1.0;
      spec.sigma0 = SymMatrix(p, rows);
    }
  } else {
    spec.variant = Variant::sem_dag;
    spec.beta.assign(static_cast<size_t>(p) * p, 0.0);
    for (int k = 0; k + 1 < p; ++k)
      spec.beta[static_cast<size_t>(k) * p + k + 1] = k % 2 == 0 ? 0.4 : -0.4;
    if (p >= 3 && i % 6 == 1) spec.beta[2] = -0.25;
    spec.omega.resize(p);
    for (int j = 0; j < p; ++j) spec.omega[j] = 1.0 + 0.1 * j;
  }
  return spec;
}

SolverOracleOutcome run_solver_vs_oracle() {
  SolverOracleOutcome out;
  auto t0 = std::chrono::steady_clock::now();
  const double Ls[3] = {0.5, 1.0, 2.0};
  for (int i = 0; i < 200; ++i) {
    int p = 2 + i % 5;
    int s = 1 + i % 2;
    DesignSample ds = sample(instance_spec(i, p), 40, 0xACC0u + i);
    ConeSpec cone;
    cone.L = Ls[i % 3];
    int first = i % p;
    cone.S = {first};
    if (s == 2) {
      int second = (first + 3) % p;
      if (second == first) second = (first + 1) % p;
      cone.S.push_back(second);
    }
    double vals[3] = {0, 0, 0};
    int k = 0;
    for (NormMode mode : {NormMode::l1_on_S, NormMode::l2_on_uS, NormMode::adaptive}) {
      cone.mode = mode;
      double v = cone_constant(ds.gram, cone).value;
      double o = oracle_minimum(ds.gram, cone, 320, 0x5EEDu + i).value;
      double rel = std::fabs(v - o) / std::max(1e-12, std::fabs(o));
      out.worst_rel = std::max(out.worst_rel, rel);
      vals[k++] = v;
    }
    if (vals[2] > vals[1] * (1.0 + 1e-6) + 1e-9) ++out.ordering_violations;
    if (vals[1] > vals[0] * (1.0 + 1e-6) + 1e-9) ++out.ordering_violations;
    ++out.instances;
  }
  out.elapsed = seconds_since(t0);
  return out;
}

// ---- criterion 11 helper ----------------------------------------------------

int run_cli(const std::string& cli, const std::string& config, const std::string& prefix) {
  std::string cmd = "\"" + cli + "\" mc \"" + config + "\" --out " + prefix + " > " +
                    prefix + ".stdout 2> " + prefix + ".stderr";
  int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

bool same_bytes(const std::string& a, const std::string& b) {
  return read_text_file(a) == read_text_file(b);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <isoquad-cli> <suite-config>\n");
    return 2;
  }
  const std::string cli = argv[1];
  const std::string suite = argv[2];

  std::vector<ExperimentConfig> cfgs;
  try {
    cfgs = experiment_configs_from_file(suite);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cannot load suite: %s\n", e.what());
    return 2;
  }
  auto config_named = [&](const std::string& name) -> const ExperimentConfig& {
    for (const auto& c : cfgs)
      if (c.name == name) return c;
    throw std::runtime_error("suite is missing experiment '" + name + "'");
  };
  // each suite experiment carries exactly one check; run once, reuse across criteria
  std::map<std::string, CheckResult> results;
  auto result_of = [&](const std::string& name) -> const CheckResult& {
    auto it = results.find(name);
    if (it == results.end()) {
      const ExperimentConfig& cfg = config_named(name);
      ExperimentReport rep = run_experiment(cfg);
      it = results.emplace(name, rep.checks.at(0)).first;
    }
    return it->second;
  };

  // 1. solver agreement with the brute-force oracle on 200 seeded instances
  SolverOracleOutcome so;
  try {
    so = run_solver_vs_oracle();
    bool pass = so.worst_rel <= 1e-4 && so.instances == 200 && so.elapsed < 60.0;
    verdict(1, pass,
            fmt("compat/RE/adaptive vs oracle on 200 seeded instances: worst relative "
                "gap %.2e (tol 1e-4), %.1f s (limit 60)",
                so.worst_rel, so.elapsed));
  } catch (const std::exception& e) {
    verdict(1, false, fmt("solver-vs-oracle raised: %s", e.what()));
  }

  // 2. closed-form family and the identity matrix
  try {
    double worst = 0.0;
    for (int i = 1; i <= 9; ++i) {
      double rho = i / 10.0;
      SymMatrix a(2, {1.0, rho, rho, 1.0});
      ConeSpec c;
      c.S = {0};
      c.L = 1.0;
      double want = 1.0 - rho * rho;
      c.mode = NormMode::l1_on_S;
      worst = std::max(worst, std::fabs(compat_constant(a, c).value - want));
      c.mode = NormMode::l2_on_uS;
      worst = std::max(worst, std::fabs(restricted_eigenvalue(a, c).value - want));
      c.mode = NormMode::adaptive;
      worst = std::max(worst, std::fabs(adaptive_re(a, c).value - want));
    }
    bool identity_exact = true;
    SymMatrix id = SymMatrix::identity(4);
    for (NormMode mode : {NormMode::l1_on_S, NormMode::l2_on_uS, NormMode::adaptive}) {
      ConeSpec c1;
      c1.S = {0};
      c1.mode = mode;
      ConeSpec c2;
      c2.S = {0, 1};
      c2.mode = mode;
      if (cone_constant(id, c1).value != 1.0) identity_exact = false;
      if (cone_constant(id, c2).value != 1.0) identity_exact = false;
    }
    verdict(2, worst <= 1e-6 && identity_exact,
            fmt("2x2 rho family matches 1-rho^2 (worst %.2e, tol 1e-6); identity "
                "returns exactly 1.0 for all three constants: %s",
                worst, identity_exact ? "yes" : "no"));
  } catch (const std::exception& e) {
    verdict(2, false, fmt("closed-form family raised: %s", e.what()));
  }

  // 3. adaptive <= RE <= compat on the criterion-1 instances
  verdict(3, so.instances == 200 && so.ordering_violations == 0,
          fmt("ordering chain kappa* <= kappa <= phi^2 on %d instances: %d violations",
              so.instances, so.ordering_violations));

  // 4. lower-bound Monte Carlo at the pinned operating point
  try {
    auto t0 = std::chrono::steady_clock::now();
    const CheckResult& res = result_of("thm31_gaussian");
    double el = seconds_since(t0);
    bool pass = res.pass && el < 300.0;
    verdict(4, pass,
            fmt("lower-bound check: violation rate %.4f vs gate %.4f over %d trials, "
                "%.1f s (limit 300)",
                agg(res, "violation_rate"), agg(res, "gate"),
                static_cast<int>(res.rows.size()), el));
  } catch (const std::exception& e) {
    verdict(4, false, fmt("lower-bound check raised: %s", e.what()));
  }

  // 5. two-sided sandwich with shrinking relative error across n
  try {
    const CheckResult& res = result_of("sandwich_gaussian");
    verdict(5, res.pass,
            fmt("sandwich: lower rate %.4f <= %.4f, two-sided rate %.4f <= %.4f, "
                "median |phi-hat/phi0 - 1| trend %s",
                agg(res, "lower_rate"), agg(res, "lower_gate"),
                agg(res, "two_sided_rate"), agg(res, "two_sided_gate"),
                agg(res, "median_trend_ok") == 1.0 ? "strictly decreasing" : "broken"));
  } catch (const std::exception& e) {
    verdict(5, false, fmt("sandwich check raised: %s", e.what()));
  }

  // 6. transfer floor under the exhaustively verified hypothesis
  try {
    const CheckResult& d2 = result_of("transfer_d2");
    const CheckResult& d3 = result_of("transfer_d3");
    double matrices = agg(d2, "matrices") + agg(d3, "matrices");
    double viols = agg(d2, "total_violations") + agg(d3, "total_violations");
    bool exhaustive =
        agg(d2, "hypothesis_exhaustive") == 1.0 && agg(d3, "hypothesis_exhaustive") == 1.0;
    bool pass = d2.pass && d3.pass && matrices == 1000.0 && viols == 0.0 && exhaustive;
    verdict(6, pass,
            fmt("transfer floor: %d matrices (d=2 and d=3), hypothesis checked "
                "exhaustively, %d direction violations",
                static_cast<int>(matrices), static_cast<int>(viols)));
  } catch (const std::exception& e) {
    verdict(6, false, fmt("transfer check raised: %s", e.what()));
  }

  // 7. normalized floors for Gaussian and Laplace designs
  try {
    const CheckResult& g = result_of("floor_gaussian");
    const CheckResult& l = result_of("floor_laplace");
    verdict(7, g.pass && l.pass,
            fmt("normalized floors: gaussian star-rate %.4f <= %.4f, laplace star-rate "
                "%.4f <= %.4f (vacuous radii reported as such)",
                agg(g, "rate_star"), agg(g, "gate_star"),
                agg(l, "rate_star"), agg(l, "gate_star")));
  } catch (const std::exception& e) {
    verdict(7, false, fmt("floor checks raised: %s", e.what()));
  }

  // 8. variance tail exceedances
  try {
    const CheckResult& g = result_of("tails_gaussian");
    const CheckResult& r = result_of("tails_rademacher");
    bool rad_zero =
        agg(r, "exceed_rate_gauss") == 0.0 && agg(r, "exceed_rate_moments") == 0.0;
    verdict(8, g.pass && r.pass && rad_zero,
            fmt("sigma-hat tails: gaussian exceedance %.4f <= gate %.4f; rademacher "
                "exceedances exactly zero: %s",
                agg(g, "exceed_rate_gauss"), agg(g, "gate_gauss"),
                rad_zero ? "yes" : "no"));
  } catch (const std::exception& e) {
    verdict(8, false, fmt("tail checks raised: %s", e.what()));
  }

  // 9. moment bounds across every shipped ensemble
  try {
    bool pass = true;
    std::string detail;
    for (const char* name :
         {"moments_gaussian", "moments_rademacher", "moments_sem_dag", "moments_sem_arch"}) {
      const CheckResult& res = result_of(name);
      pass = pass && res.pass;
      if (!res.pass) detail += std::string(" ") + name;
    }
    verdict(9, pass,
            pass ? "moment estimates stay under their bounds plus 3 SEs for gaussian, "
                   "rademacher, sem_dag, sem_arch"
                 : "moment bound failures in:" + detail);
  } catch (const std::exception& e) {
    verdict(9, false, fmt("moment checks raised: %s", e.what()));
  }

  // 10. lasso oracle inequality
  try {
    const CheckResult& res = result_of("lasso_gaussian");
    bool pass = res.pass && agg(res, "applicable") == 250.0 &&
                agg(res, "pass_rate") == 1.0 && agg(res, "max_subgrad_residual") <= 1e-7;
    verdict(10, pass,
            fmt("lasso oracle inequality: %d/%d applicable fits pass, max KKT residual "
                "%.2e (tol 1e-7)",
                static_cast<int>(agg(res, "applicable") * agg(res, "pass_rate")),
                static_cast<int>(agg(res, "applicable")),
                agg(res, "max_subgrad_residual")));
  } catch (const std::exception& e) {
    verdict(10, false, fmt("lasso check raised: %s", e.what()));
  }

  // 11. byte-identical CLI reruns of the shipped suite
  try {
    int rc_a = run_cli(cli, suite, "acceptance_run_a");
    int rc_b = run_cli(cli, suite, "acceptance_run_b");
    bool json_same = same_bytes("acceptance_run_a.json", "acceptance_run_b.json");
    bool csv_same = same_bytes("acceptance_run_a.csv", "acceptance_run_b.csv");
    bool stdout_same = same_bytes("acceptance_run_a.stdout", "acceptance_run_b.stdout");
    bool pass = rc_a == 0 && rc_b == 0 && json_same && csv_same && stdout_same;
    verdict(11, pass,
            fmt("mc rerun determinism: exit codes %d/%d, json %s, csv %s, stdout %s",
                rc_a, rc_b, json_same ? "identical" : "differs",
                csv_same ? "identical" : "differs",
                stdout_same ? "identical" : "differs"));
  } catch (const std::exception& e) {
    verdict(11, false, fmt("CLI rerun raised: %s", e.what()));
  }

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all 11 criteria passed\n");
  return 0;
}
