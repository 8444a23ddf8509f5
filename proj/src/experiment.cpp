#include "isoquad/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "isoquad/lasso.hpp"
#include "isoquad/linalg.hpp"
#include "isoquad/parallel.hpp"
#include "isoquad/rng.hpp"

namespace isoquad {

namespace {

uint64_t check_stream(const std::string& name) {
  uint64_t h = 1469598103934665603ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

// Every trial (and every sub-batch, keyed by salt) draws from its own
// substream of the master seed, so trials can run in any order.
uint64_t trial_seed(const ExperimentConfig& cfg, const std::string& check,
                    uint64_t salt, uint64_t idx) {
  SplitRng base(cfg.master_seed, check_stream(check) + salt * SplitRng::kGolden);
  return base.fork(idx).next_u64();
}

double vec_mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  Accum a;
  for (double x : v) a.add(x);
  return a.value() / static_cast<double>(v.size());
}

double vec_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = vec_mean(v);
  Accum a;
  for (double x : v) a.add((x - m) * (x - m));
  return std::sqrt(a.value() / static_cast<double>(v.size() - 1));
}

double vec_median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  size_t h = v.size() / 2;
  return (v.size() % 2) ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

void put(CheckResult& res, const std::string& key, double v) {
  res.aggregates.emplace_back(key, v);
}

void metric(TrialRow& row, const std::string& key, double v) {
  row.metrics.emplace_back(key, v);
}

double norm1(const Vector& u) {
  Accum a;
  for (double x : u) a.add(std::fabs(x));
  return a.value();
}

// The compat minimizer lies in the kappa cone for the same L, so its Rayleigh
// ratio is a certified upper bound; keep whichever certificate is tighter.
double tighten_kappa(const SymMatrix& a, const std::vector<int>& S,
                     const ConstantResult& phi, double kap) {
  double wsq = 0.0;
  for (int j : S) wsq += phi.minimizer[j] * phi.minimizer[j];
  if (!(wsq > 0.0)) return kap;
  return std::min(kap, quadratic_form(a, phi.minimizer) / wsq);
}

// A - w * B, entrywise.
SymMatrix sym_axpy(const SymMatrix& a, const SymMatrix& b, double w) {
  std::vector<double> v(a.values());
  const std::vector<double>& bv = b.values();
  for (size_t i = 0; i < v.size(); ++i) v[i] += w * bv[i];
  return SymMatrix(a.dim(), v);
}

const ConeSpec& need_cone(const ExperimentConfig& cfg, const char* check) {
  if (cfg.cone.S.empty())
    throw std::invalid_argument(std::string(check) + " requires a cone in the config");
  return cfg.cone;
}

void forward_flags(CheckResult& res, const BoundReport& rep) {
  for (const auto& f : rep.flags) res.notes.push_back(rep.name + ": " + f);
}

// ---------------------------------------------------------------------------

CheckResult check_lower_bound_thm31(const ExperimentConfig& cfg) {
  CheckResult res;
  res.check = "lower_bound_thm31";
  const int p = cfg.ensemble.p;
  if (p > 6)
    throw std::invalid_argument("lower_bound_thm31: certified infima need p <= 6");
  SymMatrix sigma0 = population_covariance(cfg.ensemble);
  const BoundParams& q = cfg.bound_params;
  BoundReport margin = eval_lower_margin(q);
  forward_flags(res, margin);
  double threshold = 1.0 - margin.value;
  if (margin.void_flag)
    res.notes.push_back("margin exceeds 1; the bound is void and trivially satisfied");

  const long long R = cfg.trials;
  std::vector<double> infs(R), viol(R);
  par::parallel_for(R, [&](long long r) {
    uint64_t seed = trial_seed(cfg, res.check, 1, static_cast<uint64_t>(r));
    DesignSample ds = sample(cfg.ensemble, cfg.n, seed);
    ConstantResult inf =
        oracle_minimum(ds.gram, sigma0, q.M, cfg.options.oracle_budget, seed);
    infs[r] = inf.value;
    viol[r] = inf.value < threshold - 1e-3 ? 1.0 : 0.0;
  });
  res.rows.resize(R);
  for (long long r = 0; r < R; ++r) {
    res.rows[r].trial = r;
    metric(res.rows[r], "infimum", infs[r]);
    metric(res.rows[r], "violation", viol[r]);
  }
  double rate = vec_mean(viol);
  double target = std::exp(-q.t);
  double gate = rate_gate(target, R);
  put(res, "violation_rate", rate);
  put(res, "target", target);
  put(res, "gate", gate);
  put(res, "margin", margin.value);
  put(res, "threshold", threshold);
  put(res, "void", margin.void_flag ? 1.0 : 0.0);
  put(res, "min_infimum", *std::min_element(infs.begin(), infs.end()));
  put(res, "mean_infimum", vec_mean(infs));
  res.pass = rate <= gate;
  return res;
}

// ---------------------------------------------------------------------------

CheckResult check_phi_kappa_sandwich(const ExperimentConfig& cfg) {
  CheckResult res;
  res.check = "phi_kappa_sandwich";
  const ConeSpec& cone = need_cone(cfg, "phi_kappa_sandwich");
  const long long s = static_cast<long long>(cone.S.size());
  if (s > 4) throw std::invalid_argument("phi_kappa_sandwich: s <= 4 required");
  SymMatrix sigma0 = population_covariance(cfg.ensemble);

  ConeSpec phi_cone{cone.S, cone.L, NormMode::l1_on_S};
  ConeSpec kap_cone{cone.S, cone.L, NormMode::l2_on_uS};
  ConstantResult phi0_r = compat_constant(sigma0, phi_cone);
  double phi0 = phi0_r.value;
  double kap0 = tighten_kappa(sigma0, cone.S, phi0_r,
                              restricted_eigenvalue(sigma0, kap_cone).value);

  BoundParams ql = cfg.bound_params;
  ql.M = (cone.L + 1.0) * std::sqrt(static_cast<double>(s)) / std::sqrt(phi0);
  BoundReport lower = eval_lower_margin(ql);
  BoundParams qu = cfg.bound_params;
  qu.L = cone.L;
  qu.s = s;
  BoundReport upper = eval_upper_margin(qu);
  forward_flags(res, lower);
  forward_flags(res, upper);
  double lo_edge = 1.0 - lower.value - 1e-3;
  double hi_edge = 1.0 + upper.value + 1e-3;

  const long long R = cfg.trials;
  std::vector<double> rphi(R), rkap(R), lo_viol(R), two_viol(R), order_viol(R);
  par::parallel_for(R, [&](long long r) {
    uint64_t seed = trial_seed(cfg, res.check, 1, static_cast<uint64_t>(r));
    DesignSample ds = sample(cfg.ensemble, cfg.n, seed);
    ConstantResult phi_r = compat_constant(ds.gram, phi_cone);
    double phi_hat = phi_r.value;
    double kap_hat = tighten_kappa(ds.gram, cone.S, phi_r,
                                   restricted_eigenvalue(ds.gram, kap_cone).value);
    rphi[r] = phi_hat / phi0;
    rkap[r] = kap_hat / kap0;
    bool lo_bad = rphi[r] < lo_edge || rkap[r] < lo_edge;
    bool hi_bad = rphi[r] > hi_edge || rkap[r] > hi_edge;
    lo_viol[r] = lo_bad ? 1.0 : 0.0;
    two_viol[r] = (lo_bad || hi_bad) ? 1.0 : 0.0;
    // kappa <= phi can be an exact tie; allow iterative-solver noise.
    order_viol[r] = kap_hat > phi_hat * (1.0 + 1e-6) + 1e-9 ? 1.0 : 0.0;
  });
  res.rows.resize(R);
  for (long long r = 0; r < R; ++r) {
    res.rows[r].trial = r;
    metric(res.rows[r], "ratio_phi", rphi[r]);
    metric(res.rows[r], "ratio_kappa", rkap[r]);
    metric(res.rows[r], "lower_violation", lo_viol[r]);
    metric(res.rows[r], "two_sided_violation", two_viol[r]);
    metric(res.rows[r], "ordering_violation", order_viol[r]);
  }

  double lo_rate = vec_mean(lo_viol), two_rate = vec_mean(two_viol);
  double lo_target = std::exp(-cfg.bound_params.t);
  double two_target = std::exp(-cfg.bound_params.t) + 1.0 / cfg.bound_params.t;
  double orders = vec_mean(order_viol) * static_cast<double>(R);

  bool trend_ok = true;
  std::vector<std::pair<int, double>> medians;
  for (size_t gi = 0; gi < cfg.options.n_grid.size(); ++gi) {
    int ng = cfg.options.n_grid[gi];
    std::vector<double> absdev(R);
    par::parallel_for(R, [&](long long r) {
      uint64_t seed =
          trial_seed(cfg, res.check, 1000 + static_cast<uint64_t>(ng), static_cast<uint64_t>(r));
      DesignSample ds = sample(cfg.ensemble, ng, seed);
      absdev[r] = std::fabs(compat_constant(ds.gram, phi_cone).value / phi0 - 1.0);
    });
    medians.emplace_back(ng, vec_median(absdev));
  }
  for (size_t gi = 0; gi + 1 < medians.size(); ++gi)
    trend_ok = trend_ok && medians[gi + 1].second < medians[gi].second;
  if (medians.empty())
    res.notes.push_back("no n_grid supplied; median trend not evaluated");

  put(res, "phi0_sq", phi0);
  put(res, "kappa0_sq", kap0);
  put(res, "lower_rate", lo_rate);
  put(res, "lower_target", lo_target);
  put(res, "lower_gate", rate_gate(lo_target, R));
  put(res, "two_sided_rate", two_rate);
  put(res, "two_sided_target", two_target);
  put(res, "two_sided_gate", rate_gate(two_target, R));
  put(res, "ordering_violations", orders);
  put(res, "lower_margin", lower.value);
  put(res, "upper_margin", upper.value);
  for (const auto& md : medians)
    put(res, "median_absdev_n" + std::to_string(md.first), md.second);
  put(res, "median_trend_ok", trend_ok ? 1.0 : 0.0);
  res.pass = lo_rate <= rate_gate(lo_target, R) &&
             two_rate <= rate_gate(two_target, R) && orders == 0.0 && trend_ok;
  return res;
}

// ---------------------------------------------------------------------------

double det3(double a, double b, double c, double d, double e, double f) {
  // | a b c |
  // | b d e |
  // | c e f |
  return a * (d * f - e * e) - b * (b * f - c * e) + c * (b * e - c * d);
}

bool block_psd(const SymMatrix& a, const int* idx, int d, double scale) {
  double tol2 = 1e-12 * scale * scale;
  for (int i = 0; i < d; ++i)
    if (a(idx[i], idx[i]) < 0.0) return false;
  if (d == 1) return true;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      double det = a(idx[i], idx[i]) * a(idx[j], idx[j]) - a(idx[i], idx[j]) * a(idx[i], idx[j]);
      if (det < -tol2) return false;
    }
  if (d == 2) return true;
  if (d == 3) {
    double det = det3(a(idx[0], idx[0]), a(idx[0], idx[1]), a(idx[0], idx[2]),
                      a(idx[1], idx[1]), a(idx[1], idx[2]), a(idx[2], idx[2]));
    return det >= -1e-12 * scale * scale * scale;
  }
  // d > 3: ridge Cholesky of the block
  std::vector<double> sub(static_cast<size_t>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) sub[static_cast<size_t>(i) * d + j] = a(idx[i], idx[j]);
  for (int i = 0; i < d; ++i) sub[static_cast<size_t>(i) * d + i] += 1e-10 * scale;
  return cholesky(SymMatrix(d, sub)).success;
}

CheckResult check_transfer_principle(const ExperimentConfig& cfg) {
  CheckResult res;
  res.check = "transfer_principle";
  const int p = cfg.ensemble.p;
  const int d = cfg.options.transfer_d;
  if (d < 2 || d > p)
    throw std::invalid_argument("transfer_principle: need 2 <= transfer_d <= p");
  double shrink = cfg.options.transfer_shrink;
  if (!(shrink > 0.0 && shrink <= 1.0))
    throw std::invalid_argument("transfer_principle: transfer_shrink must lie in (0, 1]");
  SymMatrix sigma0 = population_covariance(cfg.ensemble);

  double ncomb = 1.0;
  for (int i = 0; i < d; ++i) ncomb = ncomb * (p - i) / (i + 1);
  bool exhaustive = ncomb <= 1e5;
  std::vector<int> combos;  // flattened d-subsets when exhaustive
  if (exhaustive) {
    std::vector<int> c(d);
    for (int i = 0; i < d; ++i) c[i] = i;
    for (;;) {
      combos.insert(combos.end(), c.begin(), c.end());
      int i = d - 1;
      while (i >= 0 && c[i] == p - d + i) --i;
      if (i < 0) break;
      ++c[i];
      for (int j = i + 1; j < d; ++j) c[j] = c[j - 1] + 1;
    }
  } else {
    res.notes.push_back("hypothesis verified on 10000 sampled submatrices per matrix");
  }

  const long long R = cfg.trials;
  const int dirs = cfg.options.transfer_directions;
  const int max_attempts = 20000;
  std::vector<double> viols(R), attempts(R), exhausted(R);
  par::parallel_for(R, [&](long long r) {
    SymMatrix a;
    uint64_t seed = 0;
    bool found = false;
    int tried = 0;
    for (int att = 0; att < max_attempts && !found; ++att) {
      seed = trial_seed(cfg, res.check, 1,
                        static_cast<uint64_t>(r) * max_attempts + att);
      DesignSample ds = sample(cfg.ensemble, cfg.options.transfer_n, seed);
      a = sym_axpy(ds.gram, sigma0, -(1.0 - shrink));
      double scale = std::max(1.0, a.max_abs());
      bool ok = true;
      if (exhaustive) {
        for (size_t k = 0; ok && k < combos.size(); k += d)
          ok = block_psd(a, &combos[k], d, scale);
      } else {
        SplitRng pick(seed, 0x68797073ULL);  // "hyps"
        std::vector<int> idx(d);
        for (int rep = 0; ok && rep < 10000; ++rep) {
          for (int i = 0; i < d; ++i) {
            bool fresh;
            do {
              idx[i] = static_cast<int>(pick.next_below(static_cast<uint64_t>(p)));
              fresh = true;
              for (int j = 0; j < i; ++j) fresh = fresh && idx[j] != idx[i];
            } while (!fresh);
          }
          ok = block_psd(a, idx.data(), d, scale);
        }
      }
      found = ok;
      tried = att + 1;
    }
    attempts[r] = tried;
    if (!found) {
      exhausted[r] = 1.0;
      return;
    }
    double coeff = transfer_floor_coefficient(a, d);
    SplitRng urng(seed, 0x75646972ULL);  // "udir"
    int bad = 0;
    for (int k = 0; k < dirs; ++k) {
      Vector u(p, 0.0);
      if (k % 2 == 0) {
        for (int j = 0; j < p; ++j) u[j] = urng.next_gaussian();
      } else {
        int nnz = 1 + static_cast<int>(urng.next_below(3));
        for (int t = 0; t < nnz; ++t) {
          int j = static_cast<int>(urng.next_below(static_cast<uint64_t>(p)));
          u[j] += urng.next_sign() * std::fabs(urng.next_gaussian());
        }
      }
      double l1 = norm1(u);
      if (l1 == 0.0) continue;
      double qf = quadratic_form(a, u);
      double floor = coeff * l1 * l1;
      if (qf < floor - 1e-10 * (1.0 + std::fabs(floor))) ++bad;
    }
    viols[r] = bad;
  });

  res.rows.resize(R);
  for (long long r = 0; r < R; ++r) {
    res.rows[r].trial = r;
    metric(res.rows[r], "attempts", attempts[r]);
    metric(res.rows[r], "violations", viols[r]);
  }
  double total_viol = 0.0, total_exhausted = 0.0;
  for (long long r = 0; r < R; ++r) {
    total_viol += viols[r];
    total_exhausted += exhausted[r];
  }
  if (total_exhausted > 0.0)
    res.notes.push_back("some trials never produced a hypothesis-passing matrix");
  put(res, "d", d);
  put(res, "matrices", static_cast<double>(R));
  put(res, "directions_per_matrix", dirs);
  put(res, "hypothesis_exhaustive", exhaustive ? 1.0 : 0.0);
  put(res, "submatrices_checked", exhaustive ? ncomb : 10000.0);
  put(res, "total_violations", total_viol);
  put(res, "mean_attempts", vec_mean(attempts));
  put(res, "matrices_exhausted", total_exhausted);
  res.pass = total_viol == 0.0 && total_exhausted == 0.0;
  return res;
}

// ---------------------------------------------------------------------------

CheckResult check_normalized_floor(const ExperimentConfig& cfg) {
  CheckResult res;
  res.check = "normalized_floor";
  const ConeSpec& cone = need_cone(cfg, "normalized_floor");
  const long long s = static_cast<long long>(cone.S.size());
  const int p = cfg.ensemble.p;
  if (s > 4) throw std::invalid_argument("normalized_floor: s <= 4 required");
  if (p > 60) throw std::invalid_argument("normalized_floor: p <= 60 required");
  SymMatrix sigma0 = population_covariance(cfg.ensemble);
  for (int j = 0; j < p; ++j)
    if (std::fabs(sigma0(j, j) - 1.0) > 1e-9)
      throw std::invalid_argument("normalized_floor: population diagonal must be 1");

  BoundParams q = cfg.bound_params;
  q.L = cone.L;
  q.s = s;
  if (!(q.Delta > 0.0 && q.Delta < 1.0))
    throw std::invalid_argument("normalized_floor: bound_params.Delta must lie in (0, 1)");
  double ls = slack_L(cone.L, q.Delta, q.eps);
  std::optional<long long> m_sq = find_M_of_Delta(q, q.Delta);

  ConeSpec star_cone{cone.S, ls, NormMode::adaptive};
  ConeSpec phi_cone{cone.S, ls, NormMode::l1_on_S};
  ConeSpec kap_cone{cone.S, ls, NormMode::l2_on_uS};
  double kappa_star = adaptive_re(sigma0, star_cone).value;
  ConstantResult phi0_r = compat_constant(sigma0, phi_cone);
  double phi0 = phi0_r.value;
  double kap0 = tighten_kappa(sigma0, cone.S, phi0_r,
                              restricted_eigenvalue(sigma0, kap_cone).value);

  double floor_star = -HUGE_VAL, floor_phi = -HUGE_VAL, floor_kap = -HUGE_VAL;
  if (m_sq) {
    double msq = static_cast<double>(*m_sq);
    floor_star = eval_normalized_floor(q, kappa_star, msq).value;
    floor_phi = eval_normalized_floor(q, phi0, msq).value;
    floor_kap = eval_normalized_floor(q, kap0, msq).value;
  } else {
    res.notes.push_back(
        "no admissible M^2(Delta) in {2..p}; the floors are vacuous and every "
        "trial counts as non-violating");
  }

  ConeSpec phi_hat_cone{cone.S, cone.L, NormMode::l1_on_S};
  ConeSpec kap_hat_cone{cone.S, cone.L, NormMode::l2_on_uS};
  const long long R = cfg.trials;
  std::vector<double> v_star(R), v_phi(R), v_kap(R), b_miss(R), c_miss(R), order_viol(R);
  std::vector<double> phis(R), kaps(R);
  par::parallel_for(R, [&](long long r) {
    uint64_t seed = trial_seed(cfg, res.check, 1, static_cast<uint64_t>(r));
    DesignSample ds = sample(cfg.ensemble, cfg.n, seed);
    ConstantResult phi_r = compat_constant(ds.gram_normalized, phi_hat_cone);
    double phi_t = phi_r.value;
    double kap_t =
        tighten_kappa(ds.gram_normalized, cone.S, phi_r,
                      restricted_eigenvalue(ds.gram_normalized, kap_hat_cone).value);
    phis[r] = phi_t;
    kaps[r] = kap_t;
    double smax = 0.0;
    Accum ssum;
    for (int j : cone.S) {
      smax = std::max(smax, ds.sigma_hat_sq[j]);
      ssum.add(ds.sigma_hat_sq[j]);
    }
    b_miss[r] = smax > 1.0 + q.eps ? 1.0 : 0.0;
    c_miss[r] = ssum.value() / static_cast<double>(s) > 1.0 + q.eps ? 1.0 : 0.0;
    v_star[r] = phi_t < floor_star - 1e-3 ? 1.0 : 0.0;
    v_phi[r] = phi_t < floor_phi - 1e-3 ? 1.0 : 0.0;
    v_kap[r] = kap_t < floor_kap - 1e-3 ? 1.0 : 0.0;
    order_viol[r] = kap_t > phi_t * (1.0 + 1e-6) + 1e-9 ? 1.0 : 0.0;
  });
  res.rows.resize(R);
  for (long long r = 0; r < R; ++r) {
    res.rows[r].trial = r;
    metric(res.rows[r], "phi_tilde", phis[r]);
    metric(res.rows[r], "kappa_tilde", kaps[r]);
    metric(res.rows[r], "violation_star", v_star[r]);
    metric(res.rows[r], "violation_phi", v_phi[r]);
    metric(res.rows[r], "violation_kappa", v_kap[r]);
    metric(res.rows[r], "event_B_miss", b_miss[r]);
    metric(res.rows[r], "event_C_miss", c_miss[r]);
  }

  double base = std::exp(-q.t);
  double pc = vec_mean(c_miss), pb = vec_mean(b_miss);
  double rate_star = vec_mean(v_star), rate_phi = vec_mean(v_phi), rate_kap = vec_mean(v_kap);
  double gate_star = rate_gate(base + pc, R);
  double gate_b = rate_gate(base + pb, R);
  double orders = vec_mean(order_viol) * static_cast<double>(R);
  put(res, "M_sq", m_sq ? static_cast<double>(*m_sq) : 0.0);
  put(res, "L_slack", ls);
  put(res, "kappa_star_sq", kappa_star);
  put(res, "phi0_slack_sq", phi0);
  put(res, "kappa0_slack_sq", kap0);
  put(res, "floor_star", floor_star);
  put(res, "floor_phi", floor_phi);
  put(res, "floor_kappa", floor_kap);
  put(res, "rate_star", rate_star);
  put(res, "rate_phi", rate_phi);
  put(res, "rate_kappa", rate_kap);
  put(res, "event_C_miss_rate", pc);
  put(res, "event_B_miss_rate", pb);
  put(res, "gate_star", gate_star);
  put(res, "gate_B", gate_b);
  put(res, "ordering_violations", orders);
  res.pass = rate_star <= gate_star && rate_phi <= gate_b && rate_kap <= gate_b &&
             orders == 0.0;
  return res;
}

// ---------------------------------------------------------------------------

CheckResult check_sigma_tails(const ExperimentConfig& cfg) {
  CheckResult res;
  res.check = "sigma_tails";
  const int p = cfg.ensemble.p;
  SymMatrix sigma0 = population_covariance(cfg.ensemble);
  for (int j = 0; j < p; ++j)
    if (std::fabs(sigma0(j, j) - 1.0) > 1e-9)
      throw std::invalid_argument("sigma_tails: population diagonal must be 1");

  const BoundParams& q = cfg.bound_params;
  BoundReport gauss = eval_sigma_tail_gauss(q);
  BoundReport moments = eval_sigma_tail_moments(q);
  forward_flags(res, gauss);
  forward_flags(res, moments);
  BoundParams q2 = q;
  q2.t = 2.0 * q.t;
  bool mono = eval_sigma_tail_gauss(q2).value > gauss.value &&
              eval_sigma_tail_moments(q2).value > moments.value;

  const long long R = cfg.trials;
  std::vector<double> exc1(R), exc2(R), devs(R);
  par::parallel_for(R, [&](long long r) {
    uint64_t seed = trial_seed(cfg, res.check, 1, static_cast<uint64_t>(r));
    DesignSample ds = sample(cfg.ensemble, cfg.n, seed);
    double dev = 0.0, top = 0.0;
    for (int j = 0; j < p; ++j) {
      dev = std::max(dev, std::fabs(ds.sigma_hat_sq[j] - 1.0));
      top = std::max(top, ds.sigma_hat_sq[j]);
    }
    devs[r] = dev;
    exc1[r] = dev > gauss.value ? 1.0 : 0.0;
    exc2[r] = top > moments.value ? 1.0 : 0.0;
  });
  res.rows.resize(R);
  for (long long r = 0; r < R; ++r) {
    res.rows[r].trial = r;
    metric(res.rows[r], "max_abs_dev", devs[r]);
    metric(res.rows[r], "exceed_gauss", exc1[r]);
    metric(res.rows[r], "exceed_moments", exc2[r]);
  }
  double rate1 = vec_mean(exc1), rate2 = vec_mean(exc2);
  double target1 = std::exp(-q.t);
  double target2 = std::min(1.0 / q.t, 1.0);
  put(res, "threshold_gauss", gauss.value);
  put(res, "threshold_moments", moments.value);
  put(res, "exceed_rate_gauss", rate1);
  put(res, "target_gauss", target1);
  put(res, "gate_gauss", rate_gate(target1, R));
  put(res, "exceed_rate_moments", rate2);
  put(res, "target_moments", target2);
  put(res, "gate_moments", rate_gate(target2, R));
  put(res, "threshold_monotone_in_t", mono ? 1.0 : 0.0);
  res.pass = rate1 <= rate_gate(target1, R) && rate2 <= rate_gate(target2, R) && mono;
  return res;
}

// ---------------------------------------------------------------------------

CheckResult check_moment_bounds(const ExperimentConfig& cfg) {
  CheckResult res;
  res.check = "moment_bounds";
  const int p = cfg.ensemble.p;
  SymMatrix sigma0 = population_covariance(cfg.ensemble);
  EnsembleConstants ec = ensemble_constants(cfg.ensemble);
  const BoundParams& q = cfg.bound_params;
  bool all_ok = true;

  // Fourth moments over admissible directions (entries Bernstein).
  if (ec.sigma_X && ec.K_X) {
    BoundReport b4 = eval_fourth_moment_bound(q);
    forward_flags(res, b4);
    int dirs = cfg.options.directions;
    int draws = cfg.options.moment_draws;
    uint64_t dseed = trial_seed(cfg, res.check, 1, 0);
    DesignSample mc = sample(cfg.ensemble, draws, dseed);
    std::vector<double> ests(dirs), ses(dirs), viol(dirs);
    par::parallel_for(dirs, [&](long long k) {
      SplitRng rng(trial_seed(cfg, res.check, 2, static_cast<uint64_t>(k)), 0x6469ULL);
      Vector u(p, 0.0);
      if (k == 0) {
        u[0] = 1.0;
      } else {
        for (int j = 0; j < p; ++j) u[j] = rng.next_gaussian();
      }
      double qf = quadratic_form(sigma0, u);
      double c = 1.0 / std::sqrt(qf);
      double l1 = norm1(u) * c;
      if (l1 > q.M) c *= q.M / l1;
      for (int j = 0; j < p; ++j) u[j] *= c;
      Accum sum, sumsq;
      for (int i = 0; i < draws; ++i) {
        double z = dot(&mc.X[static_cast<size_t>(i) * p], u.data(), p);
        double y = z * z * z * z;
        sum.add(y);
        sumsq.add(y * y);
      }
      double m4 = sum.value() / draws;
      double var = std::max(0.0, sumsq.value() / draws - m4 * m4);
      double se_m4 = std::sqrt(var / draws);
      ests[k] = std::sqrt(m4);
      ses[k] = m4 > 0.0 ? se_m4 / (2.0 * std::sqrt(m4)) : se_m4;
      viol[k] = ests[k] > b4.value + 3.0 * ses[k] ? 1.0 : 0.0;
    });
    double bad = 0.0;
    for (int k = 0; k < dirs; ++k) {
      TrialRow row;
      row.trial = res.rows.size();
      metric(row, "part", 1.0);  // 1 = fourth moment, 2 = martingale
      metric(row, "estimate", ests[k]);
      metric(row, "bound", b4.value);
      metric(row, "se", ses[k]);
      metric(row, "violation", viol[k]);
      res.rows.push_back(row);
      bad += viol[k];
    }
    put(res, "fourth_moment_bound", b4.value);
    put(res, "fourth_moment_violations", bad);
    all_ok = all_ok && bad == 0.0;
  } else {
    res.notes.push_back("fourth-moment part skipped: no Bernstein entry constants");
  }

  // SEM innovations against the martingale moment bounds.
  if (is_sem(cfg.ensemble.variant)) {
    BoundReport mb = eval_martingale_moment_bounds(q);
    forward_flags(res, mb);
    double bound = 0.0;
    std::string which;
    if (cfg.ensemble.arch_gain == 0.0) {
      which = "subgaussian_F0";
    } else {
      which = "subgaussian_general";
    }
    for (const auto& kv : mb.parts)
      if (kv.first == which) bound = kv.second;
    int dirs = cfg.options.directions;
    int draws = cfg.options.moment_draws;
    uint64_t dseed = trial_seed(cfg, res.check, 3, 0);
    DesignSample mc = sample(cfg.ensemble, draws, dseed);
    // innovations: eps_j = x_j - sum_{k<j} beta_kj x_k
    std::vector<double> eps(mc.X.size());
    par::parallel_for(draws, [&](long long i) {
      const double* x = &mc.X[static_cast<size_t>(i) * p];
      double* e = &eps[static_cast<size_t>(i) * p];
      for (int j = 0; j < p; ++j) {
        Accum acc;
        acc.add(x[j]);
        for (int k = 0; k < j; ++k)
          acc.add(-cfg.ensemble.beta[static_cast<size_t>(k) * p + j] * x[k]);
        e[j] = acc.value();
      }
    });
    double m = q.m;
    std::vector<double> ests(dirs), ses(dirs), viol(dirs);
    par::parallel_for(dirs, [&](long long k) {
      SplitRng rng(trial_seed(cfg, res.check, 4, static_cast<uint64_t>(k)), 0x6d64ULL);
      Vector u(p, 0.0);
      if (k == 0) {
        u[p - 1] = 1.0;
      } else {
        for (int j = 0; j < p; ++j) u[j] = rng.next_gaussian();
        double nrm = std::sqrt(dot(u, u));
        for (int j = 0; j < p; ++j) u[j] /= nrm;
      }
      Accum sum, sumsq;
      for (int i = 0; i < draws; ++i) {
        double z = std::fabs(dot(&eps[static_cast<size_t>(i) * p], u.data(), p));
        double y = std::pow(z, m);
        sum.add(y);
        sumsq.add(y * y);
      }
      double mh = sum.value() / draws;
      double var = std::max(0.0, sumsq.value() / draws - mh * mh);
      double se_mh = std::sqrt(var / draws);
      double est = std::pow(mh, 1.0 / m);
      ests[k] = est;
      ses[k] = est > 0.0 ? se_mh / m * std::pow(est, 1.0 - m) : se_mh;
      viol[k] = est > bound + 3.0 * ses[k] ? 1.0 : 0.0;
    });
    double bad = 0.0;
    for (int k = 0; k < dirs; ++k) {
      TrialRow row;
      row.trial = res.rows.size();
      metric(row, "part", 2.0);
      metric(row, "estimate", ests[k]);
      metric(row, "bound", bound);
      metric(row, "se", ses[k]);
      metric(row, "violation", viol[k]);
      res.rows.push_back(row);
      bad += viol[k];
    }
    res.notes.push_back("martingale comparison uses the " + which + " bound");
    put(res, "martingale_bound", bound);
    put(res, "martingale_violations", bad);
    all_ok = all_ok && bad == 0.0;
  }

  // E || eps^T X / n ||_inf against delta_n and the moment-growth bound.
  {
    int draws = cfg.options.w_draws;
    std::vector<double> wmax(draws);
    par::parallel_for(draws, [&](long long r) {
      uint64_t seed = trial_seed(cfg, res.check, 5, static_cast<uint64_t>(r));
      DesignSample ds = sample(cfg.ensemble, cfg.n, seed);
      Vector w = rademacher_average(ds, SplitRng(seed, 0x77ULL).next_u64());
      double top = 0.0;
      for (double x : w) top = std::max(top, std::fabs(x));
      wmax[r] = top;
    });
    double est = vec_mean(wmax);
    double se = vec_sd(wmax) / std::sqrt(static_cast<double>(draws));
    put(res, "EW_estimate", est);
    put(res, "EW_se", se);
    if (ec.sigma_X && ec.K_X) {
      double dn = eval_delta_n(q.sigma_X, q.K_X, q.p, q.n);
      bool ok = est <= dn + 3.0 * se;
      put(res, "EW_delta_n", dn);
      put(res, "EW_delta_n_ok", ok ? 1.0 : 0.0);
      all_ok = all_ok && ok;
    }
    BoundReport ew = eval_EW_moment_bound(q);
    if (ew.flags.empty()) {
      bool ok = est <= ew.value + 3.0 * se;
      put(res, "EW_bound", ew.value);
      put(res, "EW_bound_ok", ok ? 1.0 : 0.0);
      all_ok = all_ok && ok;
    } else {
      forward_flags(res, ew);
      res.notes.push_back("EW moment-growth bound preconditions fail; comparison skipped");
    }
  }

  res.pass = all_ok;
  return res;
}

// ---------------------------------------------------------------------------

CheckResult check_uniform_deviation(const ExperimentConfig& cfg) {
  CheckResult res;
  res.check = "uniform_deviation";
  const int p = cfg.ensemble.p;
  SymMatrix sigma0 = population_covariance(cfg.ensemble);
  const BoundParams& q0 = cfg.bound_params;

  std::vector<int> grid = cfg.options.n_grid;
  if (grid.empty()) grid.push_back(cfg.n);

  auto feasible_scale = [&](const Vector& u) {
    double qf = quadratic_form(sigma0, u);
    if (qf <= 0.0) return 0.0;
    double c = 1.0 / std::sqrt(qf);
    double l1 = norm1(u) * c;
    if (l1 > q0.M) c *= q0.M / l1;
    return c;
  };

  const long long R = cfg.trials;
  std::vector<double> c1_per_n, med_per_n;
  for (size_t gi = 0; gi < grid.size(); ++gi) {
    int ng = grid[gi];
    BoundParams q = q0;
    q.n = ng;
    BoundReport unit = eval_uniform_deviation_bound(q, 1.0);
    double kernel = 0.0, residual = 0.0;
    for (const auto& kv : unit.parts) {
      if (kv.first == "term1" || kv.first == "term2") kernel += kv.second;
      if (kv.first == "residual") residual = kv.second;
    }
    std::vector<double> sups(R), c1req(R);
    par::parallel_for(R, [&](long long r) {
      uint64_t seed =
          trial_seed(cfg, res.check, 1000 + static_cast<uint64_t>(ng), static_cast<uint64_t>(r));
      DesignSample ds = sample(cfg.ensemble, ng, seed);
      SymMatrix dev = sym_axpy(ds.gram, sigma0, -1.0);
      SplitRng rng(seed, 0x75646576ULL);  // "udev"
      int dirs = cfg.options.dev_directions;
      double best = 0.0;
      std::vector<std::pair<double, Vector>> top;
      auto consider = [&](Vector u) {
        double c = feasible_scale(u);
        if (c == 0.0) return;
        for (double& x : u) x *= c;
        double val = std::fabs(quadratic_form(dev, u));
        best = std::max(best, val);
        top.emplace_back(val, std::move(u));
        if (top.size() > 8) {
          size_t worst = 0;
          for (size_t i = 1; i < top.size(); ++i)
            if (top[i].first < top[worst].first) worst = i;
          top.erase(top.begin() + worst);
        }
      };
      for (int j = 0; j < p; ++j) {
        Vector u(p, 0.0);
        u[j] = 1.0;
        consider(u);
      }
      for (int k = 0; k < dirs; ++k) {
        Vector u(p, 0.0);
        if (k % 2 == 0) {
          for (int j = 0; j < p; ++j) u[j] = rng.next_gaussian();
        } else {
          int nnz = 1 + static_cast<int>(rng.next_below(3));
          for (int t = 0; t < nnz; ++t)
            u[rng.next_below(static_cast<uint64_t>(p))] += rng.next_sign();
        }
        consider(u);
      }
      for (auto& cand : top) {
        Vector u = cand.second;
        double val = std::fabs(quadratic_form(dev, u));
        double gamma = 0.5;
        for (int it = 0; it < 30 && gamma > 1e-6; ++it) {
          Vector g = matvec(dev, u);
          double gn = std::sqrt(dot(g, g));
          if (gn == 0.0) break;
          double sgn = quadratic_form(dev, u) >= 0.0 ? 1.0 : -1.0;
          Vector v(p);
          for (int j = 0; j < p; ++j) v[j] = u[j] + gamma * sgn * g[j] / gn;
          double c = feasible_scale(v);
          if (c == 0.0) break;
          for (double& x : v) x *= c;
          double vv = std::fabs(quadratic_form(dev, v));
          if (vv > val) {
            u = v;
            val = vv;
          } else {
            gamma *= 0.5;
          }
        }
        best = std::max(best, val);
      }
      sups[r] = best;
      c1req[r] = kernel > 0.0 ? std::max(0.0, best - residual) / kernel : 0.0;
    });
    for (long long r = 0; r < R; ++r) {
      TrialRow row;
      row.trial = res.rows.size();
      metric(row, "n", ng);
      metric(row, "sup_estimate", sups[r]);
      metric(row, "c1_required", c1req[r]);
      res.rows.push_back(row);
    }
    c1_per_n.push_back(*std::max_element(c1req.begin(), c1req.end()));
    med_per_n.push_back(vec_median(sups));
    put(res, "c1_n" + std::to_string(ng), c1_per_n.back());
    put(res, "median_dev_n" + std::to_string(ng), med_per_n.back());
  }

  bool medians_ok = true;
  for (size_t i = 0; i + 1 < med_per_n.size(); ++i)
    medians_ok = medians_ok && med_per_n[i + 1] < med_per_n[i];
  bool growth_ok = true;
  if (c1_per_n.size() >= 2)
    growth_ok = c1_per_n.back() <= 1.10 * c1_per_n.front() + 1e-9;
  double c1_cal = *std::max_element(c1_per_n.begin(), c1_per_n.end());
  put(res, "c1_calibrated", c1_cal);
  put(res, "median_trend_ok", medians_ok ? 1.0 : 0.0);
  put(res, "c1_growth_ok", growth_ok ? 1.0 : 0.0);
  res.notes.push_back(
      "c1 is calibrated from the data (smallest value covering every trial), "
      "not asserted against a fixed constant");
  res.pass = medians_ok && growth_ok;
  return res;
}

// ---------------------------------------------------------------------------

CheckResult check_lasso_oracle(const ExperimentConfig& cfg) {
  CheckResult res;
  res.check = "lasso_oracle";
  const ExperimentOptions& o = cfg.options;
  const long long noisy = o.lasso_noisy, clean = o.lasso_noiseless;
  const long long R = noisy + clean;
  std::vector<double> pass(R, 1.0), applicable(R), lhs(R), rhs(R), resid(R), signs(R, 1.0);
  par::parallel_for(R, [&](long long r) {
    bool is_noisy = r < noisy;
    uint64_t seed = trial_seed(cfg, res.check, is_noisy ? 1 : 2,
                               static_cast<uint64_t>(is_noisy ? r : r - noisy));
    LassoProblem prob = make_lasso_problem(
        cfg.ensemble, cfg.n, o.lasso_s, o.u0_magnitude,
        is_noisy ? o.noise_sd : 0.0, is_noisy ? 0.0 : o.noiseless_lambda,
        o.lambda_rule, seed);
    LassoFit fit = lasso_fit(prob);
    resid[r] = fit.subgrad_residual;
    signs[r] = fit.sign_consistent ? 1.0 : 0.0;
    if (prob.lambda <= prob.lambda0) {
      applicable[r] = 0.0;
      return;
    }
    double l = (prob.lambda + prob.lambda0) / (prob.lambda - prob.lambda0);
    ConstantResult compat =
        compat_constant(prob.design.gram, ConeSpec{prob.S, l, NormMode::l1_on_S});
    OracleInequalityRecord rec = oracle_inequality_check(prob, fit, compat);
    applicable[r] = rec.applicable ? 1.0 : 0.0;
    lhs[r] = rec.lhs;
    rhs[r] = rec.rhs;
    pass[r] = rec.pass ? 1.0 : 0.0;
  });
  res.rows.resize(R);
  for (long long r = 0; r < R; ++r) {
    res.rows[r].trial = r;
    metric(res.rows[r], "noisy", r < noisy ? 1.0 : 0.0);
    metric(res.rows[r], "applicable", applicable[r]);
    metric(res.rows[r], "lhs", lhs[r]);
    metric(res.rows[r], "rhs", rhs[r]);
    metric(res.rows[r], "pass", pass[r]);
    metric(res.rows[r], "subgrad_residual", resid[r]);
  }
  double n_applicable = 0.0, n_pass = 0.0, max_resid = 0.0, sign_bad = 0.0;
  for (long long r = 0; r < R; ++r) {
    n_applicable += applicable[r];
    if (applicable[r] > 0.0) n_pass += pass[r];
    max_resid = std::max(max_resid, resid[r]);
    sign_bad += 1.0 - signs[r];
  }
  put(res, "trials", static_cast<double>(R));
  put(res, "applicable", n_applicable);
  put(res, "pass_rate",
      n_applicable > 0.0 ? n_pass / n_applicable : 1.0);
  put(res, "max_subgrad_residual", max_resid);
  put(res, "sign_inconsistencies", sign_bad);
  res.pass = n_pass == n_applicable && max_resid <= 1e-7 && sign_bad == 0.0;
  return res;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::string> known_checks() {
  return {"lower_bound_thm31", "phi_kappa_sandwich", "transfer_principle",
          "normalized_floor",  "sigma_tails",        "moment_bounds",
          "uniform_deviation", "lasso_oracle"};
}

double rate_gate(double target, long long trials) {
  double t = std::min(std::max(target, 0.0), 1.0);
  return target +
         3.0 * std::sqrt(t * (1.0 - t) / static_cast<double>(std::max<long long>(trials, 1)));
}

CheckResult run_check(const std::string& name, const ExperimentConfig& cfg) {
  CheckResult res;
  if (name == "lower_bound_thm31") res = check_lower_bound_thm31(cfg);
  else if (name == "phi_kappa_sandwich") res = check_phi_kappa_sandwich(cfg);
  else if (name == "transfer_principle") res = check_transfer_principle(cfg);
  else if (name == "normalized_floor") res = check_normalized_floor(cfg);
  else if (name == "sigma_tails") res = check_sigma_tails(cfg);
  else if (name == "moment_bounds") res = check_moment_bounds(cfg);
  else if (name == "uniform_deviation") res = check_uniform_deviation(cfg);
  else if (name == "lasso_oracle") res = check_lasso_oracle(cfg);
  else throw std::invalid_argument("unknown check: " + name);
  res.experiment = cfg.name;
  return res;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  for (const auto& name : cfg.checks) {
    auto t0 = std::chrono::steady_clock::now();
    CheckResult res = run_check(name, cfg);
    auto t1 = std::chrono::steady_clock::now();
    res.elapsed_seconds = std::chrono::duration<double>(t1 - t0).count();
    rep.all_pass = rep.all_pass && res.pass;
    rep.checks.push_back(std::move(res));
  }
  return rep;
}

ExperimentReport run_experiments(const std::vector<ExperimentConfig>& cfgs) {
  ExperimentReport rep;
  for (const auto& cfg : cfgs) {
    ExperimentReport one = run_experiment(cfg);
    rep.all_pass = rep.all_pass && one.all_pass;
    for (auto& c : one.checks) rep.checks.push_back(std::move(c));
  }
  return rep;
}

}  // namespace isoquad
