#include "isoquad/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace isoquad {

namespace {

double as_d(long long v) { return static_cast<double>(v); }

void push(BoundReport& r, const std::string& k, double v) { r.parts.emplace_back(k, v); }

double resolved_delta_n(const BoundParams& q) {
  return q.delta_n ? *q.delta_n : eval_delta_n(q.sigma_X, q.K_X, q.p, q.n);
}

// margin kernel shared by the plain and the log p localized lower bounds
double lower_margin_kernel(const BoundParams& q, double first_term) {
  double e = (q.m - 2.0) / (q.m - 1.0);
  double d = eval_Dm(q.m, q.C_m);
  return d * std::pow(first_term + std::sqrt(2.0 * q.t / as_d(q.n)), e) +
         (8.0 * d * d / 3.0) * std::pow(q.t / as_d(q.n), e);
}

double poly_c1(const BoundParams& q) { return 2.0 * (1.0 + q.c0_poly) * (q.K_X + q.sigma_X); }

}  // namespace

double eval_Dm(double m, double C_m) {
  if (!(m > 2.0)) throw std::domain_error("eval_Dm: m must be > 2 (pole at m = 2)");
  if (!(C_m > 0.0)) throw std::domain_error("eval_Dm: C_m must be positive");
  return std::pow(2.0 * C_m, m / (m - 1.0)) * (m - 1.0) / (m - 2.0);
}

double eval_delta_n(double sigma_X, double K_X, long long p, long long n) {
  if (p < 1 || n < 1) throw std::domain_error("eval_delta_n: p and n must be >= 1");
  double lg = std::log(2.0 * as_d(p));
  return sigma_X * std::sqrt(2.0 * lg / as_d(n)) + K_X * lg / as_d(n);
}

BoundReport eval_lower_margin(const BoundParams& q) {
  BoundReport r;
  r.name = "lower_margin";
  double dn = resolved_delta_n(q);
  r.value = lower_margin_kernel(q, 16.0 * q.M * dn);
  r.void_flag = r.value >= 1.0;
  push(r, "delta_n", dn);
  push(r, "D_m", eval_Dm(q.m, q.C_m));
  if (r.void_flag) r.flags.push_back("void: margin >= 1");
  return r;
}

BoundReport eval_lower_margin_p(const BoundParams& q) {
  BoundReport r;
  r.name = "lower_margin_p";
  r.value = lower_margin_kernel(q, 16.0 * std::sqrt(as_d(q.p) / as_d(q.n)));
  r.void_flag = r.value >= 1.0;
  push(r, "D_m", eval_Dm(q.m, q.C_m));
  if (r.void_flag) r.flags.push_back("void: margin >= 1");
  return r;
}

BoundReport eval_subgaussian_lower(const BoundParams& q) {
  BoundReport r;
  r.name = "subgaussian_lower";
  double dpn = q.C * std::sqrt(2.0 * std::log(2.0 * as_d(q.p)) / as_d(q.n));
  double b = 16.0 * std::min(q.M * dpn, std::sqrt(as_d(q.p) / as_d(q.n))) +
             std::sqrt(2.0 * q.t / as_d(q.n));
  if (!(q.C > b))
    throw std::domain_error("eval_subgaussian_lower: vacuous regime, C = " +
                            std::to_string(q.C) + " <= b = " + std::to_string(b));
  double lg = std::log(q.C / b);
  r.value = std::sqrt(2.0) * q.C * b * (1.0 + 2.0 * std::sqrt(2.0 * lg)) +
            16.0 * q.C * q.C * q.t * lg / (3.0 * as_d(q.n));
  r.void_flag = r.value >= 1.0;
  push(r, "b", b);
  push(r, "delta_n_prime", dpn);
  if (r.void_flag) r.flags.push_back("void: margin >= 1");
  return r;
}

BoundReport eval_EW_moment_bound(const BoundParams& q) {
  BoundReport r;
  r.name = "EW_moment_bound";
  double logp = std::log(as_d(q.p));
  double k0 = q.eta * logp;
  double c1 = q.c0_universal * q.kappa1 * std::sqrt(q.eta) *
              std::exp(2.0 * q.alpha - 1.0 + 1.0 / q.eta);
  r.value = c1 * std::sqrt(logp / as_d(q.n));
  push(r, "c1", c1);
  push(r, "k0", k0);
  if (logp <= 0.0 || q.eta < 2.0 / logp) r.flags.push_back("precondition: eta >= 2/log p fails");
  double need = std::pow(k0, std::max(2.0 * q.alpha - 1.0, 1.0));
  if (as_d(q.n) < need)
    r.flags.push_back("precondition: n >= k0^max(2a-1,1) fails");
  return r;
}

BoundReport eval_fourth_moment_bound(const BoundParams& q) {
  BoundReport r;
  r.name = "fourth_moment_bound";
  double c1 = poly_c1(q);
  double lhs = c1 * q.M * std::log(2.0 * as_d(q.p));
  double rhs = std::pow(as_d(q.p), q.c0_poly / 2.0);
  r.value = std::sqrt(2.0) * lhs;
  push(r, "c1", c1);
  push(r, "precondition_lhs", lhs);
  push(r, "precondition_rhs", rhs);
  if (lhs > rhs) r.flags.push_back("precondition: c1 M log(2p) <= p^(c0/2) fails");
  return r;
}

BoundReport eval_upper_margin(const BoundParams& q) {
  BoundReport r;
  r.name = "upper_margin";
  double tail = std::sqrt(2.0 * q.t / as_d(q.n));
  double main_branch = poly_c1(q) * (q.L + 1.0) * std::sqrt(as_d(q.s)) *
                       std::log(2.0 * as_d(q.p));
  push(r, "branch_m_le_4", main_branch * tail);
  if (q.m > 4.0) {
    double alt = q.C_m * q.C_m * std::sqrt(q.m / (2.0 * (q.m - 4.0)));
    push(r, "branch_m_gt_4", alt * tail);
    r.value = std::min(main_branch, alt) * tail;
    r.flags.push_back(alt < main_branch ? "branch: isotropy alternative"
                                        : "branch: Bernstein main");
  } else {
    r.value = main_branch * tail;
    r.flags.push_back("branch: m <= 4");
  }
  return r;
}

BoundReport eval_transfer_lower_margin(const BoundParams& q) {
  BoundReport r;
  r.name = "transfer_lower_margin";
  double e = (q.m - 2.0) / (q.m - 1.0);
  double d = eval_Dm(q.m, q.C_m);
  double logp = std::log(as_d(q.p));
  double k1 = 16.0 * q.M * (1.0 + std::sqrt(2.0 * logp)) / std::sqrt(as_d(q.n)) +
              std::sqrt(2.0 * q.t / as_d(q.n));
  double k2 = (q.t + q.M * q.M * logp) / as_d(q.n);
  double t1 = d * std::pow(k1, e);
  double t2 = (8.0 * d * d / 3.0) * std::pow(k2, e);
  r.value = t1 + t2;
  r.void_flag = r.value >= 1.0;
  push(r, "term1", t1);
  push(r, "term2", t2);
  push(r, "composite_lower", 1.0 - 3.0 * r.value - 2.0 * q.eps);
  if (r.void_flag) r.flags.push_back("void: margin >= 1");
  return r;
}

BoundReport eval_sigma_tail_gauss(const BoundParams& q) {
  BoundReport r;
  r.name = "sigma_tail_gauss";
  double lg = std::log(2.0 * as_d(q.p));
  double n = as_d(q.n);
  r.value = 8.0 * q.C * q.C *
            (std::sqrt(2.0 * lg / n) + std::sqrt(2.0 * q.t / n) + lg / n + q.t / n);
  return r;
}

BoundReport eval_sigma_tail_moments(const BoundParams& q) {
  BoundReport r;
  r.name = "sigma_tail_moments";
  double logp = std::log(as_d(q.p));
  double k0 = q.eta * logp;
  double c1 = q.c0_universal * std::exp(4.0 * q.alpha - 1.0 + 2.0 / q.eta) * q.kappa1 *
              q.kappa1 * std::pow(2.0, 2.0 * q.alpha + 1.0) * std::sqrt(q.eta / 2.0);
  r.value = 1.0 + c1 * std::pow(q.t, k0 > 0.0 ? 2.0 / k0 : 0.0) * std::sqrt(logp / as_d(q.n));
  push(r, "c1", c1);
  push(r, "k0", k0);
  if (q.alpha < 0.25) r.flags.push_back("precondition: alpha >= 1/4 fails");
  double need = std::pow(k0 / 2.0, std::max(4.0 * q.alpha - 1.0, 1.0));
  if (as_d(q.n) < need)
    r.flags.push_back("precondition: n >= (k0/2)^max(4a-1,1) fails");
  return r;
}

BoundReport eval_truncation_residual(const BoundParams& q) {
  BoundReport r;
  r.name = "truncation_residual";
  double n = as_d(q.n);
  double level = q.C * std::sqrt(2.0 * q.t + 2.0 * std::log(2.0 * as_d(q.p)) +
                                 2.0 * q.m * std::log(n) / (q.m - 2.0));
  double residual = q.Ctilde_m * q.Ctilde_m * std::exp(-q.t * (q.m - 2.0) / q.m) / n;
  r.value = level;
  push(r, "level", level);
  push(r, "residual", residual);
  return r;
}

BoundReport eval_uniform_deviation_bound(const BoundParams& q, double c1_universal) {
  BoundReport r;
  r.name = "uniform_deviation_bound";
  double n = as_d(q.n);
  double kern = 2.0 * q.t + 2.0 * std::log(2.0 * as_d(q.p)) +
                2.0 * q.m * std::log(n) / (q.m - 2.0);
  double logn = std::log(n);
  double fac = std::log(as_d(q.p)) * logn * logn * logn + q.t;
  double t1 = q.M * q.C * std::sqrt(kern * fac / n);
  double t2 = q.M * q.M * q.C * q.C * kern * fac / n;
  double t3 = q.Ctilde_m * q.Ctilde_m * std::exp(-q.t * (q.m - 2.0) / q.m) / n;
  r.value = c1_universal * (t1 + t2) + t3;
  push(r, "term1", t1);
  push(r, "term2", t2);
  push(r, "residual", t3);
  push(r, "c1", c1_universal);
  return r;
}

BoundReport eval_martingale_moment_bounds(const BoundParams& q) {
  BoundReport r;
  r.name = "martingale_moment_bounds";
  double m = q.m, m0 = q.m0, mu = q.mu_m, K = q.K;
  double sg_f0 = std::sqrt(2.0 * m) * mu;
  push(r, "subgaussian_F0", sg_f0);
  double bern_nr = sg_f0 + m * K;
  push(r, "bernstein_nonrandom", bern_nr);
  if (m0 > 2.0 && m0 < m) {
    double ratio = std::sqrt(2.0 * m / (m - m0));
    double gamma_kernel = 3.0 * m * std::tgamma(m0 / 2.0 + 1.0) / (m - m0);
    push(r, "subgaussian_general", ratio * std::pow(gamma_kernel, 1.0 / m0) * mu);
    push(r, "bernstein_F0", std::pow(2.0, 1.0 - 1.0 / m0) * bern_nr);
    // general predictable Bernstein case, printed-statement exponent m0/2+1
    push(r, "bernstein_general",
         ratio * std::pow(gamma_kernel, m0 / 2.0 + 1.0) * mu +
             std::pow(3.0 * std::tgamma(m0 + 1.0), 1.0 / m0) * K);
    r.flags.push_back("bernstein_general uses the printed-statement Gamma exponent");
  } else {
    throw std::invalid_argument("eval_martingale_moment_bounds: need 2 < m0 < m");
  }
  r.value = sg_f0;
  return r;
}

double transfer_floor_coefficient(const SymMatrix& A, int d) {
  if (d < 2) throw std::invalid_argument("transfer_floor_coefficient: d must be >= 2");
  if (d > A.dim()) throw std::invalid_argument("transfer_floor_coefficient: d exceeds p");
  for (int j = 0; j < A.dim(); ++j)
    if (A(j, j) < 0.0)
      throw std::invalid_argument("transfer_floor_coefficient: diagonal must be nonnegative");
  return -A.max_diag() / (d - 1.0);
}

double slack_L(double L, double Delta, double eps) {
  if (!(Delta >= 0.0 && Delta < 1.0))
    throw std::domain_error("slack_L: Delta must lie in [0, 1)");
  if (eps < 0.0) throw std::domain_error("slack_L: eps must be >= 0");
  return L * std::sqrt(1.0 + eps) / (1.0 - std::sqrt(Delta));
}

std::optional<long long> find_M_of_Delta(const BoundParams& q, double Delta) {
  if (!(Delta > 0.0 && Delta < 1.0))
    throw std::domain_error("find_M_of_Delta: Delta must lie in (0, 1)");
  auto margin_at = [&](long long m_sq) {
    BoundParams local = q;
    local.M = std::sqrt(static_cast<double>(m_sq));
    return eval_transfer_lower_margin(local).value;
  };
  if (q.p < 2) return std::nullopt;
  if (margin_at(2) > Delta) return std::nullopt;
  long long lo = 2, hi = q.p;  // margin is increasing in M
  if (margin_at(hi) <= Delta) return hi;
  while (hi - lo > 1) {
    long long mid = lo + (hi - lo) / 2;
    (margin_at(mid) <= Delta ? lo : hi) = mid;
  }
  return lo;
}

BoundReport eval_normalized_floor(const BoundParams& q, double kappa_star_sq, double M_sq) {
  if (!(M_sq >= 2.0)) throw std::domain_error("eval_normalized_floor: M^2 must be >= 2");
  BoundReport r;
  r.name = "normalized_floor";
  double correction = (q.L + 1.0) * (q.L + 1.0) * as_d(q.s) / (M_sq - 1.0);
  r.value = kappa_star_sq / (1.0 + q.eps) - correction;
  push(r, "correction", correction);
  push(r, "slack_L", slack_L(q.L, q.Delta, q.eps));
  return r;
}

std::vector<std::string> bound_names() {
  return {"Dm",
          "delta_n",
          "lower_margin",
          "lower_margin_p",
          "subgaussian_lower",
          "EW_moment_bound",
          "fourth_moment_bound",
          "upper_margin",
          "transfer_lower_margin",
          "sigma_tail_gauss",
          "sigma_tail_moments",
          "truncation_residual",
          "uniform_deviation_bound",
          "martingale_moment_bounds"};
}

BoundReport eval_bound_by_name(const std::string& name, const BoundParams& q,
                               double c1_universal) {
  if (name == "Dm") {
    BoundReport r;
    r.name = name;
    r.value = eval_Dm(q.m, q.C_m);
    return r;
  }
  if (name == "delta_n") {
    BoundReport r;
    r.name = name;
    r.value = eval_delta_n(q.sigma_X, q.K_X, q.p, q.n);
    return r;
  }
  if (name == "lower_margin") return eval_lower_margin(q);
  if (name == "lower_margin_p") return eval_lower_margin_p(q);
  if (name == "subgaussian_lower") return eval_subgaussian_lower(q);
  if (name == "EW_moment_bound") return eval_EW_moment_bound(q);
  if (name == "fourth_moment_bound") return eval_fourth_moment_bound(q);
  if (name == "upper_margin") return eval_upper_margin(q);
  if (name == "transfer_lower_margin") return eval_transfer_lower_margin(q);
  if (name == "sigma_tail_gauss") return eval_sigma_tail_gauss(q);
  if (name == "sigma_tail_moments") return eval_sigma_tail_moments(q);
  if (name == "truncation_residual") return eval_truncation_residual(q);
  if (name == "uniform_deviation_bound") return eval_uniform_deviation_bound(q, c1_universal);
  if (name == "martingale_moment_bounds") return eval_martingale_moment_bounds(q);
  throw std::invalid_argument("unknown bound '" + name + "'");
}

}  // namespace isoquad
