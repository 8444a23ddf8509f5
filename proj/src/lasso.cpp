#include "isoquad/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "isoquad/linalg.hpp"
#include "isoquad/rng.hpp"

namespace isoquad {

LassoProblem make_lasso_problem(const EnsembleSpec& spec, int n, int s, double magnitude,
                                double noise_sd, double lambda, double lambda_rule,
                                uint64_t seed) {
  if (s < 1 || s > spec.p) throw std::invalid_argument("lasso: need 1 <= s <= p");
  if (magnitude <= 0.0) throw std::invalid_argument("lasso: magnitude must be positive");
  if (noise_sd < 0.0) throw std::invalid_argument("lasso: noise_sd must be >= 0");
  LassoProblem prob;
  prob.design = sample(spec, n, seed);
  int p = spec.p;

  SplitRng rng(seed, 0x6c6173736fULL);
  SplitRng pick = rng.fork(1);
  std::vector<int> perm(p);
  for (int j = 0; j < p; ++j) perm[j] = j;
  for (int j = 0; j < s; ++j) {
    int k = j + static_cast<int>(pick.next_below(static_cast<uint64_t>(p - j)));
    std::swap(perm[j], perm[k]);
  }
  prob.S.assign(perm.begin(), perm.begin() + s);
  std::sort(prob.S.begin(), prob.S.end());
  prob.u0.assign(p, 0.0);
  for (int j : prob.S) prob.u0[j] = pick.next_sign() * magnitude;

  SplitRng noise = rng.fork(2);
  prob.xi.assign(n, 0.0);
  if (noise_sd > 0.0)
    for (int i = 0; i < n; ++i) prob.xi[i] = noise_sd * noise.next_gaussian();

  double lam0 = 0.0;
  for (int j = 0; j < p; ++j) {
    Accum acc;
    for (int i = 0; i < n; ++i)
      acc.add(prob.xi[i] * prob.design.X[static_cast<size_t>(i) * p + j]);
    lam0 = std::max(lam0, std::fabs(acc.value()) / n);
  }
  prob.lambda0 = lam0;
  if (lambda > 0.0) {
    prob.lambda = lambda;
  } else {
    if (lam0 <= 0.0)
      throw std::invalid_argument("lasso: noiseless problems must pass a positive lambda");
    prob.lambda = lambda_rule * lam0;
  }
  return prob;
}

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

}  // namespace

LassoFit lasso_fit(const LassoProblem& prob) {
  if (!(prob.lambda > 0.0)) throw std::invalid_argument("lasso_fit: lambda must be positive");
  int n = prob.design.n, p = prob.design.p;
  const std::vector<double>& X = prob.design.X;
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    Accum acc;
    acc.add(prob.xi[i]);
    for (int j : prob.S) acc.add(X[static_cast<size_t>(i) * p + j] * prob.u0[j]);
    y[i] = acc.value();
  }

  LassoFit fit;
  fit.u_hat.assign(p, 0.0);
  Vector r = y;  // residual y - X u
  const Vector& diag = prob.design.sigma_hat_sq;
  const int cap = 100000;
  double lam = prob.lambda;

  auto grads = [&](Vector& g) {
    for (int j = 0; j < p; ++j) {
      Accum acc;
      for (int i = 0; i < n; ++i) acc.add(X[static_cast<size_t>(i) * p + j] * r[i]);
      g[j] = acc.value() / n;
    }
  };
  auto kkt_residual = [&](const Vector& g) {
    double worst = 0.0;
    for (int j = 0; j < p; ++j) {
      double v = fit.u_hat[j] == 0.0 ? std::max(0.0, std::fabs(g[j]) - lam)
                                     : std::fabs(g[j] - lam * (fit.u_hat[j] > 0 ? 1.0 : -1.0));
      worst = std::max(worst, v);
    }
    return worst;
  };

  Vector g(p);
  fit.converged = false;
  for (fit.sweeps = 0; fit.sweeps < cap;) {
    double max_du = 0.0;
    for (int j = 0; j < p; ++j) {
      if (diag[j] <= 0.0) continue;
      Accum acc;
      for (int i = 0; i < n; ++i) acc.add(X[static_cast<size_t>(i) * p + j] * r[i]);
      double z = diag[j] * fit.u_hat[j] + acc.value() / n;
      double next = soft_threshold(z, lam) / diag[j];
      double du = next - fit.u_hat[j];
      if (du != 0.0) {
        for (int i = 0; i < n; ++i) r[i] -= X[static_cast<size_t>(i) * p + j] * du;
        fit.u_hat[j] = next;
        max_du = std::max(max_du, std::fabs(du));
      }
    }
    ++fit.sweeps;
    if (max_du < 1e-9) {
      grads(g);
      if (kkt_residual(g) <= 1e-8) {
        fit.converged = true;
        break;
      }
    }
  }
  grads(g);

  fit.subgrad_residual = 0.0;
  fit.sign_consistent = true;
  for (int j = 0; j < p; ++j) {
    fit.subgrad_residual = std::max(fit.subgrad_residual, std::max(0.0, std::fabs(g[j]) - lam));
    if (fit.u_hat[j] != 0.0 &&
        std::fabs(g[j] - lam * (fit.u_hat[j] > 0 ? 1.0 : -1.0)) > 1e-7)
      fit.sign_consistent = false;
  }

  Accum rss;
  for (int i = 0; i < n; ++i) rss.add(r[i] * r[i]);
  double l1 = 0.0;
  for (double v : fit.u_hat) l1 += std::fabs(v);
  fit.objective = rss.value() / n + 2.0 * lam * l1;

  // Fenchel dual D(theta) = theta'y - n ||theta||^2 / 4 over ||X'theta||_inf <= 2 lambda
  double xtr_inf = 0.0;
  for (int j = 0; j < p; ++j) xtr_inf = std::max(xtr_inf, std::fabs(g[j] * n));
  double scale = (2.0 / n) * (xtr_inf > lam * n ? lam * n / xtr_inf : 1.0);
  Accum ty, tt;
  for (int i = 0; i < n; ++i) {
    ty.add(scale * r[i] * y[i]);
    tt.add(scale * r[i] * scale * r[i]);
  }
  double dual = ty.value() - n * tt.value() / 4.0;
  fit.duality_gap = fit.objective - dual;
  return fit;
}

OracleInequalityRecord oracle_inequality_check(const LassoProblem& prob, const LassoFit& fit,
                                               const ConstantResult& compat) {
  OracleInequalityRecord rec;
  rec.lambda = prob.lambda;
  rec.lambda0 = prob.lambda0;
  if (!(prob.lambda > prob.lambda0)) {
    rec.reason = "lambda <= lambda0";
    return rec;
  }
  rec.applicable = true;
  rec.L = (prob.lambda + prob.lambda0) / (prob.lambda - prob.lambda0);
  rec.phi2 = compat.value;
  int n = prob.design.n, p = prob.design.p;
  Vector d(p);
  for (int j = 0; j < p; ++j) d[j] = fit.u_hat[j] - prob.u0[j];
  Accum acc;
  for (int i = 0; i < n; ++i) {
    Accum row;
    for (int j = 0; j < p; ++j)
      if (d[j] != 0.0) row.add(prob.design.X[static_cast<size_t>(i) * p + j] * d[j]);
    double v = row.value();
    acc.add(v * v);
  }
  rec.lhs = acc.value() / n;
  rec.vacuous = rec.phi2 <= 1e-10;
  double denom = std::max(rec.phi2, 1e-10);
  double lsum = prob.lambda + prob.lambda0;
  rec.rhs = lsum * lsum * static_cast<double>(prob.S.size()) / denom;
  rec.pass = rec.vacuous || rec.lhs <= rec.rhs * (1.0 + 1e-9) + 1e-12;
  return rec;
}

}  // namespace isoquad
