#include "isoquad/constants.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "isoquad/linalg.hpp"
#include "isoquad/parallel.hpp"
#include "isoquad/projections.hpp"
#include "isoquad/rng.hpp"

namespace isoquad {

std::string norm_mode_name(NormMode mode) {
  switch (mode) {
    case NormMode::l1_on_S: return "l1_on_S";
    case NormMode::l2_on_uS: return "l2_on_uS";
    case NormMode::l2_on_u: return "l2_on_u";
    case NormMode::adaptive: return "adaptive";
  }
  throw std::logic_error("norm_mode_name: unreachable");
}

NormMode norm_mode_from_name(const std::string& name) {
  if (name == "l1_on_S" || name == "compat" || name == "phi") return NormMode::l1_on_S;
  if (name == "l2_on_uS" || name == "re" || name == "kappa") return NormMode::l2_on_uS;
  if (name == "l2_on_u") return NormMode::l2_on_u;
  if (name == "adaptive" || name == "kappa_star") return NormMode::adaptive;
  throw std::invalid_argument("unknown norm mode '" + name + "'");
}

void validate(const ConeSpec& cone, int p) {
  if (cone.S.empty()) throw std::invalid_argument("cone: S must be nonempty");
  if (cone.L < 0.0) throw std::invalid_argument("cone: L must be >= 0");
  std::vector<int> sorted = cone.S;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] < 0 || sorted[i] >= p)
      throw std::invalid_argument("cone: index " + std::to_string(sorted[i] + 1) +
                                  " out of range 1.." + std::to_string(p));
    if (i > 0 && sorted[i] == sorted[i - 1])
      throw std::invalid_argument("cone: duplicate index " + std::to_string(sorted[i] + 1));
  }
}

namespace {

constexpr uint64_t kStartSeed = 0xC0FFEE5EEDULL;
constexpr uint64_t kWideSeed = 0x5EEDFACE0ULL;

struct ConeView {
  int p = 0;
  double L = 0.0;
  NormMode mode = NormMode::l2_on_uS;
  std::vector<int> S, comp;
};

ConeView make_view(int p, const ConeSpec& cone) {
  validate(cone, p);
  ConeView v;
  v.p = p;
  v.L = cone.L;
  v.mode = cone.mode;
  v.S = cone.S;
  std::sort(v.S.begin(), v.S.end());
  std::vector<char> in_s(p, 0);
  for (int j : v.S) in_s[j] = 1;
  for (int j = 0; j < p; ++j)
    if (!in_s[j]) v.comp.push_back(j);
  return v;
}

double l1_on(const Vector& u, const std::vector<int>& idx) {
  Accum a;
  for (int j : idx) a.add(std::fabs(u[j]));
  return a.value();
}

double l2sq_on(const Vector& u, const std::vector<int>& idx) {
  Accum a;
  for (int j : idx) a.add(u[j] * u[j]);
  return a.value();
}

struct Spectrum {
  double lam_max = 0.0;
  bool zero = false;
};

Spectrum require_psd(const SymMatrix& A) {
  ExtremeEigen e = extreme_eigenvalues(A);
  double scale = std::max(1.0, std::fabs(e.lambda_max));
  if (e.lambda_min < -1e-10 * scale)
    throw std::invalid_argument("matrix is not positive semidefinite (lambda_min " +
                                std::to_string(e.lambda_min) + ")");
  Spectrum s;
  s.lam_max = e.lambda_max;
  s.zero = e.lambda_max <= 1e-300;
  return s;
}

Vector trivial_minimizer(const ConeView& cv) {
  Vector u(cv.p, 0.0);
  u[cv.S[0]] = 1.0;
  return u;
}

// ---- compatibility constant: exact orthant decomposition --------------------

struct OrthantOut {
  double value = 0.0;
  Vector u;
  double pg_norm = 0.0;
};

OrthantOut solve_orthant(const SymMatrix& A, const ConeView& cv,
                         const std::vector<int>& signs, double lam_max) {
  int p = cv.p;
  int s = static_cast<int>(cv.S.size());
  double step = 1.0 / lam_max;
  double tol = 1e-7 * std::max(1.0, lam_max);
  int cap = 50 * p + 2000;
  Vector u(p, 0.0);
  for (int i = 0; i < s; ++i) u[cv.S[i]] = signs[i] / static_cast<double>(s);
  OrthantOut out;
  Vector su(s), cu(cv.comp.size());
  for (int it = 0; it < cap; ++it) {
    Vector au = matvec(A, u);
    for (int i = 0; i < s; ++i) su[i] = u[cv.S[i]] - step * au[cv.S[i]];
    Vector ps = project_signed_simplex(su, signs, 1.0);
    for (size_t i = 0; i < cv.comp.size(); ++i) cu[i] = u[cv.comp[i]] - step * au[cv.comp[i]];
    Vector pc = project_l1_ball(cu, cv.L);
    Accum move2;
    for (int i = 0; i < s; ++i) {
      double d = u[cv.S[i]] - ps[i];
      move2.add(d * d);
      u[cv.S[i]] = ps[i];
    }
    for (size_t i = 0; i < cv.comp.size(); ++i) {
      double d = u[cv.comp[i]] - pc[i];
      move2.add(d * d);
      u[cv.comp[i]] = pc[i];
    }
    out.pg_norm = std::sqrt(std::max(0.0, move2.value())) / step;
    if (out.pg_norm <= tol) break;
  }
  out.value = quadratic_form(A, u);
  out.u = std::move(u);
  return out;
}

}  // namespace

ConstantResult compat_constant(const SymMatrix& A, const ConeSpec& cone) {
  ConeView cv = make_view(A.dim(), cone);
  int s = static_cast<int>(cv.S.size());
  if (s > 20)
    throw std::invalid_argument("compat_constant: |S| = " + std::to_string(s) +
                                " exceeds the 2^s orthant enumeration cap of 20");
  Spectrum spec = require_psd(A);
  ConstantResult res;
  res.certificate = "orthant_exact";
  res.orthant_count = 1LL << s;
  if (spec.zero) {
    res.minimizer = trivial_minimizer(cv);
    return res;
  }
  std::vector<OrthantOut> slots(static_cast<size_t>(res.orthant_count));
  par::parallel_for(res.orthant_count, [&](long long k) {
    std::vector<int> signs(s);
    for (int b = 0; b < s; ++b) signs[b] = (k >> b) & 1 ? -1 : 1;
    slots[static_cast<size_t>(k)] = solve_orthant(A, cv, signs, spec.lam_max);
  });
  size_t best = 0;
  for (size_t k = 1; k < slots.size(); ++k)
    if (slots[k].value < slots[best].value) best = k;
  res.value = s * slots[best].value;
  res.minimizer = slots[best].u;
  res.gap_estimate = slots[best].pg_norm;
  return res;
}

namespace {

// ---- ell_2-normalized constants: multi-start projected ratio descent -------

// Rescales to the unit normalization of the mode and re-projects the
// off-support block onto its ell_1 budget; afterwards the ratio equals the
// plain quadratic form.
Vector renorm_project(Vector u, const ConeView& cv) {
  int s = static_cast<int>(cv.S.size());
  double ns2 = l2sq_on(u, cv.S);
  if (ns2 <= 1e-300) {
    std::fill(u.begin(), u.end(), 0.0);
    u[cv.S[0]] = 1.0;
    ns2 = 1.0;
  }
  double inv = 1.0 / std::sqrt(ns2);
  for (double& x : u) x *= inv;
  double budget = cv.mode == NormMode::adaptive
                      ? cv.L * std::sqrt(static_cast<double>(s))
                      : cv.L * l1_on(u, cv.S);
  if (!cv.comp.empty()) {
    Vector uc(cv.comp.size());
    for (size_t i = 0; i < cv.comp.size(); ++i) uc[i] = u[cv.comp[i]];
    Vector pc = project_l1_ball(uc, budget);
    for (size_t i = 0; i < cv.comp.size(); ++i) u[cv.comp[i]] = pc[i];
  }
  if (cv.mode == NormMode::l2_on_u) {
    double n2 = l2sq_on(u, cv.S) + l2sq_on(u, cv.comp);
    double w = 1.0 / std::sqrt(n2);
    for (double& x : u) x *= w;
  }
  return u;
}

struct StartOut {
  double value = 0.0;
  Vector u;
};

StartOut ratio_descent(const SymMatrix& A, const ConeView& cv, Vector u0, double lam_max,
                       int cap_per_stage) {
  Vector u = renorm_project(std::move(u0), cv);
  double r = quadratic_form(A, u);
  const double stages[3] = {1.0, 0.25, 0.0625};
  double base = 1.0 / std::max(lam_max, 1e-300);
  for (double stage : stages) {
    double gamma = stage * base;
    for (int it = 0; it < cap_per_stage && gamma > 1e-12 * base; ++it) {
      Vector au = matvec(A, u);
      Vector d(cv.p);
      if (cv.mode == NormMode::l2_on_u) {
        for (int j = 0; j < cv.p; ++j) d[j] = au[j] - r * u[j];
      } else {
        for (int j = 0; j < cv.p; ++j) d[j] = au[j];
        for (int j : cv.S) d[j] = au[j] - r * u[j];
      }
      Vector v(cv.p);
      for (int j = 0; j < cv.p; ++j) v[j] = u[j] - gamma * d[j];
      v = renorm_project(std::move(v), cv);
      double rv = quadratic_form(A, v);
      if (rv < r - 1e-15 * std::max(1.0, std::fabs(r))) {
        u = std::move(v);
        r = rv;
      } else {
        gamma *= 0.5;
      }
    }
  }
  return {r, std::move(u)};
}

std::vector<Vector> cone_starts(const ConeView& cv, int count, uint64_t seed) {
  std::vector<Vector> starts;
  int s = static_cast<int>(cv.S.size());
  for (int i = 0; i < s && static_cast<int>(starts.size()) < count; ++i)
    for (int sign : {1, -1}) {
      Vector u(cv.p, 0.0);
      u[cv.S[i]] = sign;
      starts.push_back(std::move(u));
      if (static_cast<int>(starts.size()) >= count) break;
    }
  SplitRng rng(seed, 0x636f6e65ULL);
  for (int k = static_cast<int>(starts.size()); k < count; ++k) {
    SplitRng r = rng.fork(static_cast<uint64_t>(k));
    Vector u(cv.p, 0.0);
    double ns2 = 0.0;
    for (int j : cv.S) {
      u[j] = r.next_gaussian();
      ns2 += u[j] * u[j];
    }
    if (ns2 <= 1e-300) {
      u[cv.S[0]] = 1.0;
      ns2 = 1.0;
    }
    double inv = 1.0 / std::sqrt(ns2);
    for (int j : cv.S) u[j] *= inv;
    if (!cv.comp.empty()) {
      double budget = cv.mode == NormMode::adaptive
                          ? cv.L * std::sqrt(static_cast<double>(s))
                          : cv.L * l1_on(u, cv.S);
      double frac = r.next_double();
      Accum raw1;
      for (int j : cv.comp) {
        u[j] = r.next_gaussian();
        raw1.add(std::fabs(u[j]));
      }
      double denom = raw1.value();
      double scale = denom > 0.0 ? frac * budget / denom : 0.0;
      for (int j : cv.comp) u[j] *= scale;
    }
    starts.push_back(std::move(u));
  }
  return starts;
}

// Convex off-support solve for a fixed on-support block already in u.
void comp_pgd(const SymMatrix& A, const ConeView& cv, Vector& u, double budget,
              double lam_max) {
  if (cv.comp.empty()) return;
  double step = 1.0 / lam_max;
  double tol = 1e-7 * std::max(1.0, lam_max);
  int cap = 50 * cv.p + 2000;
  Vector cu(cv.comp.size());
  for (size_t i = 0; i < cv.comp.size(); ++i) cu[i] = u[cv.comp[i]];
  cu = project_l1_ball(cu, budget);
  for (size_t i = 0; i < cv.comp.size(); ++i) u[cv.comp[i]] = cu[i];
  for (int it = 0; it < cap; ++it) {
    Vector au = matvec(A, u);
    for (size_t i = 0; i < cv.comp.size(); ++i) cu[i] = u[cv.comp[i]] - step * au[cv.comp[i]];
    Vector pc = project_l1_ball(cu, budget);
    double move = 0.0;
    for (size_t i = 0; i < cv.comp.size(); ++i) {
      move = std::max(move, std::fabs(u[cv.comp[i]] - pc[i]));
      u[cv.comp[i]] = pc[i];
    }
    if (move / step <= tol) break;
  }
}

ConstantResult multi_start_min(const SymMatrix& A, const ConeView& cv) {
  Spectrum spec = require_psd(A);
  ConstantResult res;
  res.certificate = "iterative";
  if (spec.zero) {
    res.minimizer = trivial_minimizer(cv);
    return res;
  }
  const int kStarts = 32;
  int cap = (50 * cv.p + 2000) / 3;
  std::vector<Vector> starts = cone_starts(cv, kStarts, kStartSeed);
  std::vector<StartOut> slots(starts.size());
  par::parallel_for(static_cast<long long>(starts.size()), [&](long long k) {
    slots[static_cast<size_t>(k)] = ratio_descent(A, cv, starts[static_cast<size_t>(k)],
                                                  spec.lam_max, cap);
  });

  // exploration wave: cheap descents from a wider net, full polish for the
  // leaders only; small problems get oracle-grade coverage for almost nothing
  bool small = cv.p <= 8;
  int wide_n = small ? 320 : 64;
  int wide_cap = small ? cap : cap / 4;
  std::vector<Vector> wide = cone_starts(cv, wide_n, kWideSeed);
  std::vector<StartOut> cheap(wide.size());
  par::parallel_for(static_cast<long long>(wide.size()), [&](long long k) {
    cheap[static_cast<size_t>(k)] = ratio_descent(A, cv, wide[static_cast<size_t>(k)],
                                                  spec.lam_max, wide_cap);
  });
  std::vector<size_t> order(cheap.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (cheap[a].value != cheap[b].value) return cheap[a].value < cheap[b].value;
    return a < b;
  });
  size_t leaders = std::min<size_t>(small ? 6 : 4, order.size());
  int polish_cap = 50 * cv.p + 2000;
  for (size_t i = 0; i < leaders; ++i)
    slots.push_back(ratio_descent(A, cv, cheap[order[i]].u, spec.lam_max, polish_cap));

  // s <= 2 cross-sections: for a fixed unit on-support block the off-support
  // problem is convex, so a dense direction grid plus shrinking refinement
  // reaches every basin deterministically (u and -u tie, so [0, pi) suffices)
  if (small && cv.S.size() <= 2 && cv.mode != NormMode::l2_on_u) {
    double sbudget = cv.L * std::sqrt(static_cast<double>(cv.S.size()));
    Vector warm(cv.p, 0.0);
    auto section = [&](double c0, double c1) {
      Vector u = warm;
      u[cv.S[0]] = c0;
      if (cv.S.size() == 2) u[cv.S[1]] = c1;
      double budget = cv.mode == NormMode::adaptive
                          ? sbudget
                          : cv.L * (std::fabs(c0) + std::fabs(c1));
      comp_pgd(A, cv, u, budget, spec.lam_max);
      return StartOut{quadratic_form(A, u), std::move(u)};
    };
    StartOut sec_best;
    if (cv.S.size() == 1) {
      sec_best = section(1.0, 0.0);
      warm = sec_best.u;
      StartOut neg = section(-1.0, 0.0);
      if (neg.value < sec_best.value) sec_best = std::move(neg);
    } else {
      const int kGrid = 96;
      const double kPi = 3.14159265358979323846;
      double th_best = 0.0;
      for (int k = 0; k < kGrid; ++k) {
        double th = kPi * k / kGrid;
        StartOut out = section(std::cos(th), std::sin(th));
        warm = out.u;
        if (k == 0 || out.value < sec_best.value) {
          sec_best = std::move(out);
          th_best = th;
        }
      }
      double width = kPi / kGrid;
      for (int round = 0; round < 6; ++round) {
        warm = sec_best.u;
        double lo = th_best - width;
        for (int k = 0; k <= 8; ++k) {
          double th = lo + 2.0 * width * k / 8.0;
          StartOut out = section(std::cos(th), std::sin(th));
          if (out.value < sec_best.value) {
            sec_best = std::move(out);
            th_best = th;
          }
        }
        width /= 4.0;
      }
    }
    slots.push_back(ratio_descent(A, cv, sec_best.u, spec.lam_max, polish_cap));
  }

  // the exact l1-normalized minimizer is feasible for every one of these
  // cones; a monotone descent from it keeps the result at or below that value
  if (cv.S.size() <= 4) {
    ConeSpec l1;
    l1.S = cv.S;
    l1.L = cv.L;
    l1.mode = NormMode::l1_on_S;
    ConstantResult w = compat_constant(A, l1);
    if (!w.minimizer.empty())
      slots.push_back(ratio_descent(A, cv, w.minimizer, spec.lam_max, cap));
  }

  size_t best = 0;
  std::vector<double> values(slots.size());
  for (size_t k = 0; k < slots.size(); ++k) {
    values[k] = slots[k].value;
    // ulp-level ties keep the earliest start: basis-vector starts come first
    // and evaluate without rounding, so representable optima return exactly
    if (values[k] < values[best] - 4e-16 * std::fabs(values[best])) best = k;
  }
  std::sort(values.begin(), values.end());
  StartOut inc{slots[best].value, slots[best].u};
  // fresh step ladders crawl active-boundary ridges further than one pass
  for (int r = 0; r < 2; ++r) {
    StartOut again = ratio_descent(A, cv, inc.u, spec.lam_max, polish_cap);
    if (again.value < inc.value) inc = std::move(again);
  }
  res.value = inc.value;
  res.minimizer = std::move(inc.u);
  res.gap_estimate = values.size() >= 3 ? values[2] - values[0]
                                        : values.back() - values.front();
  return res;
}

}  // namespace

ConstantResult restricted_eigenvalue(const SymMatrix& A, const ConeSpec& cone) {
  if (cone.mode != NormMode::l2_on_uS && cone.mode != NormMode::l2_on_u)
    throw std::invalid_argument("restricted_eigenvalue: mode must be l2_on_uS or l2_on_u");
  return multi_start_min(A, make_view(A.dim(), cone));
}

ConstantResult adaptive_re(const SymMatrix& A, const ConeSpec& cone) {
  if (cone.mode != NormMode::adaptive)
    throw std::invalid_argument("adaptive_re: mode must be adaptive");
  return multi_start_min(A, make_view(A.dim(), cone));
}

namespace {

// ---- constrained infimum over {u' Sigma0 u = 1, ||u||_1 <= M} ---------------

Vector repair_constrained(Vector u, const SymMatrix& Sigma0, double M) {
  int p = Sigma0.dim();
  for (int round = 0; round < 60; ++round) {
    double q0 = quadratic_form(Sigma0, u);
    if (q0 <= 1e-300) {
      std::fill(u.begin(), u.end(), 0.0);
      u[0] = 1.0 / std::sqrt(Sigma0(0, 0));
      q0 = 1.0;
    } else {
      double inv = 1.0 / std::sqrt(q0);
      for (double& x : u) x *= inv;
    }
    Accum l1;
    for (double x : u) l1.add(std::fabs(x));
    if (l1.value() <= M * (1.0 + 1e-12)) return u;
    u = project_l1_ball(u, M);
  }
  double q0 = quadratic_form(Sigma0, u);
  if (q0 > 1e-300) {
    double inv = 1.0 / std::sqrt(q0);
    for (double& x : u) x *= inv;
  }
  (void)p;
  return u;
}

StartOut constrained_descent(const SymMatrix& A, const SymMatrix& Sigma0, double M,
                             Vector u0, double lam_a, double lam_s, int cap_per_stage) {
  Vector u = repair_constrained(std::move(u0), Sigma0, M);
  double r = quadratic_form(A, u);
  const double stages[3] = {1.0, 0.25, 0.0625};
  for (double stage : stages) {
    double base = 1.0 / std::max(lam_a + lam_s * std::max(1.0, std::fabs(r)), 1e-300);
    double gamma = stage * base;
    for (int it = 0; it < cap_per_stage && gamma > 1e-12 * base; ++it) {
      Vector au = matvec(A, u);
      Vector su = matvec(Sigma0, u);
      Vector v(u.size());
      for (size_t j = 0; j < u.size(); ++j) v[j] = u[j] - gamma * (au[j] - r * su[j]);
      v = repair_constrained(std::move(v), Sigma0, M);
      double rv = quadratic_form(A, v) / quadratic_form(Sigma0, v);
      if (rv < r - 1e-15 * std::max(1.0, std::fabs(r))) {
        u = std::move(v);
        r = rv;
      } else {
        gamma *= 0.5;
      }
    }
  }
  return {r, std::move(u)};
}

std::vector<Vector> constrained_starts(const SymMatrix& Sigma0, int count, uint64_t seed) {
  int p = Sigma0.dim();
  std::vector<Vector> starts;
  for (int j = 0; j < p && static_cast<int>(starts.size()) < count; ++j)
    for (int sign : {1, -1}) {
      Vector u(p, 0.0);
      u[j] = sign / std::sqrt(Sigma0(j, j));
      starts.push_back(std::move(u));
      if (static_cast<int>(starts.size()) >= count) break;
    }
  SplitRng rng(seed, 0x696e66ULL);
  for (int k = static_cast<int>(starts.size()); k < count; ++k) {
    SplitRng r = rng.fork(static_cast<uint64_t>(k));
    Vector u(p);
    for (int j = 0; j < p; ++j) u[j] = r.next_gaussian();
    starts.push_back(std::move(u));
  }
  return starts;
}

}  // namespace

ConstantResult constrained_form_infimum(const SymMatrix& A, const SymMatrix& Sigma0, double M) {
  if (A.dim() != Sigma0.dim())
    throw std::invalid_argument("constrained_form_infimum: dimension mismatch");
  if (M < 1.0) throw std::invalid_argument("constrained_form_infimum: M must be >= 1");
  if (!cholesky(Sigma0).success)
    throw std::invalid_argument("constrained_form_infimum: Sigma0 must be positive definite");
  int p = A.dim();
  double lam_a = std::fabs(extreme_eigenvalues(A).lambda_max);
  double lam_s = std::fabs(extreme_eigenvalues(Sigma0).lambda_max);
  const int kStarts = 32;
  int cap = (50 * p + 2000) / 3;
  std::vector<Vector> starts = constrained_starts(Sigma0, kStarts, kStartSeed);
  std::vector<StartOut> slots(starts.size());
  par::parallel_for(static_cast<long long>(starts.size()), [&](long long k) {
    slots[static_cast<size_t>(k)] = constrained_descent(
        A, Sigma0, M, starts[static_cast<size_t>(k)], std::max(lam_a, 1e-300), lam_s, cap);
  });
  size_t best = 0;
  std::vector<double> values(slots.size());
  for (size_t k = 0; k < slots.size(); ++k) {
    values[k] = slots[k].value;
    // ulp-level ties keep the earliest start: basis-vector starts come first
    // and evaluate without rounding, so representable optima return exactly
    if (values[k] < values[best] - 4e-16 * std::fabs(values[best])) best = k;
  }
  std::sort(values.begin(), values.end());
  ConstantResult res;
  res.certificate = "iterative";
  res.value = slots[best].value;
  res.minimizer = slots[best].u;
  res.gap_estimate = values.size() >= 3 ? values[2] - values[0]
                                        : values.back() - values.front();
  return res;
}

bool null_space_check(const SymMatrix& A, const std::vector<int>& S) {
  ConeSpec cone;
  cone.S = S;
  cone.L = 1.0;
  cone.mode = NormMode::l1_on_S;
  return compat_constant(A, cone).value > 1e-8;
}

namespace {

Vector random_feasible(const ConeView& cv, SplitRng& r) {
  Vector u(cv.p, 0.0);
  int s = static_cast<int>(cv.S.size());
  if (cv.mode == NormMode::l1_on_S) {
    Accum l1;
    for (int j : cv.S) {
      u[j] = r.next_gaussian();
      l1.add(std::fabs(u[j]));
    }
    double denom = l1.value();
    if (denom <= 1e-300) {
      u[cv.S[0]] = 1.0;
    } else {
      for (int j : cv.S) u[j] /= denom;
    }
  } else {
    double ns2 = 0.0;
    for (int j : cv.S) {
      u[j] = r.next_gaussian();
      ns2 += u[j] * u[j];
    }
    if (ns2 <= 1e-300) {
      u[cv.S[0]] = 1.0;
      ns2 = 1.0;
    }
    double inv = 1.0 / std::sqrt(ns2);
    for (int j : cv.S) u[j] *= inv;
  }
  if (!cv.comp.empty()) {
    double budget = cv.mode == NormMode::adaptive
                        ? cv.L * std::sqrt(static_cast<double>(s))
                        : cv.L * l1_on(u, cv.S);
    double frac = r.next_double();
    Accum raw1;
    for (int j : cv.comp) {
      u[j] = r.next_gaussian();
      raw1.add(std::fabs(u[j]));
    }
    double denom = raw1.value();
    double scale = denom > 0.0 ? frac * budget / denom : 0.0;
    for (int j : cv.comp) u[j] *= scale;
  }
  if (cv.mode == NormMode::l2_on_u) {
    double n2 = l2sq_on(u, cv.S) + l2sq_on(u, cv.comp);
    double inv = 1.0 / std::sqrt(n2);
    for (double& x : u) x *= inv;
  }
  return u;
}

StartOut polish_point(const SymMatrix& A, const ConeView& cv, Vector u, double lam_max,
                      int cap) {
  if (cv.mode == NormMode::l1_on_S) {
    std::vector<int> signs(cv.S.size());
    for (size_t i = 0; i < cv.S.size(); ++i) signs[i] = u[cv.S[i]] < 0.0 ? -1 : 1;
    ConeView local = cv;
    OrthantOut o;
    {
      // run the orthant PGD from this sign pattern with a reduced cap
      int p = cv.p;
      int s = static_cast<int>(cv.S.size());
      double step = 1.0 / lam_max;
      Vector su(s), cu(cv.comp.size());
      for (int it = 0; it < cap; ++it) {
        Vector au = matvec(A, u);
        for (int i = 0; i < s; ++i) su[i] = u[local.S[i]] - step * au[local.S[i]];
        Vector ps = project_signed_simplex(su, signs, 1.0);
        for (size_t i = 0; i < cv.comp.size(); ++i)
          cu[i] = u[cv.comp[i]] - step * au[cv.comp[i]];
        Vector pc = project_l1_ball(cu, cv.L);
        double move = 0.0;
        for (int i = 0; i < s; ++i) {
          move = std::max(move, std::fabs(u[local.S[i]] - ps[i]));
          u[local.S[i]] = ps[i];
        }
        for (size_t i = 0; i < cv.comp.size(); ++i) {
          move = std::max(move, std::fabs(u[cv.comp[i]] - pc[i]));
          u[cv.comp[i]] = pc[i];
        }
        if (move / step <= 1e-7 * std::max(1.0, lam_max)) break;
      }
      (void)p;
    }
    return {quadratic_form(A, u), std::move(u)};
  }
  return ratio_descent(A, cv, std::move(u), lam_max, cap);
}

ConstantResult oracle_search(const SymMatrix& A, const ConeView& cv, int budget,
                             uint64_t seed) {
  Spectrum spec = require_psd(A);
  int s = static_cast<int>(cv.S.size());
  ConstantResult res;
  res.certificate = "oracle";
  if (spec.zero) {
    res.minimizer = trivial_minimizer(cv);
    if (cv.mode == NormMode::l1_on_S) res.value = 0.0;
    return res;
  }
  int full_cap = 50 * cv.p + 2000;
  int cheap_cap = full_cap / 4;

  std::vector<Vector> points;
  for (int i = 0; i < s; ++i)
    for (int sign : {1, -1}) {
      Vector u(cv.p, 0.0);
      u[cv.S[i]] = sign;
      points.push_back(std::move(u));
    }
  if (cv.mode == NormMode::l1_on_S && s <= 8) {
    for (long long k = 0; k < (1LL << s); ++k) {
      Vector u(cv.p, 0.0);
      for (int b = 0; b < s; ++b)
        u[cv.S[b]] = ((k >> b) & 1 ? -1.0 : 1.0) / static_cast<double>(s);
      points.push_back(std::move(u));
    }
  }
  SplitRng rng(seed, 0x6f7261636cULL);
  for (int k = 0; k < budget; ++k) {
    SplitRng r = rng.fork(static_cast<uint64_t>(k));
    points.push_back(random_feasible(cv, r));
  }

  std::vector<StartOut> cheap(points.size());
  par::parallel_for(static_cast<long long>(points.size()), [&](long long k) {
    cheap[static_cast<size_t>(k)] =
        polish_point(A, cv, points[static_cast<size_t>(k)], spec.lam_max, cheap_cap);
  });
  std::vector<size_t> order(cheap.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (cheap[a].value != cheap[b].value) return cheap[a].value < cheap[b].value;
    return a < b;
  });
  size_t finalists = std::min<size_t>(5, order.size());
  StartOut best = cheap[order[0]];
  for (size_t i = 0; i < finalists; ++i) {
    StartOut polished = polish_point(A, cv, cheap[order[i]].u, spec.lam_max, full_cap);
    if (polished.value < best.value) best = polished;
  }
  res.value = cv.mode == NormMode::l1_on_S ? s * best.value : best.value;
  res.minimizer = best.u;
  res.gap_estimate = 0.0;
  return res;
}

}  // namespace

ConstantResult oracle_minimum(const SymMatrix& A, const ConeSpec& cone, int budget,
                              uint64_t seed) {
  if (A.dim() > 8)
    throw std::invalid_argument("oracle_minimum: p > 8 refused (brute-force oracle)");
  return oracle_search(A, make_view(A.dim(), cone), budget, seed);
}

ConstantResult oracle_minimum(const SymMatrix& A, const SymMatrix& Sigma0, double M,
                              int budget, uint64_t seed) {
  if (A.dim() > 8)
    throw std::invalid_argument("oracle_minimum: p > 8 refused (brute-force oracle)");
  if (A.dim() != Sigma0.dim())
    throw std::invalid_argument("oracle_minimum: dimension mismatch");
  if (!cholesky(Sigma0).success)
    throw std::invalid_argument("oracle_minimum: Sigma0 must be positive definite");
  int p = A.dim();
  double lam_a = std::fabs(extreme_eigenvalues(A).lambda_max);
  double lam_s = std::fabs(extreme_eigenvalues(Sigma0).lambda_max);
  int full_cap = 50 * p + 2000;
  int cheap_cap = full_cap / 4;

  std::vector<Vector> points = constrained_starts(Sigma0, 2 * p, seed);
  SplitRng rng(seed, 0x6f7269ULL);
  for (int k = 0; k < budget; ++k) {
    SplitRng r = rng.fork(static_cast<uint64_t>(k));
    Vector u(p);
    for (int j = 0; j < p; ++j) u[j] = r.next_gaussian();
    points.push_back(std::move(u));
  }
  std::vector<StartOut> cheap(points.size());
  par::parallel_for(static_cast<long long>(points.size()), [&](long long k) {
    cheap[static_cast<size_t>(k)] =
        constrained_descent(A, Sigma0, M, points[static_cast<size_t>(k)],
                            std::max(lam_a, 1e-300), lam_s, cheap_cap);
  });
  std::vector<size_t> order(cheap.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (cheap[a].value != cheap[b].value) return cheap[a].value < cheap[b].value;
    return a < b;
  });
  size_t finalists = std::min<size_t>(5, order.size());
  StartOut best = cheap[order[0]];
  for (size_t i = 0; i < finalists; ++i) {
    StartOut polished = constrained_descent(A, Sigma0, M, cheap[order[i]].u,
                                            std::max(lam_a, 1e-300), lam_s, full_cap);
    if (polished.value < best.value) best = polished;
  }
  ConstantResult res;
  res.certificate = "oracle";
  res.value = best.value;
  res.minimizer = best.u;
  return res;
}

ConstantResult cone_constant(const SymMatrix& A, const ConeSpec& cone) {
  switch (cone.mode) {
    case NormMode::l1_on_S: return compat_constant(A, cone);
    case NormMode::l2_on_uS:
    case NormMode::l2_on_u: return restricted_eigenvalue(A, cone);
    case NormMode::adaptive: return adaptive_re(A, cone);
  }
  throw std::logic_error("cone_constant: unreachable");
}

}  // namespace isoquad
