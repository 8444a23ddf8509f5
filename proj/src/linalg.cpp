#include "isoquad/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "isoquad/parallel.hpp"

namespace isoquad {

double dot(const double* a, const double* b, int n) {
  Accum acc;
  for (int i = 0; i < n; ++i) acc.add(a[i] * b[i]);
  return acc.value();
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  return dot(a.data(), b.data(), static_cast<int>(a.size()));
}

Vector matvec(const SymMatrix& a, const Vector& u) {
  int p = a.dim();
  if (static_cast<int>(u.size()) != p) throw std::invalid_argument("matvec: size mismatch");
  Vector out(p);
  for (int i = 0; i < p; ++i) out[i] = dot(a.data() + static_cast<size_t>(i) * p, u.data(), p);
  return out;
}

double quadratic_form(const SymMatrix& a, const Vector& u) {
  Vector au = matvec(a, u);
  return dot(au, u);
}

CholeskyResult cholesky(const SymMatrix& a) {
  int p = a.dim();
  CholeskyResult res;
  res.lower.assign(static_cast<size_t>(p) * p, 0.0);
  double tol = 1e-12 * std::max(a.max_diag(), 1e-300);
  auto L = [&](int i, int j) -> double& { return res.lower[static_cast<size_t>(i) * p + j]; };
  for (int j = 0; j < p; ++j) {
    Accum diag;
    diag.add(a(j, j));
    for (int k = 0; k < j; ++k) diag.add(-L(j, k) * L(j, k));
    double d = diag.value();
    if (d < tol) {
      res.pivot_index = j;
      return res;
    }
    L(j, j) = std::sqrt(d);
    for (int i = j + 1; i < p; ++i) {
      Accum off;
      off.add(a(i, j));
      for (int k = 0; k < j; ++k) off.add(-L(i, k) * L(j, k));
      L(i, j) = off.value() / L(j, j);
    }
  }
  res.success = true;
  return res;
}

namespace {

struct PowerOut {
  double rayleigh = 0.0;
  Vector v;
  bool converged = false;
  int iterations = 0;
};

void canonicalize_sign(Vector& v) {
  int arg = 0;
  double best = 0.0;
  for (size_t i = 0; i < v.size(); ++i)
    if (std::fabs(v[i]) > best) {
      best = std::fabs(v[i]);
      arg = static_cast<int>(i);
    }
  if (v[arg] < 0.0)
    for (double& x : v) x = -x;
}

// Power iteration on B = shift I - A with shift outside the spectrum, so the
// dominant eigenvector of B is an extreme eigenvector of A. Sign-canonical
// iterates; stops on the Rayleigh residual ||A v - r v|| <= 1e-8 scale.
PowerOut power_iterate(const SymMatrix& a, double shift, Vector v, int cap, double scale) {
  int p = a.dim();
  double nv = std::sqrt(dot(v, v));
  if (nv <= 0.0)
    v.assign(p, 1.0 / std::sqrt(static_cast<double>(p)));
  else
    for (double& x : v) x /= nv;
  canonicalize_sign(v);
  PowerOut out;
  Vector au = matvec(a, v);
  double r = dot(au, v);
  double tol = 1e-8 * std::max(1.0, scale);
  for (int it = 0; it < cap; ++it) {
    out.iterations = it + 1;
    Accum res2;
    for (int i = 0; i < p; ++i) {
      double d = au[i] - r * v[i];
      res2.add(d * d);
    }
    if (std::sqrt(std::max(0.0, res2.value())) <= tol) {
      out.converged = true;
      break;
    }
    Vector bu(p);
    for (int i = 0; i < p; ++i) bu[i] = shift * v[i] - au[i];
    double nb = std::sqrt(dot(bu, bu));
    if (nb <= 1e-300) {
      out.converged = true;
      break;
    }
    for (double& x : bu) x /= nb;
    canonicalize_sign(bu);
    v = bu;
    au = matvec(a, v);
    r = dot(au, v);
  }
  out.rayleigh = r;
  out.v = v;
  return out;
}

Vector ones_start(int p) { return Vector(p, 1.0); }

Vector perturbed_start(int p) {
  Vector v(p);
  for (int i = 0; i < p; ++i) v[i] = 1.0 + 0.37 * std::cos(1.7 * (i + 1));
  return v;
}

}  // namespace

ExtremeEigen extreme_eigenvalues(const SymMatrix& a) {
  int p = a.dim();
  ExtremeEigen out;
  if (p == 0) return out;
  if (p == 1) {
    out.lambda_max = out.lambda_min = a(0, 0);
    out.v_max = out.v_min = {1.0};
    return out;
  }
  double lo = a(0, 0), hi = a(0, 0);
  for (int i = 0; i < p; ++i) {
    double r = 0.0;
    for (int j = 0; j < p; ++j)
      if (j != i) r += std::fabs(a(i, j));
    lo = std::min(lo, a(i, i) - r);
    hi = std::max(hi, a(i, i) + r);
  }
  int cap = static_cast<int>(10.0 * p * std::log(static_cast<double>(std::max(2, p)))) + 500;
  double scale = std::max({1.0, std::fabs(lo), std::fabs(hi)});

  auto run = [&](double shift) {
    PowerOut r = power_iterate(a, shift, ones_start(p), cap, scale);
    if (r.converged) return r;
    PowerOut r2 = power_iterate(a, shift, perturbed_start(p), cap, scale);
    r2.iterations += r.iterations;
    if (r2.converged || std::fabs(shift - r2.rayleigh) >= std::fabs(shift - r.rayleigh))
      return r2;
    r.iterations = r2.iterations;
    return r;
  };

  PowerOut top = run(lo - 1.0);  // dominant direction of (lo-1)I - A is argmax of A
  PowerOut bot = run(hi + 1.0);  // dominant direction of (hi+1)I - A is argmin of A
  out.lambda_max = top.rayleigh;
  out.v_max = top.v;
  out.lambda_min = bot.rayleigh;
  out.v_min = bot.v;
  out.converged = top.converged && bot.converged;
  out.iterations = top.iterations + bot.iterations;
  return out;
}

namespace {

SymMatrix gram_fill(const std::vector<double>& x, int n, int p, bool parallel) {
  if (x.size() != static_cast<size_t>(n) * p)
    throw std::invalid_argument("gram: size mismatch");
  std::vector<double> entries(static_cast<size_t>(p) * (p + 1) / 2, 0.0);
  auto body = [&](long long k) {
    // unrank k -> (i, j), i <= j, upper triangle in row order
    int i = 0;
    long long kk = k;
    long long row_len = p;
    while (kk >= row_len) {
      kk -= row_len;
      --row_len;
      ++i;
    }
    int j = i + static_cast<int>(kk);
    Accum acc;
    for (int r = 0; r < n; ++r)
      acc.add(x[static_cast<size_t>(r) * p + i] * x[static_cast<size_t>(r) * p + j]);
    entries[static_cast<size_t>(k)] = acc.value() / n;
  };
  long long total = static_cast<long long>(p) * (p + 1) / 2;
  if (parallel)
    par::parallel_for(total, body);
  else
    par::serial_for(total, body);
  SymMatrix g(p);
  long long k = 0;
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) g.set(i, j, entries[static_cast<size_t>(k++)]);
  return g;
}

}  // namespace

SymMatrix gram_serial(const std::vector<double>& x, int n, int p) {
  return gram_fill(x, n, p, false);
}

SymMatrix gram_parallel(const std::vector<double>& x, int n, int p) {
  return gram_fill(x, n, p, true);
}

SymMatrix normalized_gram(const SymMatrix& a) {
  int p = a.dim();
  Vector d(p);
  for (int i = 0; i < p; ++i) d[i] = a(i, i) > 0.0 ? 1.0 / std::sqrt(a(i, i)) : 0.0;
  SymMatrix r(p);
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) r.set(i, j, d[i] * d[j] * a(i, j));
  return r;
}

}  // namespace isoquad
