#include "isoquad/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "isoquad/linalg.hpp"
#include "isoquad/rng.hpp"

namespace isoquad {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::gaussian: return "gaussian";
    case Variant::rademacher: return "rademacher";
    case Variant::laplace: return "laplace";
    case Variant::student_t: return "student_t";
    case Variant::sem_dag: return "sem_dag";
    case Variant::sem_arch: return "sem_arch";
  }
  throw std::logic_error("variant_name: unreachable");
}

Variant variant_from_name(const std::string& name) {
  if (name == "gaussian") return Variant::gaussian;
  if (name == "rademacher") return Variant::rademacher;
  if (name == "laplace") return Variant::laplace;
  if (name == "student_t") return Variant::student_t;
  if (name == "sem_dag") return Variant::sem_dag;
  if (name == "sem_arch") return Variant::sem_arch;
  throw std::invalid_argument("unknown ensemble variant '" + name + "'");
}

bool is_sem(Variant v) { return v == Variant::sem_dag || v == Variant::sem_arch; }

namespace {

bool identity_sigma0(const EnsembleSpec& spec) {
  if (spec.sigma0.empty()) return true;
  int p = spec.sigma0.dim();
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (spec.sigma0(i, j) != (i == j ? 1.0 : 0.0)) return false;
  return true;
}

bool diagonal_sigma0(const EnsembleSpec& spec) {
  if (spec.sigma0.empty()) return true;
  int p = spec.sigma0.dim();
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (i != j && spec.sigma0(i, j) != 0.0) return false;
  return true;
}

double max_root_diag(const SymMatrix& s, int p) {
  if (s.empty()) return 1.0;
  double d = 0.0;
  for (int i = 0; i < p; ++i) d = std::max(d, s(i, i));
  return std::sqrt(d);
}

}  // namespace

void validate(const EnsembleSpec& spec) {
  if (spec.p < 1) throw std::invalid_argument("ensemble: p must be >= 1");
  if (!(spec.m > 2.0)) throw std::invalid_argument("ensemble: isotropy order m must be > 2");
  size_t pp = static_cast<size_t>(spec.p) * spec.p;
  if (is_sem(spec.variant)) {
    if (!spec.sigma0.empty())
      throw std::invalid_argument("ensemble: sigma0 is derived for sem variants; leave it empty");
    if (!spec.beta.empty() && spec.beta.size() != pp)
      throw std::invalid_argument("ensemble: beta must be p*p row-major");
    for (int k = 0; k < spec.p && !spec.beta.empty(); ++k)
      for (int j = 0; j <= k; ++j)
        if (spec.beta[static_cast<size_t>(k) * spec.p + j] != 0.0)
          throw std::invalid_argument("ensemble: beta must be strictly upper triangular");
    if (!spec.omega.empty()) {
      if (static_cast<int>(spec.omega.size()) != spec.p)
        throw std::invalid_argument("ensemble: omega must have length p");
      for (double w : spec.omega)
        if (!(w > 0.0)) throw std::invalid_argument("ensemble: omega entries must be positive");
    }
    if (spec.arch_gain < 0.0) throw std::invalid_argument("ensemble: arch_gain must be >= 0");
    if (spec.variant == Variant::sem_dag && spec.arch_gain != 0.0)
      throw std::invalid_argument("ensemble: arch_gain only applies to sem_arch");
  } else {
    if (!spec.beta.empty() || !spec.omega.empty() || spec.arch_gain != 0.0)
      throw std::invalid_argument("ensemble: beta/omega/arch_gain only apply to sem variants");
    if (!spec.sigma0.empty()) {
      if (spec.sigma0.dim() != spec.p)
        throw std::invalid_argument("ensemble: sigma0 dimension must equal p");
      if (!cholesky(spec.sigma0).success)
        throw std::invalid_argument("ensemble: sigma0 must be positive definite");
    }
    if (spec.variant == Variant::student_t && !(spec.nu > 2.0))
      throw std::invalid_argument("ensemble: student_t requires nu > 2");
    if (spec.variant != Variant::student_t && spec.nu != 0.0)
      throw std::invalid_argument("ensemble: nu only applies to student_t");
  }
}

double gaussian_abs_moment_root(double m) {
  if (m < 1.0) throw std::invalid_argument("gaussian_abs_moment_root: m must be >= 1");
  // (E|Z|^m)^{1/m} = (2^{m/2} Gamma((m+1)/2) / sqrt(pi))^{1/m}
  double log_moment = 0.5 * m * std::log(2.0) + std::lgamma(0.5 * (m + 1.0)) -
                      0.5 * std::log(3.14159265358979323846);
  return std::exp(log_moment / m);
}

SymMatrix population_covariance(const EnsembleSpec& spec) {
  validate(spec);
  int p = spec.p;
  if (!is_sem(spec.variant)) return spec.sigma0.empty() ? SymMatrix::identity(p) : spec.sigma0;
  // M = (I - B)^{-1} by forward substitution; Sigma0 = M^T diag(omega^2) M
  std::vector<double> M(static_cast<size_t>(p) * p, 0.0);
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k <= j; ++k) {
      double v = (k == j) ? 1.0 : 0.0;
      for (int l = k; l < j; ++l)
        if (!spec.beta.empty())
          v += M[static_cast<size_t>(k) * p + l] * spec.beta[static_cast<size_t>(l) * p + j];
      M[static_cast<size_t>(k) * p + j] = v;
    }
  }
  std::vector<double> raw(static_cast<size_t>(p) * p, 0.0);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      Accum acc;
      for (int k = 0; k <= std::min(i, j); ++k) {
        double w = spec.omega.empty() ? 1.0 : spec.omega[k];
        acc.add(M[static_cast<size_t>(k) * p + i] * w * w * M[static_cast<size_t>(k) * p + j]);
      }
      raw[static_cast<size_t>(i) * p + j] = acc.value();
    }
  return SymMatrix(p, raw);
}

double sem_mu_m(const EnsembleSpec& spec, double m) {
  if (!is_sem(spec.variant)) throw std::invalid_argument("sem_mu_m: sem variants only");
  validate(spec);
  int p = spec.p;
  SymMatrix s0 = population_covariance(spec);
  double g = spec.variant == Variant::sem_arch ? spec.arch_gain : 0.0;
  double cm = gaussian_abs_moment_root(m);
  // a_j bounds ||X_{0,j}||_m, v_j bounds ||V_j||_m; triangle inequality down
  // the DAG with ||sqrt(1 + g X^2)||_m <= sqrt(1 + g ||X||_m^2).
  Vector a(p, 0.0), v(p, 0.0);
  double mu = 0.0;
  for (int j = 0; j < p; ++j) {
    double w = spec.omega.empty() ? 1.0 : spec.omega[j];
    double denom = j >= 1 ? std::sqrt(1.0 + g * s0(j - 1, j - 1)) : 1.0;
    double num = j >= 1 ? std::sqrt(1.0 + g * a[j - 1] * a[j - 1]) : 1.0;
    v[j] = w * num / denom;
    Accum acc;
    for (int k = 0; k < j; ++k)
      if (!spec.beta.empty())
        acc.add(std::fabs(spec.beta[static_cast<size_t>(k) * p + j]) * a[k]);
    a[j] = acc.value() + v[j] * cm;
    mu = std::max(mu, v[j]);
  }
  return mu;
}

EnsembleConstants ensemble_constants(const EnsembleSpec& spec) {
  validate(spec);
  EnsembleConstants c;
  c.m = spec.m;
  const double sqrt2 = std::sqrt(2.0);
  switch (spec.variant) {
    case Variant::gaussian: {
      double d = max_root_diag(spec.sigma0, spec.p);
      c.C_m = c.Ctilde_m = gaussian_abs_moment_root(spec.m);
      c.sigma_X = d;
      c.K_X = sqrt2 * d;
      c.sub_gaussian_C = d;
      break;
    }
    case Variant::rademacher: {
      // Khintchine: directional moments dominated by the Gaussian ones for
      // m >= 3; below 3 fall back to the Bernstein moment route.
      c.Ctilde_m = spec.m >= 3.0 ? gaussian_abs_moment_root(spec.m)
                                 : std::sqrt(2.0 * spec.m) + spec.m;
      c.C_m = c.Ctilde_m;
      if (identity_sigma0(spec)) {
        c.sigma_X = 1.0;
        c.K_X = 1.0;
        c.sub_gaussian_C = 1.0;
      } else {
        double d = max_root_diag(spec.sigma0, spec.p);
        c.sigma_X = d;
        c.K_X = sqrt2 * d;
        c.sub_gaussian_C = d;
      }
      break;
    }
    case Variant::laplace: {
      // unit-variance Laplace entries: E|Z|^k = k! 2^{-k/2} exactly
      c.Ctilde_m = std::sqrt(2.0 * spec.m) + spec.m / sqrt2;
      c.C_m = c.Ctilde_m;
      if (diagonal_sigma0(spec)) {
        double d = max_root_diag(spec.sigma0, spec.p);
        c.sigma_X = d;
        c.K_X = d / sqrt2;
      }
      break;
    }
    case Variant::student_t:
      // heavy tails: no isotropy or Bernstein constant is claimed
      break;
    case Variant::sem_dag: {
      SymMatrix s0 = population_covariance(spec);
      double d = max_root_diag(s0, spec.p);
      c.C_m = c.Ctilde_m = gaussian_abs_moment_root(spec.m);
      c.sigma_X = d;
      c.K_X = sqrt2 * d;
      c.sub_gaussian_C = d;
      c.mu_m = sem_mu_m(spec, spec.m);
      break;
    }
    case Variant::sem_arch:
      // conditionally Gaussian with unbounded predictable scale: only the
      // martingale moment bound mu_m is claimed
      c.mu_m = sem_mu_m(spec, spec.m);
      break;
  }
  return c;
}

namespace {

struct Mixer {
  bool identity = true;
  int p = 0;
  std::vector<double> lower;  // cholesky factor when !identity

  void apply(Vector& row) const {
    if (identity) return;
    Vector out(p, 0.0);
    for (int j = 0; j < p; ++j) {
      Accum acc;
      for (int k = 0; k <= j; ++k) acc.add(lower[static_cast<size_t>(j) * p + k] * row[k]);
      out[j] = acc.value();
    }
    row = out;
  }
};

Mixer make_mixer(const EnsembleSpec& spec) {
  Mixer mix;
  mix.p = spec.p;
  if (identity_sigma0(spec)) return mix;
  auto ch = cholesky(spec.sigma0);
  if (!ch.success)
    throw std::invalid_argument("ensemble: sigma0 must be positive definite (pivot " +
                                std::to_string(ch.pivot_index) + ")");
  mix.identity = false;
  mix.lower = std::move(ch.lower);
  return mix;
}

}  // namespace

DesignSample sample(const EnsembleSpec& spec, int n, uint64_t seed) {
  validate(spec);
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  int p = spec.p;
  DesignSample out;
  out.n = n;
  out.p = p;
  out.X.assign(static_cast<size_t>(n) * p, 0.0);
  SplitRng rng(seed, 0x64657369676eULL);  // "design" stream

  if (!is_sem(spec.variant)) {
    Mixer mix = make_mixer(spec);
    double t_scale = spec.variant == Variant::student_t
                         ? std::sqrt((spec.nu - 2.0) / spec.nu)
                         : 1.0;
    for (int i = 0; i < n; ++i) {
      SplitRng row_rng = rng.fork(static_cast<uint64_t>(i));
      Vector row(p);
      for (int j = 0; j < p; ++j) {
        switch (spec.variant) {
          case Variant::gaussian: row[j] = row_rng.next_gaussian(); break;
          case Variant::rademacher: row[j] = static_cast<double>(row_rng.next_sign()); break;
          case Variant::laplace: row[j] = row_rng.next_laplace(); break;
          case Variant::student_t: row[j] = row_rng.next_student_t(spec.nu) * t_scale; break;
          default: break;
        }
      }
      mix.apply(row);
      for (int j = 0; j < p; ++j) out.X[static_cast<size_t>(i) * p + j] = row[j];
    }
  } else {
    SymMatrix s0 = population_covariance(spec);
    double g = spec.variant == Variant::sem_arch ? spec.arch_gain : 0.0;
    for (int i = 0; i < n; ++i) {
      SplitRng row_rng = rng.fork(static_cast<uint64_t>(i));
      double* row = out.X.data() + static_cast<size_t>(i) * p;
      for (int j = 0; j < p; ++j) {
        double w = spec.omega.empty() ? 1.0 : spec.omega[j];
        double vj = w;
        if (g > 0.0 && j >= 1) {
          double x_prev = row[j - 1];
          vj = w * std::sqrt(1.0 + g * x_prev * x_prev) /
               std::sqrt(1.0 + g * s0(j - 1, j - 1));
        }
        Accum acc;
        for (int k = 0; k < j; ++k)
          if (!spec.beta.empty())
            acc.add(row[k] * spec.beta[static_cast<size_t>(k) * p + j]);
        row[j] = acc.value() + vj * row_rng.next_gaussian();
      }
    }
  }

  out.gram = gram_parallel(out.X, n, p);
  out.sigma_hat_sq.resize(p);
  for (int j = 0; j < p; ++j) out.sigma_hat_sq[j] = out.gram(j, j);
  out.gram_normalized = normalized_gram(out.gram);
  return out;
}

Vector rademacher_average(const DesignSample& sample, uint64_t seed) {
  SplitRng rng(seed, 0x7261646dULL);  // "radm" stream
  std::vector<double> eps(sample.n);
  for (int i = 0; i < sample.n; ++i) eps[i] = static_cast<double>(rng.next_sign());
  Vector w(sample.p);
  for (int j = 0; j < sample.p; ++j) {
    Accum acc;
    for (int i = 0; i < sample.n; ++i)
      acc.add(eps[i] * sample.X[static_cast<size_t>(i) * sample.p + j]);
    w[j] = acc.value() / sample.n;
  }
  return w;
}

}  // namespace isoquad
