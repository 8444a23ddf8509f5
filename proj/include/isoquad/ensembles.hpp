#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isoquad/matrix.hpp"

namespace isoquad {

enum class Variant { gaussian, rademacher, laplace, student_t, sem_dag, sem_arch };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);
bool is_sem(Variant v);

// Row-distribution description. sigma0 with dim 0 means identity; for SEM
// variants the population covariance is derived from (beta, omega) and
// sigma0 must stay empty. beta is p x p row-major, strictly upper triangular
// (beta[k*p+j] is the coefficient of node k in the equation of node j > k).
struct EnsembleSpec {
  Variant variant = Variant::gaussian;
  int p = 1;
  double m = 4.0;  // isotropy order used when reporting constants
  SymMatrix sigma0;
  std::vector<double> beta;
  std::vector<double> omega;
  double nu = 0.0;
  double arch_gain = 0.0;
};

void validate(const EnsembleSpec& spec);

// Analytically known constants; a field stays absent when the variant does
// not admit the claim, never guessed.
struct EnsembleConstants {
  double m = 0.0;
  std::optional<double> C_m;
  std::optional<double> Ctilde_m;
  std::optional<double> sigma_X;
  std::optional<double> K_X;
  std::optional<double> sub_gaussian_C;
  std::optional<double> mu_m;
};

struct DesignSample {
  int n = 0, p = 0;
  std::vector<double> X;  // n x p row-major
  Vector sigma_hat_sq;
  SymMatrix gram;
  SymMatrix gram_normalized;
};

// (E|Z|^m)^{1/m} for standard normal Z, m >= 1.
double gaussian_abs_moment_root(double m);

EnsembleConstants ensemble_constants(const EnsembleSpec& spec);

SymMatrix population_covariance(const EnsembleSpec& spec);

// n iid rows; bit-identical output for equal (spec, n, seed).
DesignSample sample(const EnsembleSpec& spec, int n, uint64_t seed);

// One draw of W = eps^T X / n with fresh Rademacher signs.
Vector rademacher_average(const DesignSample& sample, uint64_t seed);

// Recursive L_m bound on the innovation scales: mu_m >= max_j ||V_j||_m.
double sem_mu_m(const EnsembleSpec& spec, double m);

}  // namespace isoquad
