#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "isoquad/matrix.hpp"

namespace isoquad {

// Scalar inputs shared by every closed-form evaluator. Unused fields are
// ignored by evaluators that do not reference them.
struct BoundParams {
  double m = 4.0;            // isotropy order, > 2
  double m0 = 3.0;           // intermediate order for the general predictable cases
  double C_m = 1.0;          // weak isotropy constant
  double Ctilde_m = 1.0;     // strong isotropy constant
  double C = 1.0;            // entrywise sub-Gaussian constant
  double sigma_X = 1.0;      // entry Bernstein scale
  double K_X = 1.0;          // entry Bernstein tail
  double kappa1 = 1.0;       // moment-growth level: ||X_{0,j}||_k <= kappa1 k^alpha
  double alpha = 0.5;
  double eta = 2.0;          // k0 = eta log p
  double c0_universal = 1.0; // unnumbered universal constant, caller-overridable
  double c0_poly = 1.0;      // polynomial-dimension constant, >= 1
  double M = 1.0;            // l1 radius, >= 1
  double t = 1.0;            // confidence parameter, > 0
  long long n = 1;
  long long p = 1;
  double L = 1.0;            // cone slack
  long long s = 1;           // support size
  double eps = 0.0;
  double Delta = 0.0;
  double mu_m = 1.0;         // predictable-scale moment bound
  double K = 0.0;            // conditional Bernstein scale
  std::optional<double> delta_n;  // overrides the computed delta_n when set
};

struct BoundReport {
  std::string name;
  double value = 0.0;
  bool void_flag = false;               // margin exceeds 1, bound vacuous
  std::vector<std::string> flags;       // validity notes, never silent
  std::vector<std::pair<std::string, double>> parts;  // labeled components
};

double eval_Dm(double m, double C_m);
double eval_delta_n(double sigma_X, double K_X, long long p, long long n);

BoundReport eval_lower_margin(const BoundParams& q);
BoundReport eval_lower_margin_p(const BoundParams& q);
BoundReport eval_subgaussian_lower(const BoundParams& q);
BoundReport eval_EW_moment_bound(const BoundParams& q);
BoundReport eval_fourth_moment_bound(const BoundParams& q);
BoundReport eval_upper_margin(const BoundParams& q);
BoundReport eval_transfer_lower_margin(const BoundParams& q);
BoundReport eval_sigma_tail_gauss(const BoundParams& q);
BoundReport eval_sigma_tail_moments(const BoundParams& q);
BoundReport eval_truncation_residual(const BoundParams& q);
BoundReport eval_uniform_deviation_bound(const BoundParams& q, double c1_universal);
BoundReport eval_martingale_moment_bounds(const BoundParams& q);

// Floor coefficient -max_j A_jj / (d-1); the floor itself is the coefficient
// times ||u||_1^2.
double transfer_floor_coefficient(const SymMatrix& A, int d);

// L(Delta, eps) = L sqrt(1+eps) / (1 - sqrt(Delta))
double slack_L(double L, double Delta, double eps);

// Largest integer M^2 in {2..p} with transfer margin(M) <= Delta; nullopt
// when even M^2 = 2 fails.
std::optional<long long> find_M_of_Delta(const BoundParams& q, double Delta);

// floor = kappa_star_sq/(1+eps) - (L+1)^2 s/(M_sq - 1)
BoundReport eval_normalized_floor(const BoundParams& q, double kappa_star_sq, double M_sq);

std::vector<std::string> bound_names();
// name registry for the CLI; throws std::invalid_argument on unknown names
BoundReport eval_bound_by_name(const std::string& name, const BoundParams& q,
                               double c1_universal = 1.0);

}  // namespace isoquad
