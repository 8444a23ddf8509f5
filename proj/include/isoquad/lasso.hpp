#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isoquad/constants.hpp"
#include "isoquad/ensembles.hpp"
#include "isoquad/matrix.hpp"

namespace isoquad {

struct LassoProblem {
  DesignSample design;
  Vector u0;               // true signal
  std::vector<int> S;      // active set {j : u0_j != 0}, 0-based
  Vector xi;               // noise
  double lambda = 0.0;     // penalty, > 0
  double lambda0 = 0.0;    // ||xi^T X||_inf / n, computed
};

// Draws a design from the ensemble, plants a signal with |S| = s and entries
// +-magnitude, adds N(0, noise_sd^2) noise, and sets lambda = lambda_rule *
// lambda0 when lambda <= 0 is passed (noiseless problems must pass a
// positive lambda).
LassoProblem make_lasso_problem(const EnsembleSpec& spec, int n, int s, double magnitude,
                                double noise_sd, double lambda, double lambda_rule,
                                uint64_t seed);

struct LassoFit {
  Vector u_hat;
  int sweeps = 0;
  bool converged = true;        // coordinate-update rule met before the cap
  double duality_gap = 0.0;
  double subgrad_residual = 0.0;  // max_j (|X_j'(y - X u)/n| - lambda)_+
  bool sign_consistent = true;    // active coordinates sit on the right face
  double objective = 0.0;
};

// Cyclic coordinate descent with soft-thresholding; deterministic order;
// stops when the max coordinate update drops below 1e-9 (then keeps sweeping
// while the KKT residual is above 1e-8, still under the 1e5 sweep cap).
LassoFit lasso_fit(const LassoProblem& prob);

struct OracleInequalityRecord {
  bool applicable = false;
  std::string reason;       // set when skipped
  double lambda = 0.0, lambda0 = 0.0, L = 0.0;
  double phi2 = 0.0;
  double lhs = 0.0, rhs = 0.0;
  bool vacuous = false;     // phi2 <= 1e-10
  bool pass = false;
};

// Both sides of the prediction-error inequality
//   ||X(u_hat - u0)||_{2,n}^2 <= (lambda + lambda0)^2 |S| / phi2(L, S)
// with L = (lambda + lambda0)/(lambda - lambda0); requires lambda > lambda0.
OracleInequalityRecord oracle_inequality_check(const LassoProblem& prob,
                                               const LassoFit& fit,
                                               const ConstantResult& compat);

}  // namespace isoquad
