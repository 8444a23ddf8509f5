#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isoquad/matrix.hpp"

namespace isoquad {

// Which quadratic-form constant a cone describes:
//   l1_on_S   min s u'Au over ||u_S||_1 = 1, ||u_{-S}||_1 <= L        (compatibility)
//   l2_on_uS  min u'Au over ||u_S||_2 = 1, ||u_{-S}||_1 <= L||u_S||_1 (restricted eigenvalue)
//   l2_on_u   same cone, normalized by ||u||_2 = 1
//   adaptive  min u'Au over ||u_S||_2 = 1, ||u_{-S}||_1 <= L sqrt(s)
enum class NormMode { l1_on_S, l2_on_uS, l2_on_u, adaptive };

std::string norm_mode_name(NormMode mode);
NormMode norm_mode_from_name(const std::string& name);

struct ConeSpec {
  std::vector<int> S;  // 0-based column indices
  double L = 1.0;
  NormMode mode = NormMode::l2_on_uS;
};

void validate(const ConeSpec& cone, int p);

struct ConstantResult {
  double value = 0.0;
  Vector minimizer;
  std::string certificate;  // orthant_exact | iterative | oracle
  double gap_estimate = 0.0;
  long long orthant_count = 0;
};

// Exact orthant decomposition: 2^s convex subproblems, each solved by
// projected gradient with step 1/lambda_max, stop at projected-gradient norm
// <= 1e-7 max(1, lambda_max), cap 50 p + 2000 iterations per orthant.
// Requires A PSD up to 1e-10 and |S| <= 20.
ConstantResult compat_constant(const SymMatrix& A, const ConeSpec& cone);

// Multi-start projected ratio descent (32 deterministic seeded starts:
// +-e_j on S plus random cone points) with local polish; upper estimate,
// gap_estimate is the spread of the best three starts.
ConstantResult restricted_eigenvalue(const SymMatrix& A, const ConeSpec& cone);

ConstantResult adaptive_re(const SymMatrix& A, const ConeSpec& cone);

// inf { u'Au : u'Sigma0 u = 1, ||u||_1 <= M }, Sigma0 PD, M >= 1.
ConstantResult constrained_form_infimum(const SymMatrix& A, const SymMatrix& Sigma0, double M);

// compat_constant(A, {S, L=1}).value > 1e-8
bool null_space_check(const SymMatrix& A, const std::vector<int>& S);

// Brute-force ground truth for p <= 8: budget random feasible points plus
// deterministic stratified directions, each polished by projected gradient.
ConstantResult oracle_minimum(const SymMatrix& A, const ConeSpec& cone, int budget,
                              uint64_t seed);
ConstantResult oracle_minimum(const SymMatrix& A, const SymMatrix& Sigma0, double M,
                              int budget, uint64_t seed);

// Dispatch on cone.mode (compat for l1_on_S, adaptive_re for adaptive, ...).
ConstantResult cone_constant(const SymMatrix& A, const ConeSpec& cone);

}  // namespace isoquad
