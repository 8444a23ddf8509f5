#pragma once

#include <cmath>

#include "isoquad/matrix.hpp"

namespace isoquad {

// Neumaier-compensated accumulator; used wherever the spec asks for stable
// accumulation of quadratic forms and norms.
struct Accum {
  double s = 0.0;
  double c = 0.0;
  void add(double x) {
    double t = s + x;
    if (std::fabs(s) >= std::fabs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

double dot(const double* a, const double* b, int n);
double dot(const Vector& a, const Vector& b);

Vector matvec(const SymMatrix& a, const Vector& u);
double quadratic_form(const SymMatrix& a, const Vector& u);

struct CholeskyResult {
  bool success = false;
  int pivot_index = -1;       // first pivot below tolerance when !success
  std::vector<double> lower;  // p x p row-major, lower triangle filled
};

// Failure (pivot < 1e-12 * max diagonal) is a normal return, not an error.
CholeskyResult cholesky(const SymMatrix& a);

struct ExtremeEigen {
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  Vector v_max, v_min;
  bool converged = true;
  int iterations = 0;
};

// Power iteration on a Gershgorin-shifted copy for lambda_max, then on
// (lambda_max I - A) for lambda_min. Deterministic all-ones start with one
// fixed perturbed restart on stall; relative residual tolerance 1e-8;
// iteration cap 10 p log p + 500 per eigenvalue.
ExtremeEigen extreme_eigenvalues(const SymMatrix& a);

// Gram matrix X^T X / n of a row-major n x p design. The parallel kernel
// distributes upper-triangle entries over threads; each entry is an
// independent serial sum, so the two paths agree bit for bit.
SymMatrix gram_serial(const std::vector<double>& x, int n, int p);
SymMatrix gram_parallel(const std::vector<double>& x, int n, int p);

// R = D^{-1/2} A D^{-1/2} from A's diagonal; rows and columns with a
// nonpositive diagonal are zeroed.
SymMatrix normalized_gram(const SymMatrix& a);

}  // namespace isoquad
