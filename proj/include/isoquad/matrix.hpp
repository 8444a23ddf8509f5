#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace isoquad {

using Vector = std::vector<double>;

// Dense symmetric matrix with full row-major storage. Constructing from raw
// data symmetrizes via (A + A^T)/2 and rejects non-finite entries, so a
// SymMatrix is symmetric and finite by construction.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int p);
  SymMatrix(int p, const std::vector<double>& row_major);

  static SymMatrix identity(int p);

  int dim() const { return p_; }
  bool empty() const { return p_ == 0; }

  double operator()(int i, int j) const {
    return a_[static_cast<size_t>(i) * p_ + j];
  }
  void set(int i, int j, double v);

  const double* data() const { return a_.data(); }
  const std::vector<double>& values() const { return a_; }

  double max_diag() const;
  double max_abs() const;

 private:
  int p_ = 0;
  std::vector<double> a_;
};

// FNV-1a over the raw double bits, row-major. Stable across runs.
uint64_t matrix_hash(const SymMatrix& a);

// Shortest round-trip decimal formatting (to_chars) and strict parsing.
std::string format_double(double v);
double parse_double(const std::string& token);

// CSV layout: square files start with a line "p", rectangular ones with
// "n,p"; values follow row-major, one row per line. Vectors use a "p" header
// and a single value line. Round-trips are bit-stable.
void write_matrix_csv(const std::string& path, const SymMatrix& a);
SymMatrix read_matrix_csv(const std::string& path);

void write_design_csv(const std::string& path, const std::vector<double>& x, int n, int p);
void read_design_csv(const std::string& path, std::vector<double>& x, int& n, int& p);

void write_vector_csv(const std::string& path, const Vector& v);
Vector read_vector_csv(const std::string& path);

}  // namespace isoquad
