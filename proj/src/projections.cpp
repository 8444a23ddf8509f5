#include "isoquad/projections.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace isoquad {

Vector project_l1_ball(const Vector& v, double radius) {
  if (radius < 0.0) throw std::invalid_argument("project_l1_ball: negative radius");
  double l1 = 0.0;
  for (double x : v) l1 += std::fabs(x);
  if (l1 <= radius) return v;
  if (radius == 0.0) return Vector(v.size(), 0.0);
  Vector mag(v.size());
  for (size_t i = 0; i < v.size(); ++i) mag[i] = std::fabs(v[i]);
  std::sort(mag.begin(), mag.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (size_t k = 0; k < mag.size(); ++k) {
    cum += mag[k];
    double cand = (cum - radius) / static_cast<double>(k + 1);
    if (k + 1 == mag.size() || mag[k + 1] <= cand) {
      theta = cand;
      break;
    }
  }
  Vector out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    double m = std::fabs(v[i]) - theta;
    out[i] = m > 0.0 ? (v[i] > 0.0 ? m : -m) : 0.0;
  }
  return out;
}

Vector project_simplex(const Vector& v, double total) {
  if (total <= 0.0) throw std::invalid_argument("project_simplex: total must be positive");
  Vector sorted = v;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  size_t rho = 0;
  for (size_t k = 0; k < sorted.size(); ++k) {
    cum += sorted[k];
    double cand = (cum - total) / static_cast<double>(k + 1);
    if (sorted[k] > cand) {
      rho = k + 1;
      theta = cand;
    }
  }
  (void)rho;
  Vector out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = std::max(0.0, v[i] - theta);
  return out;
}

Vector project_signed_simplex(const Vector& v, const std::vector<int>& signs, double total) {
  if (v.size() != signs.size())
    throw std::invalid_argument("project_signed_simplex: size mismatch");
  Vector flipped(v.size());
  for (size_t i = 0; i < v.size(); ++i) flipped[i] = signs[i] >= 0 ? v[i] : -v[i];
  Vector proj = project_simplex(flipped, total);
  for (size_t i = 0; i < v.size(); ++i)
    if (signs[i] < 0) proj[i] = -proj[i];
  return proj;
}

}  // namespace isoquad
