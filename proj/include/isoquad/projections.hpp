#pragma once

#include "isoquad/matrix.hpp"

namespace isoquad {

// Euclidean projection onto {x : ||x||_1 <= radius} by the sorted-threshold
// rule; exact up to floating point, O(n log n).
Vector project_l1_ball(const Vector& v, double radius);

// Euclidean projection onto the scaled simplex {x >= 0, sum x = total}.
Vector project_simplex(const Vector& v, double total);

// Projection onto {x : sign(x_i) in {0, signs_i}, sum_i signs_i x_i = total}:
// flip by signs, project onto the simplex, flip back.
Vector project_signed_simplex(const Vector& v, const std::vector<int>& signs, double total);

}  // namespace isoquad
