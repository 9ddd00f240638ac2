#pragma once

#include <Eigen/Dense>
#include <vector>

namespace pfmix {

// Barycentric points with reference-triangle weights (weights sum to 1/2).
struct QuadratureRule {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> weights;
};

// Degree-2 exact 3-point rule: permutations of (2/3, 1/6, 1/6), weights 1/6.
const QuadratureRule& tri_rule_3();
// Centroid rule.
const QuadratureRule& tri_rule_1();

// Quadratic (T6) shape functions at a barycentric point; node order matches
// Mesh::t6 (corners, then midsides on edges 01, 12, 20).
Eigen::Matrix<double, 6, 1> shape_t6(const Eigen::Vector3d& L);
Eigen::Matrix<double, 6, 3> dshape_t6_dL(const Eigen::Vector3d& L);

// Constant barycentric gradients of a straight-sided triangle with corner
// coordinates a, b, c; row k is the physical gradient of L_k.
Eigen::Matrix<double, 3, 2> bary_gradients(const Eigen::Vector2d& a,
                                           const Eigen::Vector2d& b,
                                           const Eigen::Vector2d& c);

}  // namespace pfmix
