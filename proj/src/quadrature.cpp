#include "pfmix/quadrature.hpp"

#include <stdexcept>

namespace pfmix {

const QuadratureRule& tri_rule_3() {
  static const QuadratureRule rule = [] {
    QuadratureRule r;
    const double a = 2.0 / 3.0, b = 1.0 / 6.0;
    r.points = {{a, b, b}, {b, a, b}, {b, b, a}};
    r.weights = {b, b, b};
    return r;
  }();
  return rule;
}

const QuadratureRule& tri_rule_1() {
  static const QuadratureRule rule = [] {
    QuadratureRule r;
    const double t = 1.0 / 3.0;
    r.points = {{t, t, t}};
    r.weights = {0.5};
    return r;
  }();
  return rule;
}

Eigen::Matrix<double, 6, 1> shape_t6(const Eigen::Vector3d& L) {
  Eigen::Matrix<double, 6, 1> N;
  for (int i = 0; i < 3; ++i) N(i) = L(i) * (2.0 * L(i) - 1.0);
  N(3) = 4.0 * L(0) * L(1);
  N(4) = 4.0 * L(1) * L(2);
  N(5) = 4.0 * L(2) * L(0);
  return N;
}

Eigen::Matrix<double, 6, 3> dshape_t6_dL(const Eigen::Vector3d& L) {
  Eigen::Matrix<double, 6, 3> d = Eigen::Matrix<double, 6, 3>::Zero();
  for (int i = 0; i < 3; ++i) d(i, i) = 4.0 * L(i) - 1.0;
  d(3, 0) = 4.0 * L(1);
  d(3, 1) = 4.0 * L(0);
  d(4, 1) = 4.0 * L(2);
  d(4, 2) = 4.0 * L(1);
  d(5, 2) = 4.0 * L(0);
  d(5, 0) = 4.0 * L(2);
  return d;
}

Eigen::Matrix<double, 3, 2> bary_gradients(const Eigen::Vector2d& a,
                                           const Eigen::Vector2d& b,
                                           const Eigen::Vector2d& c) {
  const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  if (det <= 0.0) throw std::runtime_error("bary_gradients: degenerate triangle");
  Eigen::Matrix<double, 3, 2> g;
  g(0, 0) = (b.y() - c.y()) / det;
  g(0, 1) = (c.x() - b.x()) / det;
  g(1, 0) = (c.y() - a.y()) / det;
  g(1, 1) = (a.x() - c.x()) / det;
  g(2, 0) = (a.y() - b.y()) / det;
  g(2, 1) = (b.x() - a.x()) / det;
  return g;
}

}  // namespace pfmix
