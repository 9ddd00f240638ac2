#include "pfmix/fixtures.hpp"

#include <cmath>

namespace pfmix {

Mesh build_dogbone(int nx, int ny) {
  const double L = 10.0, H = 2.0;
  Mesh m = generate_rectangle(nx, ny, L, H);
  for (auto& p : m.nodes) {
    const double h = H - 0.5 * (1.0 + std::cos(2.0 * M_PI * (p.x() - L / 2) / L));
    p.y() = (p.y() - H / 2) * (h / H);
  }
  validate(m);
  return m;
}

Mesh build_notched(double fine, double coarse) {
  // Notch bands sit on the fine grid so carving leaves clean rectangles.
  const double ax0 = 0.0, ax1 = 0.32, ay0 = 0.30, ay1 = 0.34;
  const double bx0 = 0.68, bx1 = 1.0, by0 = 0.66, by1 = 0.70;
  auto xt = grade_ticks(0.0, 1.0, coarse, {{0.28, 0.72, fine}});
  auto yt = grade_ticks(0.0, 1.0, coarse, {{0.26, 0.74, fine}});
  Mesh m = generate_rectangle_graded(xt, yt);
  auto keep = [&](double x, double y) {
    const bool in_a = x > ax0 && x < ax1 && y > ay0 && y < ay1;
    const bool in_b = x > bx0 && x < bx1 && y > by0 && y < by1;
    return !in_a && !in_b;
  };
  return carve(m, keep);
}

Mesh build_holes(int nx, int ny, double r) {
  Mesh m = generate_rectangle(nx, ny, 2.0, 1.0);
  const Eigen::Vector2d centers[4] = {
      {0.4, 0.5}, {0.8, 0.22}, {1.2, 0.78}, {1.6, 0.5}};
  auto keep = [&](double x, double y) {
    const Eigen::Vector2d p(x, y);
    for (const auto& c : centers)
      if ((p - c).norm() < r) return false;
    return true;
  };
  return carve(m, keep);
}

Mesh build_strip(int nx, int ny, double length, double height) {
  return generate_rectangle(nx, ny, length, height);
}

}  // namespace pfmix
