#include "pfmix/phasefield.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>

#include "pfmix/quadrature.hpp"

namespace pfmix {

DrivingField project_uncertainty(const Mesh& mesh, const std::vector<double>& ip_U,
                                 int ips_per_elem) {
  const int ne = static_cast<int>(mesh.t3.size());
  if (static_cast<int>(ip_U.size()) != ne * ips_per_elem)
    throw std::invalid_argument("project_uncertainty: ip value count mismatch");
  DrivingField d;
  d.u_elem.resize(ne);
  for (int e = 0; e < ne; ++e) {
    double m = ip_U[static_cast<size_t>(e) * ips_per_elem];
    for (int q = 1; q < ips_per_elem; ++q)
      m = std::max(m, ip_U[static_cast<size_t>(e) * ips_per_elem + q]);
    d.u_elem[e] = m;
  }
  return d;
}

namespace {

inline double well_force(double phi) { return phi * (1.0 - phi) * (1.0 - 2.0 * phi); }
inline double well_force_d(double phi) { return 1.0 - 6.0 * phi + 6.0 * phi * phi; }

void check_sizes(const Mesh& mesh, const Eigen::VectorXd& phi, const DrivingField& drive) {
  if (phi.size() != mesh.n_vertex_nodes)
    throw std::invalid_argument("phase field: phi size must match vertex node count");
  if (drive.u_elem.size() != mesh.t3.size())
    throw std::invalid_argument("phase field: driving field size must match element count");
}

}  // namespace

Eigen::VectorXd phase_residual(const Mesh& mesh, const Eigen::VectorXd& phi,
                               const DrivingField& drive, const PhaseFieldParams& p) {
  check_sizes(mesh, phi, drive);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(mesh.n_vertex_nodes);
  for (size_t e = 0; e < mesh.t3.size(); ++e) {
    const auto& c = mesh.t3[e];
    const Eigen::Vector2d a = mesh.nodes[c[0]], b = mesh.nodes[c[1]], cc = mesh.nodes[c[2]];
    const double area = tri_area(mesh, static_cast<int>(e));
    const Eigen::Matrix<double, 3, 2> G = bary_gradients(a, b, cc);
    const Eigen::Vector3d pe(phi[c[0]], phi[c[1]], phi[c[2]]);
    // gradient term, exact for linear fields
    const Eigen::Vector2d gp = G.transpose() * pe;
    const Eigen::Vector3d rg = p.eps * p.eps * area * (G * gp);
    // source + double well at the centroid (one-point rule)
    const double pc = pe.mean();
    const double s = (-drive.u_elem[e] + p.b + p.omega * well_force(pc)) * area / 3.0;
    for (int i = 0; i < 3; ++i) r[c[i]] += rg[i] + s;
  }
  return r;
}

double phase_residual_against(const Mesh& mesh, const Eigen::VectorXd& phi,
                              const DrivingField& drive, const PhaseFieldParams& p,
                              const Eigen::VectorXd& v) {
  if (v.size() != mesh.n_vertex_nodes)
    throw std::invalid_argument("phase field: test direction size mismatch");
  return phase_residual(mesh, phi, drive, p).dot(v);
}

Eigen::SparseMatrix<double> phase_jacobian(const Mesh& mesh, const Eigen::VectorXd& phi,
                                           const PhaseFieldParams& p) {
  if (phi.size() != mesh.n_vertex_nodes)
    throw std::invalid_argument("phase field: phi size must match vertex node count");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh.t3.size() * 9);
  for (size_t e = 0; e < mesh.t3.size(); ++e) {
    const auto& c = mesh.t3[e];
    const Eigen::Vector2d a = mesh.nodes[c[0]], b = mesh.nodes[c[1]], cc = mesh.nodes[c[2]];
    const double area = tri_area(mesh, static_cast<int>(e));
    const Eigen::Matrix<double, 3, 2> G = bary_gradients(a, b, cc);
    const Eigen::Vector3d pe(phi[c[0]], phi[c[1]], phi[c[2]]);
    const Eigen::Matrix3d kg = p.eps * p.eps * area * (G * G.transpose());
    const double w = p.omega * well_force_d(pe.mean()) * area / 9.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trips.emplace_back(c[i], c[j], kg(i, j) + w);
  }
  Eigen::SparseMatrix<double> J(mesh.n_vertex_nodes, mesh.n_vertex_nodes);
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

PhaseSolveResult solve_phase(const Mesh& mesh, const Eigen::VectorXd& phi0,
                             const DrivingField& drive, const PhaseFieldParams& p) {
  check_sizes(mesh, phi0, drive);
  const int n = mesh.n_vertex_nodes;
  PhaseSolveResult out;
  out.phi = phi0.cwiseMax(0.0).cwiseMin(1.0);

  for (int it = 0; it <= p.max_iter; ++it) {
    const Eigen::VectorXd r = phase_residual(mesh, out.phi, drive, p);
    // Nodes pinned at a bound stay clamped while the residual pushes outward.
    std::vector<int> free_of(n, -1);
    std::vector<int> free_nodes;
    free_nodes.reserve(n);
    double rmax = 0.0;
    for (int i = 0; i < n; ++i) {
      const bool lo = out.phi[i] == 0.0 && r[i] > 0.0;
      const bool hi = out.phi[i] == 1.0 && r[i] < 0.0;
      if (lo || hi) continue;
      free_of[i] = static_cast<int>(free_nodes.size());
      free_nodes.push_back(i);
      rmax = std::max(rmax, std::abs(r[i]));
    }
    if (rmax <= p.tol) {
      out.converged = true;
      out.iterations = it;
      return out;
    }
    if (it == p.max_iter) break;

    const Eigen::SparseMatrix<double> J = phase_jacobian(mesh, out.phi, p);
    const int nf = static_cast<int>(free_nodes.size());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(J.nonZeros());
    for (int col = 0; col < J.outerSize(); ++col) {
      if (free_of[col] < 0) continue;
      for (Eigen::SparseMatrix<double>::InnerIterator itr(J, col); itr; ++itr) {
        if (free_of[itr.row()] >= 0)
          trips.emplace_back(free_of[itr.row()], free_of[col], itr.value());
      }
    }
    Eigen::SparseMatrix<double> Jff(nf, nf);
    Jff.setFromTriplets(trips.begin(), trips.end());
    Eigen::VectorXd rf(nf);
    for (int k = 0; k < nf; ++k) rf[k] = r[free_nodes[k]];

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(Jff);
    if (lu.info() != Eigen::Success) {
      out.iterations = it;
      return out;  // not converged
    }
    const Eigen::VectorXd dp = lu.solve(-rf);
    for (int k = 0; k < nf; ++k) {
      double v = out.phi[free_nodes[k]] + dp[k];
      if (v < 0.0) v = 0.0;
      if (v > 1.0) v = 1.0;
      out.phi[free_nodes[k]] = v;
    }
    out.iterations = it + 1;
  }
  out.converged = false;
  return out;
}

double phi_at_ip(const Mesh& mesh, const Eigen::VectorXd& phi, int elem,
                 const Eigen::Vector3d& bary) {
  const auto& c = mesh.t3.at(elem);
  double v = bary[0] * phi[c[0]] + bary[1] * phi[c[1]] + bary[2] * phi[c[2]];
  if (v < 0.0) v = 0.0;
  if (v > 1.0) v = 1.0;
  return v;
}

}  // namespace pfmix
