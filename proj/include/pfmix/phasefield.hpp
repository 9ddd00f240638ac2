#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "pfmix/mesh.hpp"

namespace pfmix {

struct PhaseFieldParams {
  double eps = 1e-2;   // interface length
  double omega = 1e-3; // double-well weight
  double b = 1.0;      // opposing force
  double tol = 1e-8;
  int max_iter = 50;
};

// One driving value per T3 element.
struct DrivingField {
  std::vector<double> u_elem;
};

// Element value = max over the element's mechanical IPs (ip_U element-major,
// ips_per_elem entries each).
DrivingField project_uncertainty(const Mesh& mesh, const std::vector<double>& ip_U,
                                 int ips_per_elem);

// Nodal weak-form residual of the phase-field functional.
Eigen::VectorXd phase_residual(const Mesh& mesh, const Eigen::VectorXd& phi,
                               const DrivingField& drive, const PhaseFieldParams& p);

// Residual tested against an arbitrary nodal direction v.
double phase_residual_against(const Mesh& mesh, const Eigen::VectorXd& phi,
                              const DrivingField& drive, const PhaseFieldParams& p,
                              const Eigen::VectorXd& v);

Eigen::SparseMatrix<double> phase_jacobian(const Mesh& mesh, const Eigen::VectorXd& phi,
                                           const PhaseFieldParams& p);

struct PhaseSolveResult {
  Eigen::VectorXd phi;
  bool converged = false;
  int iterations = 0;
};

// Projected active-set Newton with hard bounds [0,1].
PhaseSolveResult solve_phase(const Mesh& mesh, const Eigen::VectorXd& phi0,
                             const DrivingField& drive, const PhaseFieldParams& p);

// T3 interpolation at a barycentric point of the element, clamped to [0,1].
double phi_at_ip(const Mesh& mesh, const Eigen::VectorXd& phi, int elem,
                 const Eigen::Vector3d& bary);

}  // namespace pfmix
