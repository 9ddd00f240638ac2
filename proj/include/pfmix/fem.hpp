#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <functional>
#include <vector>

#include "pfmix/material.hpp"
#include "pfmix/mesh.hpp"
#include "pfmix/quadrature.hpp"

namespace pfmix {

using SpMat = Eigen::SparseMatrix<double>;

struct DirichletBC {
  int node = 0;
  int comp = 0;  // 0 = x, 1 = y
  double value = 0.0;
};

struct DofMap {
  int n_dofs = 0;
  int n_free = 0;
  std::vector<int> free_index;   // dof -> free slot, -1 if fixed
  std::vector<char> fixed;       // dof -> fixed?
  std::vector<double> bc_value;  // dof -> prescribed value (fixed dofs)
};

DofMap make_dofmap(int n_nodes, const std::vector<DirichletBC>& bcs);

struct NewtonConfig {
  double rtol = 1e-8;
  double atol = 1e-10;
  int max_iter = 25;
};

struct NewtonReport {
  bool converged = false;
  bool singular = false;
  bool constitutive_failure = false;
  int fail_elem = -1;
  int fail_ip = -1;
  int iterations = 0;  // linear solves performed
  double residual_norm = 0.0;
  std::vector<double> history;  // free-residual norm per assembly
};

// Per-IP constitutive callback; returns false to signal local failure.
using ConstitutiveFn =
    std::function<bool(int elem, int ip, const Eigen::Vector3d& eps, ConstitutiveResponse& out)>;

// Reuses one symbolic factorization across repeated solves with a fixed pattern.
class LinearSolver {
 public:
  bool factorize(const SpMat& K);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  Eigen::SparseLU<SpMat> lu_;
  bool analyzed_ = false;
};

// Quadratic-triangle small-strain system with precomputed IP geometry.
class FemSystem {
 public:
  explicit FemSystem(const Mesh& mesh);

  const Mesh& mesh() const { return *mesh_; }
  int n_elements() const { return static_cast<int>(mesh_->t6.size()); }
  int n_ips_per_elem() const { return static_cast<int>(rule_.points.size()); }
  int n_ips() const { return n_elements() * n_ips_per_elem(); }
  int n_dofs() const { return 2 * mesh_->n_nodes(); }
  const QuadratureRule& rule() const { return rule_; }

  Eigen::Vector3d strain_at_ip(int elem, int ip, const Eigen::VectorXd& u) const;
  // All IP strains, element-major; cheap enough to call per iteration.
  void strains(const Eigen::VectorXd& u, std::vector<Eigen::Vector3d>& out) const;

  // Internal force residual and (optionally) the tangent restricted to free dofs.
  // Scatter order is element order, so threaded and serial runs agree bitwise.
  bool assemble(const Eigen::VectorXd& u, const ConstitutiveFn& fn, const DofMap& dofs,
                Eigen::VectorXd& r_full, SpMat* K_ff, NewtonReport* rep, bool parallel) const;

  // r_final receives the internal-force residual of the last assembly; its
  // fixed-dof entries are the support reactions once converged.
  NewtonReport solve_newton(Eigen::VectorXd& u, const ConstitutiveFn& fn, const DofMap& dofs,
                            LinearSolver& solver, const NewtonConfig& cfg, bool parallel = true,
                            Eigen::VectorXd* r_final = nullptr) const;

 private:
  const Mesh* mesh_;
  QuadratureRule rule_;
  struct IpGeom {
    Eigen::Matrix<double, 3, 12> B;
    double w = 0.0;  // physical weight
  };
  std::vector<IpGeom> geom_;  // elem-major
};

}  // namespace pfmix
