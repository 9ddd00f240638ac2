#include "pfmix/fem.hpp"

#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pfmix {

DofMap make_dofmap(int n_nodes, const std::vector<DirichletBC>& bcs) {
  DofMap d;
  d.n_dofs = 2 * n_nodes;
  d.free_index.assign(d.n_dofs, -1);
  d.fixed.assign(d.n_dofs, 0);
  d.bc_value.assign(d.n_dofs, 0.0);
  for (const auto& bc : bcs) {
    if (bc.node < 0 || bc.node >= n_nodes || bc.comp < 0 || bc.comp > 1)
      throw std::invalid_argument("make_dofmap: bc out of range");
    const int dof = 2 * bc.node + bc.comp;
    if (d.fixed[dof] && d.bc_value[dof] != bc.value)
      throw std::invalid_argument("make_dofmap: conflicting values on one dof");
    d.fixed[dof] = 1;
    d.bc_value[dof] = bc.value;
  }
  int k = 0;
  for (int i = 0; i < d.n_dofs; ++i)
    if (!d.fixed[i]) d.free_index[i] = k++;
  d.n_free = k;
  return d;
}

bool LinearSolver::factorize(const SpMat& K) {
  if (!analyzed_) {
    lu_.analyzePattern(K);
    analyzed_ = true;
  }
  lu_.factorize(K);
  return lu_.info() == Eigen::Success;
}

Eigen::VectorXd LinearSolver::solve(const Eigen::VectorXd& rhs) const { return lu_.solve(rhs); }

FemSystem::FemSystem(const Mesh& mesh) : mesh_(&mesh), rule_(tri_rule_3()) {
  if (!mesh.promoted()) throw std::invalid_argument("FemSystem needs a quadratic mesh");
  const int nq = static_cast<int>(rule_.points.size());
  geom_.resize(mesh.t6.size() * nq);
  for (size_t e = 0; e < mesh.t6.size(); ++e) {
    const auto& c = mesh.t6[e];
    Eigen::Matrix<double, 6, 2> X;
    for (int i = 0; i < 6; ++i) X.row(i) = mesh.nodes[c[i]].transpose();
    for (int q = 0; q < nq; ++q) {
      const Eigen::Vector3d L = rule_.points[q];
      const Eigen::Matrix<double, 6, 3> dNdL = dshape_t6_dL(L);
      // reduce to independent coordinates (L0, L1); L2 = 1 - L0 - L1
      Eigen::Matrix<double, 6, 2> dNdr;
      dNdr.col(0) = dNdL.col(0) - dNdL.col(2);
      dNdr.col(1) = dNdL.col(1) - dNdL.col(2);
      const Eigen::Matrix2d J = X.transpose() * dNdr;  // dx/d(L0,L1)
      const double det = J.determinant();
      if (!(det > 0.0)) throw std::invalid_argument("FemSystem: non-positive element Jacobian");
      const Eigen::Matrix<double, 6, 2> dNdx = dNdr * J.inverse();
      IpGeom g;
      g.B.setZero();
      for (int i = 0; i < 6; ++i) {
        g.B(0, 2 * i) = dNdx(i, 0);
        g.B(1, 2 * i + 1) = dNdx(i, 1);
        g.B(2, 2 * i) = dNdx(i, 1);
        g.B(2, 2 * i + 1) = dNdx(i, 0);
      }
      g.w = rule_.weights[q] * det;
      geom_[e * nq + q] = g;
    }
  }
}

Eigen::Vector3d FemSystem::strain_at_ip(int elem, int ip, const Eigen::VectorXd& u) const {
  const int nq = n_ips_per_elem();
  const auto& c = mesh_->t6.at(elem);
  Eigen::Matrix<double, 12, 1> ue;
  for (int i = 0; i < 6; ++i) {
    ue[2 * i] = u[2 * c[i]];
    ue[2 * i + 1] = u[2 * c[i] + 1];
  }
  return geom_[static_cast<size_t>(elem) * nq + ip].B * ue;
}

void FemSystem::strains(const Eigen::VectorXd& u, std::vector<Eigen::Vector3d>& out) const {
  const int ne = n_elements();
  const int nq = n_ips_per_elem();
  out.resize(static_cast<size_t>(ne) * nq);
#pragma omp parallel for schedule(static)
  for (int e = 0; e < ne; ++e) {
    const auto& c = mesh_->t6[e];
    Eigen::Matrix<double, 12, 1> ue;
    for (int i = 0; i < 6; ++i) {
      ue[2 * i] = u[2 * c[i]];
      ue[2 * i + 1] = u[2 * c[i] + 1];
    }
    for (int q = 0; q < nq; ++q)
      out[static_cast<size_t>(e) * nq + q] = geom_[static_cast<size_t>(e) * nq + q].B * ue;
  }
}

bool FemSystem::assemble(const Eigen::VectorXd& u, const ConstitutiveFn& fn, const DofMap& dofs,
                         Eigen::VectorXd& r_full, SpMat* K_ff, NewtonReport* rep,
                         bool parallel) const {
  const int ne = n_elements();
  const int nq = n_ips_per_elem();
  if (u.size() != n_dofs()) throw std::invalid_argument("assemble: u size mismatch");

  struct ElemBuf {
    Eigen::Matrix<double, 12, 1> re;
    Eigen::Matrix<double, 12, 12> ke;
    int fail_ip = -1;
  };
  std::vector<ElemBuf> buf(ne);

  const bool want_k = K_ff != nullptr;
#pragma omp parallel for schedule(static) if (parallel)
  for (int e = 0; e < ne; ++e) {
    ElemBuf& b = buf[e];
    b.re.setZero();
    b.ke.setZero();
    const auto& c = mesh_->t6[e];
    Eigen::Matrix<double, 12, 1> ue;
    for (int i = 0; i < 6; ++i) {
      ue[2 * i] = u[2 * c[i]];
      ue[2 * i + 1] = u[2 * c[i] + 1];
    }
    for (int q = 0; q < nq; ++q) {
      const IpGeom& g = geom_[static_cast<size_t>(e) * nq + q];
      ConstitutiveResponse resp;
      if (!fn(e, q, g.B * ue, resp)) {
        if (b.fail_ip < 0) b.fail_ip = q;
        continue;
      }
      b.re.noalias() += g.w * (g.B.transpose() * resp.stress);
      if (want_k) b.ke.noalias() += g.w * (g.B.transpose() * resp.tangent * g.B);
    }
  }

  for (int e = 0; e < ne; ++e) {
    if (buf[e].fail_ip >= 0) {
      if (rep) {
        rep->constitutive_failure = true;
        rep->fail_elem = e;
        rep->fail_ip = buf[e].fail_ip;
      }
      return false;
    }
  }

  r_full.setZero(n_dofs());
  for (int e = 0; e < ne; ++e) {
    const auto& c = mesh_->t6[e];
    for (int i = 0; i < 6; ++i) {
      r_full[2 * c[i]] += buf[e].re[2 * i];
      r_full[2 * c[i] + 1] += buf[e].re[2 * i + 1];
    }
  }

  if (want_k) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(ne) * 144);
    for (int e = 0; e < ne; ++e) {
      const auto& c = mesh_->t6[e];
      int gdof[12];
      for (int i = 0; i < 6; ++i) {
        gdof[2 * i] = 2 * c[i];
        gdof[2 * i + 1] = 2 * c[i] + 1;
      }
      for (int i = 0; i < 12; ++i) {
        const int fi = dofs.free_index[gdof[i]];
        if (fi < 0) continue;
        for (int j = 0; j < 12; ++j) {
          const int fj = dofs.free_index[gdof[j]];
          if (fj >= 0) trips.emplace_back(fi, fj, buf[e].ke(i, j));
        }
      }
    }
    K_ff->resize(dofs.n_free, dofs.n_free);
    K_ff->setFromTriplets(trips.begin(), trips.end());
  }
  return true;
}

NewtonReport FemSystem::solve_newton(Eigen::VectorXd& u, const ConstitutiveFn& fn,
                                     const DofMap& dofs, LinearSolver& solver,
                                     const NewtonConfig& cfg, bool parallel,
                                     Eigen::VectorXd* r_final) const {
  NewtonReport rep;
  if (u.size() != n_dofs()) throw std::invalid_argument("solve_newton: u size mismatch");
  for (int d = 0; d < dofs.n_dofs; ++d)
    if (dofs.fixed[d]) u[d] = dofs.bc_value[d];

  const auto free_norm = [&](const Eigen::VectorXd& r) {
    double s = 0.0;
    for (int d = 0; d < dofs.n_dofs; ++d)
      if (!dofs.fixed[d]) s += r[d] * r[d];
    return std::sqrt(s);
  };

  Eigen::VectorXd r;
  SpMat K;
  if (!assemble(u, fn, dofs, r, &K, &rep, parallel)) return rep;
  if (r_final) *r_final = r;
  double rn = free_norm(r);
  rep.history.push_back(rn);
  rep.residual_norm = rn;
  const double r0 = rn;
  int solves = 0;
  while (true) {
    if (!std::isfinite(rn)) {
      rep.iterations = solves;
      return rep;
    }
    if (rn <= std::max(cfg.atol, cfg.rtol * r0)) {
      rep.converged = true;
      rep.iterations = solves;
      return rep;
    }
    if (solves >= cfg.max_iter) {
      rep.iterations = solves;
      return rep;
    }
    if (!solver.factorize(K)) {
      rep.singular = true;
      rep.iterations = solves;
      return rep;
    }
    Eigen::VectorXd rf(dofs.n_free);
    for (int d = 0; d < dofs.n_dofs; ++d)
      if (!dofs.fixed[d]) rf[dofs.free_index[d]] = r[d];
    const Eigen::VectorXd du = solver.solve(-rf);

    // backtracking keeps transiently extreme iterates from derailing the
    // solve; a refused or failed trial state just halves the step
    bool stepped = false;
    double alpha = 1.0;
    Eigen::VectorXd u_try(u.size());
    Eigen::VectorXd r_try;
    SpMat K_try;
    NewtonReport first_fail;
    bool saw_fail = false;
    for (int ls = 0; ls < 12; ++ls, alpha *= 0.5) {
      u_try = u;
      for (int d = 0; d < dofs.n_dofs; ++d)
        if (!dofs.fixed[d]) u_try[d] += alpha * du[dofs.free_index[d]];
      NewtonReport trial;
      if (!assemble(u_try, fn, dofs, r_try, &K_try, &trial, parallel)) {
        if (!saw_fail) {
          first_fail = trial;
          saw_fail = true;
        }
        continue;
      }
      const double rn_try = free_norm(r_try);
      if (!std::isfinite(rn_try)) continue;
      if (rn_try <= rn * (1.0 - 1e-4 * alpha) || rn_try <= std::max(cfg.atol, cfg.rtol * r0)) {
        u = u_try;
        r.swap(r_try);
        K.swap(K_try);
        rn = rn_try;
        stepped = true;
        break;
      }
    }
    ++solves;
    if (!stepped) {
      if (saw_fail) {
        rep.constitutive_failure = first_fail.constitutive_failure;
        rep.fail_elem = first_fail.fail_elem;
        rep.fail_ip = first_fail.fail_ip;
      }
      rep.iterations = solves;
      return rep;
    }
    rep.history.push_back(rn);
    rep.residual_norm = rn;
    if (r_final) *r_final = r;
  }
}

}  // namespace pfmix
