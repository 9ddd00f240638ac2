#include "pfmix/material.hpp"

#include <cmath>
#include <stdexcept>

namespace pfmix {

namespace {

// Internal 3D work vectors use tensor shear in slot 3, component order
// (xx, yy, zz, xy). Double contraction weight for the xy slot is 2.

Eigen::Vector4d to_tensor4(const Eigen::Vector3d& eps_eng, double ezz) {
  return {eps_eng(0), eps_eng(1), ezz, 0.5 * eps_eng(2)};
}

Eigen::Vector4d ep_tensor(const PlasticState& st) {
  return {st.ep(0), st.ep(1), st.ep(3), 0.5 * st.ep(2)};
}

struct Return3D {
  Eigen::Vector4d sigma;
  Eigen::Matrix4d tangent;  // tensor-shear convention
  double dgamma = 0.0;
  Eigen::Vector4d n_dir = Eigen::Vector4d::Zero();
  bool converged = true;
};

Return3D radial_return(const Eigen::Vector4d& eps_t, const PlasticState& st,
                       const Material& mat) {
  const double la = mat.lambda, mu = mat.mu;
  Return3D out;

  Eigen::Matrix4d C = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) C(i, j) = la + (i == j ? 2.0 * mu : 0.0);
  C(3, 3) = 2.0 * mu;

  const Eigen::Vector4d ee = eps_t - ep_tensor(st);
  Eigen::Vector4d sig_tr = C * ee;

  const double p = (sig_tr(0) + sig_tr(1) + sig_tr(2)) / 3.0;
  Eigen::Vector4d s = sig_tr;
  for (int i = 0; i < 3; ++i) s(i) -= p;
  const double s_norm2 = s(0) * s(0) + s(1) * s(1) + s(2) * s(2) + 2.0 * s(3) * s(3);
  const double q_tr = std::sqrt(1.5 * s_norm2);

  const double f_tr = q_tr - mat.yield(st.ep_eq);
  if (f_tr <= 0.0) {
    out.sigma = sig_tr;
    out.tangent = C;
    return out;
  }

  double dg = 0.0;
  bool ok = false;
  for (int it = 0; it < 50; ++it) {
    const double r = q_tr - 3.0 * mu * dg - mat.yield(st.ep_eq + dg);
    if (std::abs(r) <= 1e-12) {
      ok = true;
      break;
    }
    const double dr = -3.0 * mu - mat.dyield(st.ep_eq + dg);
    dg -= r / dr;
    if (dg < 0.0) dg = 0.0;
  }
  // One more residual check: the loop may exit converged on the last pass.
  if (!ok && std::abs(q_tr - 3.0 * mu * dg - mat.yield(st.ep_eq + dg)) <= 1e-12) ok = true;
  if (!ok) {
    out.converged = false;
    out.sigma = sig_tr;
    out.tangent = C;
    return out;
  }

  out.dgamma = dg;
  out.n_dir = (1.5 / q_tr) * s;
  out.sigma = sig_tr - (3.0 * mu * dg / q_tr) * s;

  const double H = mat.dyield(st.ep_eq + dg);
  const double a_dev = 6.0 * mu * mu * dg / q_tr;
  const double c_n = (9.0 * mu * mu / (q_tr * q_tr)) * (1.0 / (3.0 * mu + H) - dg / q_tr);

  Eigen::Matrix4d P = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) P(i, j) = (i == j ? 1.0 : 0.0) - 1.0 / 3.0;
  P(3, 3) = 1.0;

  const Eigen::Vector4d w(1.0, 1.0, 1.0, 2.0);
  Eigen::Matrix4d outer;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) outer(i, j) = s(i) * w(j) * s(j);

  out.tangent = C - a_dev * P - c_n * outer;
  return out;
}

}  // namespace

double Material::yield(double e) const {
  return sigma_inf - delta_sigma * std::exp(-e / eps_ref);
}

double Material::dyield(double e) const {
  return (delta_sigma / eps_ref) * std::exp(-e / eps_ref);
}

Eigen::Matrix3d elastic_matrix(double E, double nu) {
  if (!(E > 0.0)) throw std::invalid_argument("elastic_matrix: E must be > 0");
  if (!(nu >= 0.0 && nu < 0.5)) throw std::invalid_argument("elastic_matrix: need 0 <= nu < 0.5");
  Eigen::Matrix3d D = Eigen::Matrix3d::Zero();
  const double d11 = E / (1.0 - nu * nu);
  D(0, 0) = D(1, 1) = d11;
  D(0, 1) = D(1, 0) = nu * d11;
  D(2, 2) = E / (2.0 * (1.0 + nu));
  return D;
}

Material make_material(double E, double nu, double sigma_inf, double delta_sigma,
                       double eps_ref) {
  Material m;
  m.E = E;
  m.nu = nu;
  m.sigma_inf = sigma_inf;
  m.delta_sigma = delta_sigma;
  m.eps_ref = eps_ref;
  m.De = elastic_matrix(E, nu);
  m.lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  m.mu = E / (2.0 * (1.0 + nu));
  if (!(m.yield(0.0) > 0.0)) throw std::invalid_argument("make_material: yield(0) must be > 0");
  if (!(eps_ref > 0.0) || !(delta_sigma >= 0.0))
    throw std::invalid_argument("make_material: bad hardening parameters");
  return m;
}

double yield_stress(const Material& mat, double ep_eq) {
  if (ep_eq < 0.0) throw std::invalid_argument("yield_stress: ep_eq must be >= 0");
  return mat.yield(ep_eq);
}

double von_mises_plane(const Eigen::Vector3d& s) {
  return std::sqrt(s(0) * s(0) - s(0) * s(1) + s(1) * s(1) + 3.0 * s(2) * s(2));
}

namespace {

struct CoreResult {
  Eigen::Vector3d stress;
  Eigen::Matrix3d tangent;
  PlasticState state;
  bool converged = true;
  bool plastic = false;
};

CoreResult update_core(const Eigen::Vector3d& eps, const PlasticState& st,
                       const Material& mat) {
  CoreResult out;
  out.state = st;

  const double la = mat.lambda, mu = mat.mu;
  // Elastic closed-form out-of-plane strain (sigma_zz = 0).
  const Eigen::Vector4d ept = ep_tensor(st);
  double ezz = ept(2) - la * ((eps(0) - ept(0)) + (eps(1) - ept(1))) / (la + 2.0 * mu);

  Return3D rr = radial_return(to_tensor4(eps, ezz), st, mat);
  if (rr.dgamma > 0.0 || !rr.converged) {
    // Drive sigma_zz well below the acceptance bound so the plane von Mises
    // consistency check is not polluted by the out-of-plane residual.
    const double tol_tight = 1e-12 * mat.E, tol_accept = 1e-9 * mat.E;
    double best = std::abs(rr.sigma(2));
    int stall = 0;
    for (int it = 0; it < 50 && rr.converged; ++it) {
      if (std::abs(rr.sigma(2)) <= tol_tight) break;
      ezz -= rr.sigma(2) / rr.tangent(2, 2);
      rr = radial_return(to_tensor4(eps, ezz), st, mat);
      const double r = std::abs(rr.sigma(2));
      if (r < best) {
        best = r;
        stall = 0;
      } else if (++stall >= 3) {
        break;
      }
    }
    if (!rr.converged || std::abs(rr.sigma(2)) > tol_accept) {
      out.converged = false;
      out.stress = mat.De * (eps - Eigen::Vector3d(st.ep(0), st.ep(1), st.ep(2)));
      out.tangent = mat.De;
      return out;
    }
  }

  out.plastic = rr.dgamma > 0.0;
  out.stress = Eigen::Vector3d(rr.sigma(0), rr.sigma(1), rr.sigma(3));

  if (out.plastic) {
    const Eigen::Vector4d dep = rr.dgamma * rr.n_dir;
    out.state.ep(0) = st.ep(0) + dep(0);
    out.state.ep(1) = st.ep(1) + dep(1);
    out.state.ep(3) = st.ep(3) + dep(2);
    out.state.ep(2) = st.ep(2) + 2.0 * dep(3);
    out.state.ep_eq = st.ep_eq + rr.dgamma;
  }

  // Static condensation of the zz row/column, engineering-shear columns.
  Eigen::Matrix4d Dt = rr.tangent;
  Eigen::Matrix3d D;
  const int map[3] = {0, 1, 3};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int I = map[i], J = map[j];
      D(i, j) = Dt(I, J) - Dt(I, 2) * Dt(2, J) / Dt(2, 2);
    }
  D.col(2) *= 0.5;
  out.tangent = D;
  return out;
}

}  // namespace

HFResult update_stress(const Eigen::Vector3d& eps, const PlasticState& state,
                       const Material& mat) {
  if (!eps.allFinite()) throw std::invalid_argument("update_stress: non-finite strain");

  CoreResult core = update_core(eps, state, mat);
  HFResult out;
  out.converged = core.converged;
  out.plastic = core.plastic;
  out.state = core.state;
  out.resp.stress = core.stress;
  out.resp.tangent = core.tangent;

  if (!mat.analytic_tangent && core.converged) {
    const double h = 1e-7;
    for (int j = 0; j < 3; ++j) {
      Eigen::Vector3d ep_ = eps, em = eps;
      ep_(j) += h;
      em(j) -= h;
      const CoreResult rp = update_core(ep_, state, mat);
      const CoreResult rm = update_core(em, state, mat);
      out.resp.tangent.col(j) = (rp.stress - rm.stress) / (2.0 * h);
    }
  }
  return out;
}

}  // namespace pfmix
