#pragma once

#include <Eigen/Dense>

namespace pfmix {

// Stress and tangent in Voigt plane-stress form (xx, yy, xy), engineering
// shear strain on the input side.
struct ConstitutiveResponse {
  Eigen::Vector3d stress = Eigen::Vector3d::Zero();
  Eigen::Matrix3d tangent = Eigen::Matrix3d::Zero();
};

// Plastic strain components (xx, yy, engineering xy, zz) plus the
// accumulated equivalent plastic strain.
struct PlasticState {
  Eigen::Vector4d ep = Eigen::Vector4d::Zero();
  double ep_eq = 0.0;
};

struct Material {
  double E = 0.0;
  double nu = 0.0;
  double sigma_inf = 0.0;
  double delta_sigma = 0.0;
  double eps_ref = 0.0;
  bool analytic_tangent = true;

  Eigen::Matrix3d De = Eigen::Matrix3d::Zero();
  double lambda = 0.0;
  double mu = 0.0;

  double yield(double ep_eq) const;
  double dyield(double ep_eq) const;
};

Material make_material(double E, double nu, double sigma_inf, double delta_sigma,
                       double eps_ref);

Eigen::Matrix3d elastic_matrix(double E, double nu);

// Validates ep_eq >= 0.
double yield_stress(const Material& mat, double ep_eq);

double von_mises_plane(const Eigen::Vector3d& stress);

struct HFResult {
  ConstitutiveResponse resp;
  PlasticState state;
  bool converged = true;
  bool plastic = false;
};

// Plane-stress update from a committed state at total strain
// (eps_xx, eps_yy, gamma_xy). Out-of-plane strain is resolved internally so
// |sigma_zz| <= 1e-9 * E; plastic flow uses a radial return on the 3D
// deviator. The returned state is tentative until the driver commits it.
HFResult update_stress(const Eigen::Vector3d& eps, const PlasticState& state,
                       const Material& mat);

}  // namespace pfmix
