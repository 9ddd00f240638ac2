#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pfmix/material.hpp"
#include "pfmix/mesh.hpp"

namespace pfmix {

struct MetricsRow {
  int step = 0;  // index of the load step being attempted (1-based)
  double u = 0.0;
  double F = 0.0;
  double du = 0.0;
  int accepted = 0;
  int stagger_iters = 0;
  long long nr_iters_cum = 0;
  long long hf_evals_cum = 0;
  int n_ips_gp = 0;
  int n_ips_mixed = 0;
  int n_ips_hf = 0;
  std::string failure_kind = "none";  // none | mechanical | phasefield
  // Not serialized; per-attempt extras kept for in-process analysis.
  bool phi_changed = false;
};

struct RunMetrics {
  std::vector<MetricsRow> rows;  // one per attempt
  bool solved = true;
};

struct PhaseCounts {
  int gp = 0;
  int mixed = 0;
  int hf = 0;
};

// Boundary weights (phi == tau, phi == 1-tau) count as mixed.
PhaseCounts phase_populations(const std::vector<double>& phi, double tau);

void write_metrics_csv(const RunMetrics& m, const std::string& path);
RunMetrics read_metrics_csv(const std::string& path);

// Force-displacement curve sampled at accepted steps; u strictly increasing.
struct FuCurve {
  std::vector<double> u;
  std::vector<double> F;
};

FuCurve fu_curve(const RunMetrics& m);

struct FuErrorReport {
  double error = 0.0;     // sum of |F_a - F_b| on the shared grid
  double u_common = 0.0;  // last grid point actually compared
  int n_points = 0;
  bool truncated = false;  // either curve ended before u_max
};

// Compares two curves on the grid du, 2du, ... up to u_max; both curves are
// anchored at the origin and linearly interpolated.
FuErrorReport fu_error(const FuCurve& a, const FuCurve& b, double du, double u_max);

// Quadratic-triangle unstructured-grid snapshot (legacy ASCII).
// phi lives on vertex nodes; midside values average the edge endpoints.
// Per-IP stresses and plastic strains are averaged per element.
void write_vtk(const std::string& path, const Mesh& mesh, const Eigen::VectorXd& phi_vertex,
               const Eigen::VectorXd& u, const std::vector<Eigen::Vector3d>& ip_stress,
               const std::vector<PlasticState>& ip_state, int ips_per_elem,
               const std::string& title = "snapshot");

}  // namespace pfmix
