#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "pfmix/fem.hpp"
#include "pfmix/material.hpp"
#include "pfmix/mesh.hpp"
#include "pfmix/metrics.hpp"
#include "pfmix/mixture.hpp"
#include "pfmix/phasefield.hpp"
#include "pfmix/surrogate.hpp"

namespace pfmix {

struct StepperConfig {
  double du0 = 1e-3;
  double gamma = 0.5;
  double du_min = 0.0;  // 0 -> du0 * gamma^6
  double du_max = 0.0;  // 0 -> du0
  double u_target = 0.0;
};

struct StaggerConfig {
  int k_max = 3;
  double tol_u = 1e-6;
  double u_floor = 1e-12;
};

enum class FailureKind { none, mechanical, phasefield };

struct StepOutcome {
  bool accepted = false;
  double du_used = 0.0;
  int stagger_iters = 0;
  int nr_iters_total = 0;
  FailureKind failure_kind = FailureKind::none;
  bool phi_changed = false;
};

// Boundary conditions for a named loading setup; driven dof values scale
// with the prescribed displacement.
struct Experiment {
  std::vector<DirichletBC> bcs;  // value = scale at unit displacement
  std::vector<double> scale;     // parallel to bcs
  std::vector<int> reaction_dofs;
};

Experiment make_experiment(const Mesh& promoted, const std::string& name);

struct SimConfig {
  MixMode mode = MixMode::phase_field;
  double b = 10.0;
  double tau = 0.01;
  PhaseFieldParams pf;
  StepperConfig stepping;
  StaggerConfig stagger;
  NewtonConfig newton;
  double snapshot_du = 0.0;  // record full fields at multiples of this u
};

struct Snapshot {
  double u_level = 0.0;
  std::vector<Eigen::Vector3d> stress;
  std::vector<double> phi;
  std::vector<PlasticState> state;
};

// One loading simulation: owns the promoted mesh, the FEM system, the
// mixture bookkeeping, and the committed state between steps.
class Simulation {
 public:
  Simulation(const Mesh& t3_mesh, const std::string& experiment, const Material& mat,
             Surrogate* surrogate, const SimConfig& cfg);
  ~Simulation();

  StepOutcome staggered_step(double du);
  RunMetrics run();

  const Mesh& mesh() const { return mesh_; }
  const FemSystem& fem() const { return fem_; }
  const MixtureModel& mixture() const { return *mix_; }
  const Eigen::VectorXd& displacement() const { return u_c_; }
  const Eigen::VectorXd& phi_nodal() const { return phi_nodal_c_; }
  double u_level() const { return u_level_; }
  double reaction() const { return F_c_; }
  const std::vector<Snapshot>& snapshots() const { return snapshots_; }
  const SimConfig& config() const { return cfg_; }
  PhaseCounts last_phase_counts() const { return last_counts_; }

  void write_fields_vtk(const std::string& path) const;

 private:
  struct UncertaintyState {
    std::vector<double> value;
    std::vector<char> exact;
    std::vector<Eigen::Vector3d> eps;  // strains the values were computed at
  };

  void compute_uncertainty(const Eigen::VectorXd& u, UncertaintyState& out) const;
  // Phase update for one staggered iteration; refines uncertainty bounds
  // around active regions until the solution is trustworthy.
  bool update_phi(UncertaintyState& U, Eigen::VectorXd& phi_nodal,
                  std::vector<double>& phi_ips) const;

  Mesh mesh_;  // promoted
  FemSystem fem_;
  Experiment exp_;
  DofMap dofs_;
  Material mat_;
  Surrogate* sur_;
  std::unique_ptr<Surrogate> zero_sur_;  // owns the stand-in for full mode
  SimConfig cfg_;
  std::unique_ptr<MixtureModel> mix_;
  mutable LinearSolver solver_;

  // committed state
  Eigen::VectorXd u_c_;
  Eigen::VectorXd phi_nodal_c_;
  std::vector<Eigen::Vector3d> eps_c_;
  double u_level_ = 0.0;
  double F_c_ = 0.0;
  int steps_accepted_ = 0;

  long long nr_cum_ = 0;
  PhaseCounts last_counts_;
  std::vector<Snapshot> snapshots_;
};

// Plain-text run configuration (key = value), strict about unknown keys.
struct RunConfig {
  std::string mesh_path;
  std::string experiment;
  std::string mode = "phase-field";
  std::string model_path;  // optional for full mode
  std::string output_dir = ".";
  double E = 0.0, nu = 0.0, sigma_inf = 0.0, delta_sigma = 0.0, eps_ref = 0.0;
  SimConfig sim;
};

RunConfig load_run_config(const std::string& path);

// Executes a full run: mesh + model loading, simulation, metrics CSV and a
// final field snapshot in the output directory. Returns the metrics.
RunMetrics execute_run(const RunConfig& cfg, std::string* csv_path_out = nullptr);

}  // namespace pfmix
