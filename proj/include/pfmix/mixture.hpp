#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <vector>

#include "pfmix/material.hpp"
#include "pfmix/surrogate.hpp"

namespace pfmix {

enum class MixMode { phase_field, local_linear, local_step, full_hf };

MixMode parse_mix_mode(const std::string& s);
std::string mix_mode_name(MixMode m);

// PDE-free per-point rules mapping uncertainty to a model weight.
double local_phi(double U, double b, MixMode mode);

// Per-IP blend of the plastic model and a surrogate, with committed strain
// history so points can be handed back to the plastic model mid-run.
class MixtureModel {
 public:
  MixtureModel(const Material& mat, Surrogate* sur, int n_ips, double tau);

  int n_ips() const { return n_ips_; }
  double tau() const { return tau_; }
  int committed_steps() const { return committed_steps_; }
  long long hf_evals() const { return hf_evals_.load(std::memory_order_relaxed); }
  std::atomic<long long>* hf_counter() { return &hf_evals_; }

  // Starts a fresh attempt; resets tentative state, keeps committed state.
  void begin_attempt();
  // Called once per staggered iteration with the weights frozen for the next
  // mechanical solve. Replays committed strains through the plastic model for
  // points re-entering it; false (with the point index) if a replay fails.
  bool prepare_iteration(const std::vector<double>& phi_ips, int* fail_ip = nullptr);
  // Thread-safe across distinct ip values.
  bool evaluate(int ip, const Eigen::Vector3d& eps, ConstitutiveResponse& out);
  // Accepts the attempt: appends strains, materializes plastic states where
  // the plastic model was active, records weights and uncertainties.
  void commit(const std::vector<Eigen::Vector3d>& eps_conv, const std::vector<double>& U_new,
              const std::vector<char>& U_exact, const std::vector<double>& phi_ips);

  const std::vector<double>& phi_committed() const { return phi_c_; }
  const std::vector<double>& U_committed() const { return U_c_; }
  const std::vector<char>& U_committed_exact() const { return U_exact_c_; }
  const std::vector<Eigen::Vector3d>& stress_committed() const { return stress_c_; }
  const std::vector<PlasticState>& plastic_states() const { return plastic_; }
  const std::vector<int>& traced_through() const { return traced_; }
  const std::vector<std::vector<Eigen::Vector3d>>& history() const { return history_; }
  // Points whose committed elastic-stress magnitude dropped in the last step
  // while the surrogate carried them; a proxy for unloading blind spots.
  int last_unloading_count() const { return unload_count_; }

 private:
  const Material* mat_;
  Surrogate* sur_;
  int n_ips_;
  double tau_;

  int committed_steps_ = 0;
  std::vector<double> phi_c_, U_c_;
  std::vector<char> U_exact_c_;
  std::vector<PlasticState> plastic_;  // valid through traced_[ip] committed steps
  std::vector<int> traced_;
  std::vector<std::vector<Eigen::Vector3d>> history_;
  std::vector<Eigen::Vector3d> stress_c_;

  bool in_attempt_ = false;
  std::vector<double> phi_active_;
  std::vector<PlasticState> tentative_;
  std::vector<Eigen::Vector3d> stress_tent_;
  std::atomic<long long> hf_evals_{0};
  int unload_count_ = 0;
};

}  // namespace pfmix
