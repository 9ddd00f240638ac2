#include "pfmix/mixture.hpp"

#include <cmath>
#include <stdexcept>

namespace pfmix {

MixMode parse_mix_mode(const std::string& s) {
  if (s == "phase-field") return MixMode::phase_field;
  if (s == "local-linear") return MixMode::local_linear;
  if (s == "local-step") return MixMode::local_step;
  if (s == "full") return MixMode::full_hf;
  throw std::invalid_argument("unknown mode '" + s +
                              "' (expected phase-field, local-linear, local-step, full)");
}

std::string mix_mode_name(MixMode m) {
  switch (m) {
    case MixMode::phase_field: return "phase-field";
    case MixMode::local_linear: return "local-linear";
    case MixMode::local_step: return "local-step";
    case MixMode::full_hf: return "full";
  }
  return "?";
}

double local_phi(double U, double b, MixMode mode) {
  switch (mode) {
    case MixMode::local_linear: {
      double v = U - b;
      if (v < 0.0) v = 0.0;
      if (v > 1.0) v = 1.0;
      return v;
    }
    case MixMode::local_step:
      return U >= b ? 1.0 : 0.0;
    case MixMode::full_hf:
      return 1.0;
    default:
      throw std::invalid_argument("local_phi: not a local rule");
  }
}

MixtureModel::MixtureModel(const Material& mat, Surrogate* sur, int n_ips, double tau)
    : mat_(&mat), sur_(sur), n_ips_(n_ips), tau_(tau) {
  if (n_ips <= 0) throw std::invalid_argument("MixtureModel: need at least one point");
  if (!sur) throw std::invalid_argument("MixtureModel: surrogate required");
  if (!(tau > 0.0 && tau < 0.5)) throw std::invalid_argument("MixtureModel: tau out of range");
  sur->attach_hf_counter(&hf_evals_);
  phi_c_.assign(n_ips, 0.0);
  U_c_.assign(n_ips, 0.0);
  U_exact_c_.assign(n_ips, 1);
  plastic_.assign(n_ips, PlasticState{});
  traced_.assign(n_ips, 0);
  history_.resize(n_ips);
  stress_c_.assign(n_ips, Eigen::Vector3d::Zero());
  phi_active_.assign(n_ips, 0.0);
  tentative_.assign(n_ips, PlasticState{});
  stress_tent_.assign(n_ips, Eigen::Vector3d::Zero());
}

void MixtureModel::begin_attempt() {
  tentative_ = plastic_;
  phi_active_ = phi_c_;
  sur_->begin_attempt();
  in_attempt_ = true;
}

bool MixtureModel::prepare_iteration(const std::vector<double>& phi_ips, int* fail_ip) {
  if (!in_attempt_) throw std::logic_error("prepare_iteration outside an attempt");
  if (static_cast<int>(phi_ips.size()) != n_ips_)
    throw std::invalid_argument("prepare_iteration: weight count mismatch");
  phi_active_ = phi_ips;

  int first_fail = n_ips_;
#pragma omp parallel for schedule(dynamic, 16) reduction(min : first_fail)
  for (int ip = 0; ip < n_ips_; ++ip) {
    if (phi_active_[ip] < tau_ || traced_[ip] == committed_steps_) continue;
    PlasticState st = plastic_[ip];
    bool ok = true;
    for (int j = traced_[ip]; j < committed_steps_; ++j) {
      const HFResult r = update_stress(history_[ip][j], st, *mat_);
      hf_evals_.fetch_add(1, std::memory_order_relaxed);
      if (!r.converged) {
        ok = false;
        break;
      }
      st = r.state;
    }
    if (ok) {
      plastic_[ip] = st;
      traced_[ip] = committed_steps_;
      tentative_[ip] = st;
    } else {
      first_fail = std::min(first_fail, ip);
    }
  }
  if (first_fail < n_ips_) {
    if (fail_ip) *fail_ip = first_fail;
    return false;
  }
  return true;
}

bool MixtureModel::evaluate(int ip, const Eigen::Vector3d& eps, ConstitutiveResponse& out) {
  const double phi = phi_active_[ip];
  if (phi < tau_) {
    if (!sur_->response(ip, eps, out)) return false;
    stress_tent_[ip] = out.stress;
    return true;
  }
  const HFResult r = update_stress(eps, plastic_[ip], *mat_);
  hf_evals_.fetch_add(1, std::memory_order_relaxed);
  if (!r.converged) return false;
  tentative_[ip] = r.state;
  if (phi > 1.0 - tau_) {
    out = r.resp;
  } else {
    ConstitutiveResponse gp;
    if (!sur_->response(ip, eps, gp)) return false;
    out.stress = phi * r.resp.stress + (1.0 - phi) * gp.stress;
    out.tangent = phi * r.resp.tangent + (1.0 - phi) * gp.tangent;
  }
  stress_tent_[ip] = out.stress;
  return true;
}

void MixtureModel::commit(const std::vector<Eigen::Vector3d>& eps_conv,
                          const std::vector<double>& U_new, const std::vector<char>& U_exact,
                          const std::vector<double>& phi_ips) {
  if (!in_attempt_) throw std::logic_error("commit without a prepared attempt");
  if (static_cast<int>(eps_conv.size()) != n_ips_ || static_cast<int>(U_new.size()) != n_ips_ ||
      static_cast<int>(U_exact.size()) != n_ips_ || static_cast<int>(phi_ips.size()) != n_ips_)
    throw std::invalid_argument("commit: size mismatch");

  unload_count_ = 0;
  for (int ip = 0; ip < n_ips_; ++ip) {
    if (phi_ips[ip] < tau_ && !history_[ip].empty()) {
      const Eigen::Vector3d s_new = mat_->De * eps_conv[ip];
      const Eigen::Vector3d s_old = mat_->De * history_[ip].back();
      if (von_mises_plane(s_new) < von_mises_plane(s_old)) ++unload_count_;
    }
    history_[ip].push_back(eps_conv[ip]);
  }
  ++committed_steps_;
  for (int ip = 0; ip < n_ips_; ++ip) {
    if (phi_ips[ip] >= tau_) {
      plastic_[ip] = tentative_[ip];
      traced_[ip] = committed_steps_;
    }
    stress_c_[ip] = stress_tent_[ip];
  }
  phi_c_ = phi_ips;
  U_c_ = U_new;
  U_exact_c_ = U_exact;
  sur_->commit(eps_conv);
  in_attempt_ = false;
}

}  // namespace pfmix
