#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pfmix/gp.hpp"
#include "pfmix/material.hpp"

namespace pfmix {

struct TrainingSample {
  int curve = 0;
  int step = 0;
  Eigen::Vector3d eps = Eigen::Vector3d::Zero();
  Eigen::Vector3d sig = Eigen::Vector3d::Zero();  // raw stress, not correction
};

struct TrainingDataset {
  std::vector<TrainingSample> samples;
  std::uint64_t seed = 0;
  int n_curves = 0;
  int redraws = 0;
};

// Proportional-loading curves: per curve a direction uniform on the unit
// sphere in (exx, eyy, gxy), 20 committed HF steps to strain norm 0.10.
// Non-converging curves are redrawn with the next sub-seed.
TrainingDataset generate_training_data(int n_curves, std::uint64_t seed, const Material& mat);

void write_dataset_csv(const TrainingDataset& d, const std::string& path);
TrainingDataset read_dataset_csv(const std::string& path);

// Per-IP uncertainty values; `exact` marks entries that are true posterior
// deviations rather than cheap upper bounds.
struct UncertaintyBatch {
  std::vector<double> value;
  std::vector<char> exact;
};

// Constitutive surrogate as seen by the mixture: a stress/tangent response
// per integration point plus batched predictive uncertainty.
class Surrogate {
 public:
  virtual ~Surrogate() = default;

  // False return signals an internal constitutive failure.
  virtual bool response(int ip, const Eigen::Vector3d& eps, ConstitutiveResponse& out) = 0;

  virtual void uncertainty_batch(const std::vector<Eigen::Vector3d>& eps,
                                 UncertaintyBatch& out) const = 0;
  // Upgrades the listed IPs to exact uncertainty values.
  virtual void refine_uncertainty(const std::vector<Eigen::Vector3d>& eps,
                                  const std::vector<int>& ips,
                                  UncertaintyBatch& out) const = 0;

  virtual void begin_attempt() {}
  virtual void commit(const std::vector<Eigen::Vector3d>& eps_converged) { (void)eps_converged; }
  // Surrogates that internally consume the plastic model report into the
  // caller's evaluation ledger.
  virtual void attach_hf_counter(std::atomic<long long>* counter) { (void)counter; }
};

// Three independent GPs predicting corrections to the linear elastic stress.
class GPSurrogate : public Surrogate {
 public:
  GPSurrogate(GPModel gx, GPModel gy, GPModel gxy, const Eigen::Matrix3d& De, double E,
              double nu);

  bool response(int ip, const Eigen::Vector3d& eps, ConstitutiveResponse& out) override;
  void uncertainty_batch(const std::vector<Eigen::Vector3d>& eps,
                         UncertaintyBatch& out) const override;
  void refine_uncertainty(const std::vector<Eigen::Vector3d>& eps, const std::vector<int>& ips,
                          UncertaintyBatch& out) const override;

  // Exact stress/variance probe used by tests and tooling.
  void probe(const Eigen::Vector3d& eps, Eigen::Vector3d& stress, double& U) const;

  const GPModel& component(int c) const;
  const Eigen::Matrix3d& De() const { return De_; }
  double E() const { return E_; }
  double nu() const { return nu_; }
  double max_sf() const;

  void save(const std::string& path) const;
  static std::unique_ptr<GPSurrogate> load(const std::string& path);

 private:
  GPModel gp_[3];
  GPModel sub_[3];  // stride-sampled subset models, variance upper bound
  bool use_subset_ = false;
  Eigen::Matrix3d De_;
  double E_ = 0.0, nu_ = 0.0;
};

// Full surrogate pipeline: hyperparameter optimization per component on
// correction targets, then exact fits.
std::unique_ptr<GPSurrogate> fit_surrogate(const TrainingDataset& data, const Material& mat,
                                           std::uint64_t seed);

// HF model wrapped in the surrogate interface with zero uncertainty; the
// oracle twin for hybrid-vs-pure equivalence checks. Shares the caller's
// HF evaluation counter.
class PerfectSurrogate : public Surrogate {
 public:
  PerfectSurrogate(const Material& mat, int n_ips, std::atomic<long long>* hf_counter = nullptr);
  void attach_hf_counter(std::atomic<long long>* counter) override { counter_ = counter; }

  bool response(int ip, const Eigen::Vector3d& eps, ConstitutiveResponse& out) override;
  void uncertainty_batch(const std::vector<Eigen::Vector3d>& eps,
                         UncertaintyBatch& out) const override;
  void refine_uncertainty(const std::vector<Eigen::Vector3d>& eps, const std::vector<int>& ips,
                          UncertaintyBatch& out) const override;
  void begin_attempt() override;
  void commit(const std::vector<Eigen::Vector3d>& eps_converged) override;

  const PlasticState& committed_state(int ip) const { return committed_[ip]; }

 private:
  Material mat_;
  std::vector<PlasticState> committed_, tentative_;
  std::vector<char> touched_;
  std::atomic<long long>* counter_;
};

}  // namespace pfmix
