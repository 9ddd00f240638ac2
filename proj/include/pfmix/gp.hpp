#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

namespace pfmix {

struct Kernel {
  double sf = 1.0;   // signal amplitude
  double ell = 0.1;  // isotropic length scale
  double sn = 1e-3;  // noise amplitude
};

double kernel_eval(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Kernel& k);

struct GPModel {
  Eigen::Matrix<double, Eigen::Dynamic, 3> X;
  Eigen::VectorXd y;
  Kernel kernel;
  Eigen::MatrixXd L;  // lower Cholesky factor of K + (sn^2 + jitter) I
  Eigen::VectorXd alpha;
  double jitter = 0.0;

  int n() const { return static_cast<int>(y.size()); }
};

// Throws std::runtime_error when factorization fails at the maximum jitter.
GPModel fit(const Eigen::Matrix<double, Eigen::Dynamic, 3>& X, const Eigen::VectorXd& y,
            const Kernel& kernel);

// Posterior mean and latent variance (clamped at 0). O(n^2) per call.
std::pair<double, double> predict(const GPModel& m, const Eigen::Vector3d& x);

// Mean only, O(n); optional analytic gradient of the mean w.r.t. x.
double predict_mean(const GPModel& m, const Eigen::Vector3d& x,
                    Eigen::Vector3d* grad = nullptr);

// Batched posterior for many query points; var may be null when not needed.
void predict_batch(const GPModel& m, const Eigen::Matrix<double, Eigen::Dynamic, 3>& Xq,
                   Eigen::VectorXd* mu, Eigen::VectorXd* var);

double log_marginal_likelihood(const GPModel& m);

struct OptimizeResult {
  Kernel kernel;
  double lml = 0.0;
  bool line_search_warning = false;
};

// Best of `restarts` bounded quasi-Newton runs over log(sf, ell, sn);
// restart seeds come from a Halton sample of the bound box plus one
// data-driven start. Deterministic for a given seed.
OptimizeResult optimize_hyperparameters(const Eigen::Matrix<double, Eigen::Dynamic, 3>& X,
                                        const Eigen::VectorXd& y, std::uint64_t seed = 0,
                                        int restarts = 20);

// Log marginal likelihood and its gradient in log-parameter space; exposed
// for the finite-difference cross-check.
std::pair<double, Eigen::Vector3d> lml_value_and_grad(
    const Eigen::Matrix<double, Eigen::Dynamic, 3>& X, const Eigen::VectorXd& y,
    const Eigen::Vector3d& log_params);

double halton(int index, int base);

}  // namespace pfmix
