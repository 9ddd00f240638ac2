#include "pfmix/gp.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pfmix {

namespace {

using MatX3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;

constexpr double kJitterRel0 = 1e-10;
constexpr double kJitterRelMax = 1e-4;

Eigen::MatrixXd pairwise_sq_dist(const MatX3& X) {
  const Eigen::VectorXd n2 = X.rowwise().squaredNorm();
  Eigen::MatrixXd D2 = -2.0 * (X * X.transpose());
  D2.colwise() += n2;
  D2.rowwise() += n2.transpose();
  return D2.cwiseMax(0.0);
}

bool cholesky_lower(Eigen::MatrixXd& A) {
  const lapack_int n = static_cast<lapack_int>(A.rows());
  return LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', n, A.data(), n) == 0;
}

// K = sf^2 E + (sn^2 + jitter) I factored in place with escalating jitter.
bool factor_with_jitter(const Eigen::MatrixXd& E, const Kernel& k, Eigen::MatrixXd& L,
                        double& jitter_used) {
  const double sf2 = k.sf * k.sf, sn2 = k.sn * k.sn;
  for (double rel = kJitterRel0; rel <= kJitterRelMax * (1.0 + 1e-12); rel *= 10.0) {
    const double jit = rel * sf2;
    L = sf2 * E;
    L.diagonal().array() += sn2 + jit;
    if (cholesky_lower(L)) {
      jitter_used = jit;
      return true;
    }
  }
  return false;
}

void check_kernel(const Kernel& k) {
  if (!(k.sf > 0.0) || !(k.ell > 0.0) || !(k.sn > 0.0))
    throw std::invalid_argument("gp: kernel parameters must be strictly positive");
}

}  // namespace

double kernel_eval(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Kernel& k) {
  const double d2 = (a - b).squaredNorm();
  return k.sf * k.sf * std::exp(-d2 / (2.0 * k.ell * k.ell));
}

GPModel fit(const MatX3& X, const Eigen::VectorXd& y, const Kernel& kernel) {
  if (y.size() == 0 || X.rows() == 0) throw std::invalid_argument("gp fit: empty training set");
  if (X.rows() != y.size()) throw std::invalid_argument("gp fit: X/y size mismatch");
  if (!X.allFinite() || !y.allFinite()) throw std::invalid_argument("gp fit: non-finite data");
  check_kernel(kernel);

  GPModel m;
  m.X = X;
  m.y = y;
  m.kernel = kernel;

  const Eigen::MatrixXd D2 = pairwise_sq_dist(X);
  const Eigen::MatrixXd E = (-D2 / (2.0 * kernel.ell * kernel.ell)).array().exp();
  if (!factor_with_jitter(E, kernel, m.L, m.jitter)) {
    const double cond_est =
        (kernel.sf * kernel.sf * X.rows() + kernel.sn * kernel.sn) /
        (kernel.sn * kernel.sn + kJitterRelMax * kernel.sf * kernel.sf);
    throw std::runtime_error("gp fit: Cholesky failed at maximum jitter, condition estimate ~" +
                             std::to_string(cond_est));
  }

  m.alpha = m.L.triangularView<Eigen::Lower>().solve(y);
  m.L.triangularView<Eigen::Lower>().transpose().solveInPlace(m.alpha);
  return m;
}

std::pair<double, double> predict(const GPModel& m, const Eigen::Vector3d& x) {
  const Eigen::VectorXd d2 = (m.X.rowwise() - x.transpose()).rowwise().squaredNorm();
  const double sf2 = m.kernel.sf * m.kernel.sf;
  const Eigen::VectorXd kstar =
      sf2 * (-d2 / (2.0 * m.kernel.ell * m.kernel.ell)).array().exp();
  const double mu = kstar.dot(m.alpha);
  const Eigen::VectorXd v = m.L.triangularView<Eigen::Lower>().solve(kstar);
  const double var = std::max(0.0, sf2 - v.squaredNorm());
  return {mu, var};
}

double predict_mean(const GPModel& m, const Eigen::Vector3d& x, Eigen::Vector3d* grad) {
  const double inv2l2 = 1.0 / (2.0 * m.kernel.ell * m.kernel.ell);
  const double sf2 = m.kernel.sf * m.kernel.sf;
  const auto diff = (m.X.rowwise() - x.transpose()).eval();
  const Eigen::ArrayXd ka =
      sf2 * (-diff.rowwise().squaredNorm().array() * inv2l2).exp() * m.alpha.array();
  if (grad) {
    const double invl2 = 1.0 / (m.kernel.ell * m.kernel.ell);
    *grad = invl2 * (diff.transpose() * ka.matrix());
  }
  return ka.sum();
}

void predict_batch(const GPModel& m, const MatX3& Xq, Eigen::VectorXd* mu,
                   Eigen::VectorXd* var) {
  const int q = static_cast<int>(Xq.rows());
  const double sf2 = m.kernel.sf * m.kernel.sf;
  const double inv2l2 = 1.0 / (2.0 * m.kernel.ell * m.kernel.ell);

  Eigen::MatrixXd Ks = -2.0 * (m.X * Xq.transpose());  // n x q
  Ks.colwise() += m.X.rowwise().squaredNorm();
  Ks.rowwise() += Xq.rowwise().squaredNorm().transpose();
  Ks = (sf2 * (-Ks.cwiseMax(0.0) * inv2l2).array().exp()).matrix();

  if (mu) *mu = Ks.transpose() * m.alpha;
  if (var) {
    m.L.triangularView<Eigen::Lower>().solveInPlace(Ks);
    var->resize(q);
    for (int j = 0; j < q; ++j) (*var)(j) = std::max(0.0, sf2 - Ks.col(j).squaredNorm());
  }
}

double log_marginal_likelihood(const GPModel& m) {
  const double n = static_cast<double>(m.n());
  return -0.5 * m.y.dot(m.alpha) - m.L.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * M_PI);
}

namespace {

struct LmlWorkspace {
  const MatX3& X;
  const Eigen::VectorXd& y;
  Eigen::MatrixXd D2, E, L, G, M;
  Eigen::VectorXd alpha;
  double jit = 0.0;

  LmlWorkspace(const MatX3& X_, const Eigen::VectorXd& y_) : X(X_), y(y_) {
    D2 = pairwise_sq_dist(X);
  }

  // Returns false when even the maximum jitter cannot factorize K.
  // The gradient needs the explicit inverse (expensive), so line searches
  // pass g = nullptr and pay only for the factorization.
  bool eval(const Eigen::Vector3d& lp, double& f, Eigen::Vector3d* g) {
    const double sf2 = std::exp(2.0 * lp(0));
    const double l2 = std::exp(2.0 * lp(1));
    const double sn2 = std::exp(2.0 * lp(2));
    const int n = static_cast<int>(y.size());

    E = (-D2 / (2.0 * l2)).array().exp();
    jit = 0.0;
    Kernel k{std::sqrt(sf2), std::sqrt(l2), std::sqrt(sn2)};
    if (!factor_with_jitter(E, k, L, jit)) return false;

    alpha = L.triangularView<Eigen::Lower>().solve(y);
    L.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha);
    f = -0.5 * y.dot(alpha) - L.diagonal().array().log().sum() -
        0.5 * n * std::log(2.0 * M_PI);
    if (!g) return true;
    return grad_from_last(lp, *g);
  }

  // Gradient at the point eval() last factorized; reuses L/E/alpha.
  bool grad_from_last(const Eigen::Vector3d& lp, Eigen::Vector3d& g) {
    const double sf2 = std::exp(2.0 * lp(0));
    const double l2 = std::exp(2.0 * lp(1));
    const double sn2 = std::exp(2.0 * lp(2));
    const int n = static_cast<int>(y.size());

    G = L;
    const lapack_int ln = static_cast<lapack_int>(n);
    if (LAPACKE_dpotri(LAPACK_COL_MAJOR, 'L', ln, G.data(), ln) != 0) return false;
    G = G.selfadjointView<Eigen::Lower>();

    const Eigen::VectorXd Ea = E.selfadjointView<Eigen::Lower>() * alpha;
    const double aEa = alpha.dot(Ea);
    const double trGE = (G.array() * E.array()).sum();
    const double aa = alpha.squaredNorm();
    const double trG = G.trace();

    M = E.array() * D2.array();
    const Eigen::VectorXd Ma = M.selfadjointView<Eigen::Lower>() * alpha;

    g(0) = sf2 * (aEa - trGE) + jit * (aa - trG);
    g(1) = 0.5 * (sf2 / l2) * (alpha.dot(Ma) - (G.array() * M.array()).sum());
    g(2) = sn2 * (aa - trG);
    return true;
  }
};

struct BoxBounds {
  Eigen::Vector3d lo, hi;
  Eigen::Vector3d clip(const Eigen::Vector3d& x) const {
    return x.cwiseMax(lo).cwiseMin(hi);
  }
};

// Minimizes h = -lml over the box with an L-BFGS direction, projected
// backtracking line search, and memory resets on failure.
struct RestartOutcome {
  double best_f = -std::numeric_limits<double>::infinity();
  Eigen::Vector3d best_x = Eigen::Vector3d::Zero();
  bool made_step = false;
};

RestartOutcome lbfgs_restart(LmlWorkspace& ws, const BoxBounds& box,
                             const Eigen::Vector3d& x0, int max_iter,
                             double give_up_below = -std::numeric_limits<double>::infinity()) {
  RestartOutcome out;
  const int mem = 8;
  std::vector<Eigen::Vector3d> S, Y;

  auto track = [&](const Eigen::Vector3d& x, double f) {
    if (f > out.best_f) {
      out.best_f = f;
      out.best_x = x;
    }
  };
  // f-only: one factorization, no explicit inverse
  auto eval_f = [&](const Eigen::Vector3d& x, double& h) -> bool {
    double f;
    if (!ws.eval(x, f, nullptr)) return false;
    h = -f;
    track(x, f);
    return true;
  };
  auto eval_fg = [&](const Eigen::Vector3d& x, double& h, Eigen::Vector3d& g) -> bool {
    double f;
    Eigen::Vector3d gf;
    if (!ws.eval(x, f, &gf)) return false;
    h = -f;
    g = -gf;
    track(x, f);
    return true;
  };

  Eigen::Vector3d x = box.clip(x0), g;
  double h;
  if (!eval_fg(x, h, g)) return out;

  for (int it = 0; it < max_iter; ++it) {
    // A start stuck far below the incumbent after a full iteration is in a
    // hopeless basin; stop paying factorizations for it.
    if (it >= 1 && out.best_f < give_up_below) break;
    Eigen::Vector3d pg = g;
    for (int i = 0; i < 3; ++i) {
      if (x(i) <= box.lo(i) + 1e-14 && g(i) > 0) pg(i) = 0;
      if (x(i) >= box.hi(i) - 1e-14 && g(i) < 0) pg(i) = 0;
    }
    if (pg.lpNorm<Eigen::Infinity>() <= 1e-6 * std::max(1.0, std::abs(h))) break;

    // Two-loop recursion. Without curvature memory the raw gradient can be
    // O(n) in log space, so cap the fallback step at half a log unit.
    Eigen::Vector3d d = -pg * (0.5 / std::max(pg.lpNorm<Eigen::Infinity>(), 1e-300));
    if (!S.empty()) {
      std::vector<double> rho(S.size()), a(S.size());
      Eigen::Vector3d qv = pg;
      for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
        rho[i] = 1.0 / Y[i].dot(S[i]);
        a[i] = rho[i] * S[i].dot(qv);
        qv -= a[i] * Y[i];
      }
      const double gamma = S.back().dot(Y.back()) / Y.back().squaredNorm();
      qv *= gamma;
      for (size_t i = 0; i < S.size(); ++i) {
        const double b = rho[i] * Y[i].dot(qv);
        qv += (a[i] - b) * S[i];
      }
      d = -qv;
    }
    if (d.dot(pg) >= 0) {
      S.clear();
      Y.clear();
      d = -pg * (0.5 / std::max(pg.lpNorm<Eigen::Infinity>(), 1e-300));
    }

    double t = 1.0;
    bool accepted = false;
    Eigen::Vector3d xn, gn;
    double hn;
    for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
      xn = box.clip(x + t * d);
      if ((xn - x).lpNorm<Eigen::Infinity>() < 1e-16) break;
      if (!eval_f(xn, hn)) continue;
      if (hn <= h + 1e-4 * g.dot(xn - x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (S.empty()) break;
      S.clear();
      Y.clear();
      continue;
    }
    // the accepted point's factorization is still loaded; finish its gradient
    Eigen::Vector3d gf;
    if (!ws.grad_from_last(xn, gf)) break;
    gn = -gf;

    out.made_step = true;
    const Eigen::Vector3d s = xn - x, yv = gn - g;
    if (s.dot(yv) > 1e-12 * s.norm() * yv.norm()) {
      S.push_back(s);
      Y.push_back(yv);
      if (static_cast<int>(S.size()) > mem) {
        S.erase(S.begin());
        Y.erase(Y.begin());
      }
    }
    const double df = h - hn;
    x = xn;
    h = hn;
    g = gn;
    if (df <= 1e-7 * std::max({std::abs(h), std::abs(h + df), 1.0})) break;
  }
  return out;
}

}  // namespace

double halton(int index, int base) {
  double f = 1.0, r = 0.0;
  int i = index;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

std::pair<double, Eigen::Vector3d> lml_value_and_grad(const MatX3& X,
                                                      const Eigen::VectorXd& y,
                                                      const Eigen::Vector3d& log_params) {
  LmlWorkspace ws(X, y);
  double f;
  Eigen::Vector3d g;
  if (!ws.eval(log_params, f, &g))
    throw std::runtime_error("lml_value_and_grad: factorization failed");
  return {f, g};
}

OptimizeResult optimize_hyperparameters(const MatX3& X, const Eigen::VectorXd& y,
                                        std::uint64_t seed, int restarts) {
  if (y.size() < 2) throw std::invalid_argument("optimize_hyperparameters: need n >= 2");
  if (restarts < 1) throw std::invalid_argument("optimize_hyperparameters: need restarts >= 1");

  BoxBounds box;
  box.lo = Eigen::Vector3d(std::log(1e-2), std::log(1e-4), std::log(1e-6));
  box.hi = Eigen::Vector3d(std::log(1e3), std::log(1.0), std::log(10.0));

  LmlWorkspace ws(X, y);

  // Data-driven start: median pairwise distance and the target spread.
  const int n = static_cast<int>(y.size());
  std::vector<double> dist_sample;
  const long long total = static_cast<long long>(n) * n;
  const long long stride = std::max<long long>(1, total / 20000);
  for (long long t = 0; t < total; t += stride) {
    const int i = static_cast<int>(t / n), j = static_cast<int>(t % n);
    if (i < j) dist_sample.push_back(std::sqrt(ws.D2(i, j)));
  }
  double med = 0.1;
  if (!dist_sample.empty()) {
    auto mid = dist_sample.begin() + dist_sample.size() / 2;
    std::nth_element(dist_sample.begin(), mid, dist_sample.end());
    med = std::max(*mid, 1e-12);
  }
  const double y_std = std::sqrt((y.array() - y.mean()).square().mean());
  const double sf0 = y_std > 0 ? y_std : 1.0;

  std::vector<Eigen::Vector3d> starts;
  starts.push_back(box.clip(
      Eigen::Vector3d(std::log(sf0), std::log(med), std::log(std::max(0.1 * sf0, 1e-6)))));
  const int offset = 1 + static_cast<int>(seed % 512);
  for (int r = 1; r < restarts; ++r) {
    const int idx = offset + (r - 1);
    const Eigen::Vector3d u(halton(idx, 2), halton(idx, 3), halton(idx, 5));
    starts.push_back(box.lo + u.cwiseProduct(box.hi - box.lo));
  }

  // Screening pass with a short budget per restart, then a longer polish of
  // the leaders. Restarts trailing the incumbent badly after one iteration
  // are abandoned early; the eventual winner's basin always runs to budget,
  // and every restart's initial point is still evaluated.
  OptimizeResult res;
  double best_f = -std::numeric_limits<double>::infinity();
  Eigen::Vector3d best_x = starts[0];
  bool any_step = false;
  std::vector<std::pair<double, Eigen::Vector3d>> leaders;
  for (const auto& s : starts) {
    const RestartOutcome r = lbfgs_restart(ws, box, s, 6, best_f - 50.0);
    any_step = any_step || r.made_step;
    if (std::isfinite(r.best_f)) leaders.emplace_back(r.best_f, r.best_x);
    if (r.best_f > best_f) {
      best_f = r.best_f;
      best_x = r.best_x;
    }
  }
  std::stable_sort(leaders.begin(), leaders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  const int n_polish = std::min<int>(2, static_cast<int>(leaders.size()));
  for (int i = 0; i < n_polish; ++i) {
    const RestartOutcome r = lbfgs_restart(ws, box, leaders[i].second, 30);
    any_step = any_step || r.made_step;
    if (r.best_f > best_f) {
      best_f = r.best_f;
      best_x = r.best_x;
    }
  }
  if (!std::isfinite(best_f))
    throw std::runtime_error("optimize_hyperparameters: no feasible evaluation succeeded");

  res.kernel = Kernel{std::exp(best_x(0)), std::exp(best_x(1)), std::exp(best_x(2))};
  res.lml = best_f;
  res.line_search_warning = !any_step;
  return res;
}

}  // namespace pfmix
