// Acceptance harness: one PASS/FAIL line per shipping criterion, each with its
// pinned tolerance and the measured value. Heavyweight inputs (trained
// surrogate models) are cached on disk in the work directory so repeated runs
// only pay for the simulations themselves.
//
//   acceptance_tests [--workdir DIR] [--only 1,5,8] [--list]
//
// Exit code is the number of failed criteria.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pfmix/driver.hpp"
#include "pfmix/fem.hpp"
#include "pfmix/fixtures.hpp"
#include "pfmix/gp.hpp"
#include "pfmix/material.hpp"
#include "pfmix/mesh.hpp"
#include "pfmix/metrics.hpp"
#include "pfmix/mixture.hpp"
#include "pfmix/phasefield.hpp"
#include "pfmix/surrogate.hpp"

namespace {

using namespace pfmix;

double now_s() {
  using clk = std::chrono::steady_clock;
  return std::chrono::duration<double>(clk::now().time_since_epoch()).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// ---------------------------------------------------------------------------
// shared context: material, cached models, memoized simulation runs

struct RunResult {
  RunMetrics metrics;
  FuCurve fu;
  std::vector<Snapshot> snaps;
  long long hf_final = 0;
  int n_ips = 0;
  bool solved = false;
  double wall_s = 0.0;
};

struct Ctx {
  std::string work;
  Material mat = make_material(3130.0, 0.37, 64.80, 33.60, 0.003407);
  std::map<std::string, std::unique_ptr<GPSurrogate>> models;
  std::map<std::string, RunResult> runs;
  double train_wall_s = 0.0;  // time spent training models (cache misses)

  GPSurrogate* model(int curves, std::uint64_t seed) {
    const std::string key = fmt("gp%d_s%llu", curves, (unsigned long long)seed);
    auto it = models.find(key);
    if (it != models.end()) return it->second.get();
    const std::string path = work + "/" + key + ".model";
    std::unique_ptr<GPSurrogate> m;
    if (std::filesystem::exists(path)) {
      m = GPSurrogate::load(path);
    } else {
      const double t0 = now_s();
      const TrainingDataset d = generate_training_data(curves, seed, mat);
      m = fit_surrogate(d, mat, seed);
      m->save(path);
      train_wall_s += now_s() - t0;
    }
    GPSurrogate* p = m.get();
    models[key] = std::move(m);
    return p;
  }

  const RunResult& run(const std::string& key, const std::function<RunResult()>& make) {
    auto it = runs.find(key);
    if (it != runs.end()) return it->second;
    return runs[key] = make();
  }
};

RunResult do_run(const Mesh& t3, const std::string& experiment, const Material& mat,
                 Surrogate* sur, const SimConfig& cfg) {
  const double t0 = now_s();
  Simulation sim(t3, experiment, mat, sur, cfg);
  RunResult rr;
  rr.metrics = sim.run();
  rr.solved = rr.metrics.solved;
  rr.fu = fu_curve(rr.metrics);
  rr.snaps = sim.snapshots();
  rr.n_ips = sim.fem().n_ips();
  rr.hf_final = rr.metrics.rows.empty() ? 0 : rr.metrics.rows.back().hf_evals_cum;
  rr.wall_s = now_s() - t0;
  return rr;
}

SimConfig base_cfg(MixMode mode, double du0, double u_target, int k_max, double b) {
  SimConfig c;
  c.mode = mode;
  c.b = b;
  c.tau = 0.01;
  c.pf.eps = 1e-2;
  c.pf.omega = 1e-3;
  c.pf.b = b;
  c.pf.tol = 1e-8;
  c.pf.max_iter = 50;
  c.stepping.du0 = du0;
  c.stepping.gamma = 0.5;
  c.stepping.u_target = u_target;
  c.stagger.k_max = k_max;
  c.stagger.tol_u = 1e-6;
  c.newton.rtol = 1e-8;
  c.newton.atol = 1e-10;
  c.newton.max_iter = 25;
  return c;
}

// mean |F_a - F_b| per shared grid point
double mean_fu_error(const FuCurve& a, const FuCurve& b, double du, double u_max,
                     FuErrorReport* rep_out = nullptr) {
  const FuErrorReport r = fu_error(a, b, du, u_max);
  if (rep_out) *rep_out = r;
  return r.n_points > 0 ? r.error / r.n_points : 0.0;
}

double mean_phi_active(const RunMetrics& m) {
  double s = 0.0;
  int n = 0;
  for (const auto& r : m.rows)
    if (r.accepted) {
      s += r.n_ips_mixed + r.n_ips_hf;
      ++n;
    }
  return n > 0 ? s / n : 0.0;
}

// snapshot lookup keyed by the nearest multiple of the snapshot spacing
std::map<long long, const Snapshot*> snap_index(const RunResult& r, double snap_du) {
  std::map<long long, const Snapshot*> out;
  for (const auto& s : r.snaps) out[llround(s.u_level / snap_du)] = &s;
  return out;
}

// mean absolute per-component stress difference between two IP fields
double stress_mae(const std::vector<Eigen::Vector3d>& a, const std::vector<Eigen::Vector3d>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    for (int c = 0; c < 3; ++c) s += std::abs(a[i][c] - b[i][c]);
  return s / (3.0 * static_cast<double>(a.size()));
}

// zero-uncertainty linear-elastic stand-in used by the ledger checks
struct ElasticZeroU final : Surrogate {
  Eigen::Matrix3d De;
  explicit ElasticZeroU(const Eigen::Matrix3d& d) : De(d) {}
  bool response(int, const Eigen::Vector3d& eps, ConstitutiveResponse& out) override {
    out.stress = De * eps;
    out.tangent = De;
    return true;
  }
  void uncertainty_batch(const std::vector<Eigen::Vector3d>& eps,
                         UncertaintyBatch& out) const override {
    out.value.assign(eps.size(), 0.0);
    out.exact.assign(eps.size(), 1);
  }
  void refine_uncertainty(const std::vector<Eigen::Vector3d>&, const std::vector<int>&,
                          UncertaintyBatch&) const override {}
};

struct Result {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// 1. perfect-surrogate oracle equivalence on the dogbone

Result c1_oracle_equivalence(Ctx& ctx) {
  const double t0 = now_s();
  const Mesh dog = build_dogbone(60, 12);
  const int n_ips = 3 * dog.n_elements();

  const RunResult& full = ctx.run("dog_c1_full", [&] {
    return do_run(dog, "tension-x", ctx.mat, nullptr,
                  base_cfg(MixMode::full_hf, 2e-3, 0.1, 3, 1.0));
  });
  const RunResult& twin = ctx.run("dog_c1_perfect", [&] {
    PerfectSurrogate ps(ctx.mat, n_ips);
    return do_run(dog, "tension-x", ctx.mat, &ps,
                  base_cfg(MixMode::phase_field, 2e-3, 0.1, 3, 1.0));
  });

  bool same_seq = full.solved && twin.solved &&
                  full.metrics.rows.size() == twin.metrics.rows.size();
  double max_rel_f = 0.0;
  int n_acc = 0;
  if (same_seq) {
    for (size_t i = 0; i < full.metrics.rows.size(); ++i) {
      const MetricsRow& a = full.metrics.rows[i];
      const MetricsRow& b = twin.metrics.rows[i];
      if (a.step != b.step || a.accepted != b.accepted || a.u != b.u || a.du != b.du) {
        same_seq = false;
        break;
      }
      if (a.accepted) {
        ++n_acc;
        const double den = std::max(std::abs(a.F), std::abs(b.F));
        if (den > 0.0) max_rel_f = std::max(max_rel_f, std::abs(a.F - b.F) / den);
      }
    }
  }
  const double wall = now_s() - t0;
  const bool pass = same_seq && max_rel_f <= 1e-10 && wall <= 120.0;
  return {pass, fmt("identical step sequence=%s (%d accepted), max rel F diff %.2e (tol 1e-10), "
                    "%.1f s (limit 120)",
                    same_seq ? "yes" : "NO", n_acc, max_rel_f, wall)};
}

// ---------------------------------------------------------------------------
// 2. plasticity suite on randomized two-leg strain paths

Result c2_plasticity(Ctx& ctx) {
  const Material& mat = ctx.mat;
  std::mt19937 rng(42);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> amp1(0.005, 0.04), amp2(0.002, 0.02);
  auto rand_dir = [&] {
    Eigen::Vector3d d(gauss(rng), gauss(rng), gauss(rng));
    return Eigen::Vector3d(d / d.norm());
  };

  const double sy0 = yield_stress(mat, 0.0);
  const bool y0_exact = sy0 == 31.20;

  int n_plastic = 0;
  double worst_yield = 0.0, worst_szz = 0.0, worst_fd = 0.0;
  bool dep_ok = true, conv_ok = true;

  // independent out-of-plane check: recover the elastic zz strain the
  // in-plane stress implies, then evaluate sigma_zz from the 3D law
  auto sigma_zz = [&](const Eigen::Vector3d& eps, const HFResult& r) {
    const double la = mat.lambda, mu = mat.mu;
    const double ee_xx = eps(0) - r.state.ep(0);
    const double ee_yy = eps(1) - r.state.ep(1);
    const double ee_zz = (r.resp.stress(0) - (la + 2.0 * mu) * ee_xx - la * ee_yy) / la;
    return la * (ee_xx + ee_yy + ee_zz) + 2.0 * mu * ee_zz;
  };

  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d e1 = amp1(rng) * rand_dir();
    const HFResult r1 = update_stress(e1, PlasticState{}, mat);
    const Eigen::Vector3d e2 = e1 + amp2(rng) * rand_dir();
    const HFResult r2 = update_stress(e2, r1.state, mat);
    if (!r1.converged || !r2.converged) {
      conv_ok = false;
      continue;
    }
    dep_ok = dep_ok && r1.state.ep_eq >= 0.0 && r2.state.ep_eq >= r1.state.ep_eq;
    for (const auto* rp : {&r1, &r2}) {
      const HFResult& r = *rp;
      const Eigen::Vector3d& e = rp == &r1 ? e1 : e2;
      worst_szz = std::max(worst_szz, std::abs(sigma_zz(e, r)));
      if (r.plastic) {
        ++n_plastic;
        const double sy = yield_stress(mat, r.state.ep_eq);
        worst_yield = std::max(worst_yield,
                               std::abs(von_mises_plane(r.resp.stress) - sy) / sy);
      }
    }
    // consistent tangent vs central finite differences around e2
    const double h = 1e-7;
    for (int k = 0; k < 2; ++k) {
      const Eigen::Vector3d d = rand_dir();
      const HFResult rp = update_stress(e2 + h * d, r1.state, mat);
      const HFResult rm = update_stress(e2 - h * d, r1.state, mat);
      if (!rp.converged || !rm.converged) continue;
      const Eigen::Vector3d fd = (rp.resp.stress - rm.resp.stress) / (2.0 * h);
      const Eigen::Vector3d an = r2.resp.tangent * d;
      worst_fd = std::max(worst_fd, (an - fd).norm() / std::max(an.norm(), 1e-12));
    }
  }

  const bool pass = y0_exact && conv_ok && dep_ok && worst_yield <= 1e-8 &&
                    worst_szz <= 1e-9 * mat.E && worst_fd <= 1e-4;
  return {pass, fmt("yield(0)==31.20 %s; |vm-sy|/sy max %.1e (tol 1e-8, %d plastic); "
                    "|szz| max %.1e (tol %.1e); dep_eq>=0 %s; tangent FD max %.1e (tol 1e-4)",
                    y0_exact ? "exact" : "NO", worst_yield, n_plastic, worst_szz, 1e-9 * mat.E,
                    dep_ok ? "yes" : "NO", worst_fd)};
}

// ---------------------------------------------------------------------------
// 3. Gaussian-process suite

Result c3_gp(Ctx& ctx) {
  // (a) one-point posterior against the closed form
  Kernel k1{2.0, 0.05, 0.3};
  Eigen::Matrix<double, Eigen::Dynamic, 3> X1(1, 3);
  X1 << 0.01, 0.02, -0.005;
  Eigen::VectorXd y1(1);
  y1 << 0.7;
  const GPModel m1 = fit(X1, y1, k1);
  double err1 = 0.0;
  for (const Eigen::Vector3d xq : {Eigen::Vector3d(0.01, 0.02, -0.005),
                                   Eigen::Vector3d(0.03, -0.01, 0.02)}) {
    const double kq = kernel_eval(xq, X1.row(0).transpose(), k1);
    const double den = k1.sf * k1.sf + k1.sn * k1.sn + m1.jitter;
    const double mu_cf = kq * y1(0) / den;
    const double var_cf = k1.sf * k1.sf - kq * kq / den;
    const auto [mu, var] = predict(m1, xq);
    err1 = std::max(err1, std::abs(mu - mu_cf));
    err1 = std::max(err1, std::abs(var - var_cf));
  }

  // (b) dense-solve oracle at n = 20
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> box(-0.05, 0.05);
  Kernel k2{1.5, 0.08, 1e-2};
  const int n = 20;
  Eigen::Matrix<double, Eigen::Dynamic, 3> X2(n, 3);
  Eigen::VectorXd y2(n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) X2(i, c) = box(rng);
    y2(i) = std::sin(25.0 * X2(i, 0)) + 0.5 * std::cos(40.0 * X2(i, 1)) + X2(i, 2);
  }
  const GPModel m2 = fit(X2, y2, k2);
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      K(i, j) = kernel_eval(X2.row(i).transpose(), X2.row(j).transpose(), k2);
  K.diagonal().array() += k2.sn * k2.sn + m2.jitter;
  const Eigen::LLT<Eigen::MatrixXd> llt(K);
  double err2 = 0.0;
  for (int t = 0; t < 5; ++t) {
    const Eigen::Vector3d xq(box(rng), box(rng), box(rng));
    Eigen::VectorXd ks(n);
    for (int i = 0; i < n; ++i) ks(i) = kernel_eval(xq, X2.row(i).transpose(), k2);
    const double mu_o = ks.dot(llt.solve(y2));
    const double var_o = k2.sf * k2.sf - ks.dot(llt.solve(ks));
    const auto [mu, var] = predict(m2, xq);
    err2 = std::max(err2, std::abs(mu - mu_o) / std::max(1.0, std::abs(mu_o)));
    err2 = std::max(err2, std::abs(var - var_o) / std::max(1.0, std::abs(var_o)));
  }

  // (c) far-field reversion of the fitted surrogate to the elastic stress
  GPSurrogate* sur = ctx.model(10, 1);
  double max_ell = 0.0, max_sf = sur->max_sf();
  for (int c = 0; c < 3; ++c) max_ell = std::max(max_ell, sur->component(c).kernel.ell);
  const double dist = 10.0 * max_ell + 0.15;  // >= 10 ell from every training point
  const Eigen::Vector3d far = dist / std::sqrt(3.0) * Eigen::Vector3d::Ones();
  Eigen::Vector3d s_far;
  double u_far = 0.0;
  sur->probe(far, s_far, u_far);
  const double err3 = (s_far - sur->De() * far).norm();

  // (d) length-scale recovery on data drawn from a known kernel
  Kernel kt{5.0, 0.05, 0.05};
  std::mt19937 rng2(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> box2(-0.08, 0.08);
  const int nr = 100;
  Eigen::Matrix<double, Eigen::Dynamic, 3> X3(nr, 3);
  for (int i = 0; i < nr; ++i)
    for (int c = 0; c < 3; ++c) X3(i, c) = box2(rng2);
  Eigen::MatrixXd K3(nr, nr);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nr; ++j)
      K3(i, j) = kernel_eval(X3.row(i).transpose(), X3.row(j).transpose(), kt);
  K3.diagonal().array() += 1e-12;
  Eigen::VectorXd z(nr);
  for (int i = 0; i < nr; ++i) z(i) = gauss(rng2);
  Eigen::VectorXd y3 = Eigen::LLT<Eigen::MatrixXd>(K3).matrixL() * z;
  for (int i = 0; i < nr; ++i) y3(i) += kt.sn * gauss(rng2);
  const OptimizeResult opt = optimize_hyperparameters(X3, y3, 3);
  const double ratio = opt.kernel.ell / kt.ell;
  const bool rec_ok = ratio >= 0.5 && ratio <= 2.0;

  const bool pass = err1 <= 1e-12 && err2 <= 1e-9 && err3 <= 1e-6 * max_sf && rec_ok;
  return {pass, fmt("1-pt closed form %.1e (tol 1e-12); dense oracle n=20 %.1e (tol 1e-9); "
                    "far-field correction %.1e (tol %.1e); ell recovery x%.2f (tol [0.5,2])",
                    err1, err2, err3, 1e-6 * max_sf, ratio)};
}

// ---------------------------------------------------------------------------
// 4. phase-field suite

Result c4_phasefield(Ctx&) {
  const Mesh m = generate_rectangle(24, 6, 1.0, 0.25);
  PhaseFieldParams p;
  p.eps = 0.05;
  p.omega = 1e-3;
  p.b = 1.0;
  const Eigen::VectorXd half = Eigen::VectorXd::Constant(m.n_vertex_nodes, 0.5);

  // zero driving force -> phi identically 0
  DrivingField d0;
  d0.u_elem.assign(m.t3.size(), 0.0);
  const PhaseSolveResult r0 = solve_phase(m, half, d0, p);
  bool zero_ok = r0.converged;
  for (int i = 0; i < m.n_vertex_nodes && zero_ok; ++i) zero_ok = r0.phi[i] == 0.0;

  // uniform supercritical driving: U - b exceeds the largest double-well
  // force (omega/(6 sqrt 3)), so the only stationary point is the upper bound
  DrivingField d1;
  d1.u_elem.assign(m.t3.size(), p.b + p.omega);
  const PhaseSolveResult r1 = solve_phase(m, half, d1, p);
  bool one_ok = r1.converged;
  for (int i = 0; i < m.n_vertex_nodes && one_ok; ++i) one_ok = r1.phi[i] == 1.0;

  // bounds on a half-driven strip
  const Mesh strip = build_strip(120, 2, 3.0, 0.05);
  PhaseFieldParams ps;
  ps.eps = 0.15;
  ps.omega = 1e-3;
  ps.b = 1.0;
  DrivingField ds;
  ds.u_elem.assign(strip.t3.size(), 0.0);
  for (int e = 0; e < strip.n_elements(); ++e)
    if (tri_centroid(strip, e).x() < 1.0) ds.u_elem[e] = ps.b + 1.0;
  const Eigen::VectorXd half_s = Eigen::VectorXd::Constant(strip.n_vertex_nodes, 0.5);
  const PhaseSolveResult rs = solve_phase(strip, half_s, ds, ps);
  bool bounds_ok = rs.converged;
  for (int i = 0; i < strip.n_vertex_nodes && bounds_ok; ++i)
    bounds_ok = rs.phi[i] >= 0.0 && rs.phi[i] <= 1.0;

  // interface width from the 0.95/0.05 crossings along the bottom edge
  double width = -1.0;
  if (bounds_ok) {
    std::vector<std::pair<double, double>> prof;  // (x, phi) at y == 0
    for (int i = 0; i < strip.n_vertex_nodes; ++i)
      if (strip.nodes[i].y() == 0.0) prof.emplace_back(strip.nodes[i].x(), rs.phi[i]);
    std::sort(prof.begin(), prof.end());
    auto cross = [&](double level) {
      for (size_t i = 0; i + 1 < prof.size(); ++i) {
        const auto [xa, fa] = prof[i];
        const auto [xb, fb] = prof[i + 1];
        if ((fa - level) * (fb - level) <= 0.0 && fa != fb)
          return xa + (level - fa) / (fb - fa) * (xb - xa);
      }
      return -1.0;
    };
    const double x_hi = cross(0.95), x_lo = cross(0.05);
    if (x_hi >= 0.0 && x_lo > x_hi) width = x_lo - x_hi;
  }
  const bool width_ok = width >= 2.0 * ps.eps && width <= 8.0 * ps.eps;

  // Jacobian vs central finite differences
  const Mesh mj = generate_rectangle(5, 3, 1.0, 0.6);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.15, 0.85);
  Eigen::VectorXd phi(mj.n_vertex_nodes);
  for (int i = 0; i < mj.n_vertex_nodes; ++i) phi[i] = u(rng);
  DrivingField dj;
  dj.u_elem.assign(mj.t3.size(), 0.8);
  PhaseFieldParams pj;
  pj.eps = 0.08;
  pj.omega = 0.7;
  pj.b = 0.5;
  const Eigen::MatrixXd J = Eigen::MatrixXd(phase_jacobian(mj, phi, pj));
  const double h = 1e-6;
  double fd_err = 0.0;
  for (int j = 0; j < mj.n_vertex_nodes; ++j) {
    Eigen::VectorXd pp = phi, pm = phi;
    pp[j] += h;
    pm[j] -= h;
    const Eigen::VectorXd fd =
        (phase_residual(mj, pp, dj, pj) - phase_residual(mj, pm, dj, pj)) / (2.0 * h);
    for (int i = 0; i < mj.n_vertex_nodes; ++i)
      fd_err = std::max(fd_err, std::abs(J(i, j) - fd[i]) / std::max(1.0, std::abs(J(i, j))));
  }

  const bool pass = zero_ok && one_ok && bounds_ok && width_ok && fd_err <= 1e-5;
  return {pass, fmt("U=0 -> phi=0 %s; supercritical -> phi=1 %s; bounds %s; "
                    "width %.3f in [%.2f, %.2f]; jacobian FD %.1e (tol 1e-5)",
                    zero_ok ? "yes" : "NO", one_ok ? "yes" : "NO", bounds_ok ? "yes" : "NO",
                    width, 2.0 * ps.eps, 8.0 * ps.eps)};
}

// ---------------------------------------------------------------------------
// dogbone study runs shared by criteria 5 and 6

constexpr double kDogTarget = 0.2;
constexpr double kSnapDu = 0.005;

const RunResult& dog_ref(Ctx& ctx) {
  return ctx.run("dog_ref_hf", [&] {
    SimConfig c = base_cfg(MixMode::full_hf, 5e-4, kDogTarget, 3, 1.0);
    c.snapshot_du = kSnapDu;
    return do_run(build_dogbone(60, 12), "tension-x", ctx.mat, nullptr, c);
  });
}

const RunResult& dog_hybrid(Ctx& ctx, int k_max, double du) {
  const std::string key = fmt("dog_gp10_k%d_du%g", k_max, du);
  return ctx.run(key, [&] {
    SimConfig c = base_cfg(MixMode::phase_field, du, kDogTarget, k_max, 1.0);
    c.snapshot_du = kSnapDu;
    return do_run(build_dogbone(60, 12), "tension-x", ctx.mat, ctx.model(10, 1), c);
  });
}

// ---------------------------------------------------------------------------
// 5. staggered iterations remove the load-step-size dependency

Result c5_timestep_consistency(Ctx& ctx) {
  const double t0 = now_s();
  const RunResult& ref = dog_ref(ctx);
  const RunResult& a3 = dog_hybrid(ctx, 3, 1e-3);
  const RunResult& b3 = dog_hybrid(ctx, 3, 5e-4);
  const RunResult& a1 = dog_hybrid(ctx, 1, 1e-3);
  const RunResult& b1 = dog_hybrid(ctx, 1, 5e-4);
  const double wall = now_s() - t0;

  if (!(ref.solved && a3.solved && b3.solved && a1.solved && b1.solved))
    return {false, "a dogbone run failed to reach the target displacement"};

  // displacement window where the phase field is evolving (from kmax=3, du=1e-3)
  double w_lo = 1e300, w_hi = -1e300;
  for (const auto& r : a3.metrics.rows)
    if (r.accepted && r.phi_changed) {
      w_lo = std::min(w_lo, r.u);
      w_hi = std::max(w_hi, r.u);
    }
  if (w_hi < w_lo) return {false, "phase field never evolved on the dogbone"};

  // mean absolute stress error vs the all-HF fields at shared snapshots
  const auto ref_idx = snap_index(ref, kSnapDu);
  auto run_err = [&](const RunResult& r, bool windowed, int* n_out) {
    double s = 0.0;
    int n = 0;
    for (const auto& [lvl, snap] : snap_index(r, kSnapDu)) {
      const auto it = ref_idx.find(lvl);
      if (it == ref_idx.end()) continue;
      if (windowed && (snap->u_level < w_lo - 1e-12 || snap->u_level > w_hi + 1e-12)) continue;
      s += stress_mae(snap->stress, it->second->stress);
      ++n;
    }
    if (n_out) *n_out = n;
    return n > 0 ? s / n : -1.0;
  };
  auto rel_gap = [](double x, double y) {
    return std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-300});
  };

  int na = 0, nb = 0, nwa = 0, nwb = 0;
  const double e3a = run_err(a3, false, &na), e3b = run_err(b3, false, &nb);
  const double e3aw = run_err(a3, true, &nwa), e3bw = run_err(b3, true, &nwb);
  const double e1aw = run_err(a1, true, nullptr), e1bw = run_err(b1, true, nullptr);
  if (na < 10 || nb < 10 || nwa < 2 || nwb < 2)
    return {false, fmt("too few shared snapshots (full %d/%d, window %d/%d)", na, nb, nwa, nwb)};

  const double gap3 = rel_gap(e3a, e3b);
  const double gap3w = rel_gap(e3aw, e3bw);
  const double gap1w = rel_gap(e1aw, e1bw);

  const bool pass = gap3 <= 0.05 && gap1w > std::max(0.05, gap3w) && wall + 1e-9 <= 600.0;
  return {pass, fmt("kmax=3 step-size gap %.1f%% (tol 5%%); phi window u=[%.3f,%.3f]: "
                    "kmax=1 gap %.1f%% > kmax=3 gap %.1f%%; %.0f s (limit 600)",
                    100.0 * gap3, w_lo, w_hi, 100.0 * gap1w, 100.0 * gap3w, wall)};
}

// ---------------------------------------------------------------------------
// 6. hybrid tracks the reference; surrogate alone does not

Result c6_hybrid_accuracy(Ctx& ctx) {
  const RunResult& ref = dog_ref(ctx);
  const RunResult& hyb = dog_hybrid(ctx, 3, 1e-3);
  const RunResult& gp_only = ctx.run("dog_gp10_pure", [&] {
    // opposing force far above any attainable uncertainty: the step rule then
    // never hands a point to the plastic model
    SimConfig c = base_cfg(MixMode::local_step, 1e-3, kDogTarget, 3, 1e30);
    return do_run(build_dogbone(60, 12), "tension-x", ctx.mat, ctx.model(10, 1), c);
  });

  if (!(ref.solved && hyb.solved)) return {false, "reference or hybrid dogbone run failed"};

  // common comparable range in case the pure-surrogate run stopped early
  const double u_gp_end = gp_only.fu.u.empty() ? 0.0 : gp_only.fu.u.back();
  const double u_max = std::min({kDogTarget, u_gp_end > 0.0 ? u_gp_end : kDogTarget});
  const double e_hyb = mean_fu_error(hyb.fu, ref.fu, 1e-3, u_max);
  const double e_gp = mean_fu_error(gp_only.fu, ref.fu, 1e-3, u_max);
  const double ratio = e_hyb > 0.0 ? e_gp / e_hyb : 1e300;

  double peak_ref = 0.0, peak_hyb = 0.0;
  for (double f : ref.fu.F) peak_ref = std::max(peak_ref, f);
  for (double f : hyb.fu.F) peak_hyb = std::max(peak_hyb, f);
  const double peak_err = std::abs(peak_hyb - peak_ref) / peak_ref;

  const bool pass = ratio >= 10.0 && peak_err <= 0.02 && gp_only.hf_final == 0;
  return {pass, fmt("surrogate-only/hybrid F-u error ratio %.1f (tol >= 10, common u <= %.3f); "
                    "hybrid peak-force error %.2f%% (tol 2%%); surrogate-only HF evals %lld",
                    ratio, u_max, 100.0 * peak_err, gp_only.hf_final)};
}

// ---------------------------------------------------------------------------
// notched-plate runs shared by criteria 7 and 9

constexpr double kNotchTarget = 0.02;
constexpr double kNotchDu0 = 1e-3;

Mesh notched_mesh() { return build_notched(0.04, 0.08); }

const RunResult& notched_pf(Ctx& ctx, double b) {
  const std::string key = fmt("notch_pf_b%g", b);
  return ctx.run(key, [&] {
    return do_run(notched_mesh(), "tension-y", ctx.mat, ctx.model(100, 1),
                  base_cfg(MixMode::phase_field, kNotchDu0, kNotchTarget, 3, b));
  });
}

const RunResult& notched_ref(Ctx& ctx) {
  return ctx.run("notch_ref_hf", [&] {
    return do_run(notched_mesh(), "tension-y", ctx.mat, nullptr,
                  base_cfg(MixMode::full_hf, kNotchDu0, kNotchTarget, 3, 1.0));
  });
}

// ---------------------------------------------------------------------------
// 7. opposing force b throttles the high-fidelity phase

Result c7_opposing_force(Ctx& ctx) {
  const RunResult& r0 = notched_pf(ctx, 0.0);
  const RunResult& r1 = notched_pf(ctx, 1.0);
  const RunResult& r10 = notched_pf(ctx, 10.0);

  const double a0 = mean_phi_active(r0.metrics);
  const double a1 = mean_phi_active(r1.metrics);
  const double a10 = mean_phi_active(r10.metrics);
  const bool active_mono = a0 >= a1 && a1 >= a10;

  // cumulative HF evaluations, compared among converged runs only
  std::vector<std::pair<double, long long>> conv;
  if (r0.solved) conv.emplace_back(0.0, r0.hf_final);
  if (r1.solved) conv.emplace_back(1.0, r1.hf_final);
  if (r10.solved) conv.emplace_back(10.0, r10.hf_final);
  bool hf_mono = true;
  for (size_t i = 0; i + 1 < conv.size(); ++i) hf_mono = hf_mono && conv[i].second >= conv[i + 1].second;

  const bool pass = active_mono && hf_mono && conv.size() >= 2;
  return {pass, fmt("mean n(phi>tau) %.1f >= %.1f >= %.1f (b=0,1,10); hf evals %s across %zu "
                    "converged runs (solved: %d/%d/%d)",
                    a0, a1, a10, hf_mono ? "non-increasing" : "NOT monotone", conv.size(),
                    (int)r0.solved, (int)r1.solved, (int)r10.solved)};
}

// ---------------------------------------------------------------------------
// 8. trained surrogates cut high-fidelity work on the plate with holes

Result c8_acceleration(Ctx& ctx) {
  const double t0 = now_s();
  const double train0 = ctx.train_wall_s;
  const Mesh holes = build_holes(40, 20, 0.13);
  const double u_target = 0.03, du0 = 1e-3;

  const RunResult& full = ctx.run("holes_ref_hf", [&] {
    return do_run(holes, "tension-x", ctx.mat, nullptr,
                  base_cfg(MixMode::full_hf, du0, u_target, 3, 1.0));
  });

  double hf100 = 0.0, hf10 = 0.0;
  int solved100 = 0, solved10 = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const RunResult& g100 = ctx.run(fmt("holes_gp100_s%llu", (unsigned long long)seed), [&] {
      return do_run(holes, "tension-x", ctx.mat, ctx.model(100, seed),
                    base_cfg(MixMode::phase_field, du0, u_target, 3, 1.0));
    });
    const RunResult& g10 = ctx.run(fmt("holes_gp10_s%llu", (unsigned long long)seed), [&] {
      return do_run(holes, "tension-x", ctx.mat, ctx.model(10, seed),
                    base_cfg(MixMode::phase_field, du0, u_target, 3, 1.0));
    });
    hf100 += static_cast<double>(g100.hf_final) / 3.0;
    hf10 += static_cast<double>(g10.hf_final) / 3.0;
    solved100 += g100.solved;
    solved10 += g10.solved;
  }

  const double wall = now_s() - t0;
  const double train_s = ctx.train_wall_s - train0;
  const double frac = hf100 / static_cast<double>(full.hf_final);
  const bool pass = full.solved && solved100 == 3 && solved10 == 3 && frac <= 0.5 &&
                    hf10 > hf100 && wall <= 1800.0;
  return {pass, fmt("GP-100 HF evals %.0f = %.0f%% of all-HF %lld (tol <= 50%%); GP-10 %.0f > "
                    "GP-100 (3 seeds, solved %d/%d); %.0f s incl. %.0f s training (limit 1800)",
                    hf100, 100.0 * frac, full.hf_final, hf10, solved100, solved10, wall,
                    train_s)};
}

// ---------------------------------------------------------------------------
// 9. PDE-free local rules track the phase field at b = 1

Result c9_local_parity(Ctx& ctx) {
  const RunResult& ref = notched_ref(ctx);
  const RunResult& pf = notched_pf(ctx, 1.0);
  const RunResult& ls = ctx.run("notch_ls_b1", [&] {
    return do_run(notched_mesh(), "tension-y", ctx.mat, ctx.model(100, 1),
                  base_cfg(MixMode::local_step, kNotchDu0, kNotchTarget, 3, 1.0));
  });
  const RunResult& ll = ctx.run("notch_ll_b1", [&] {
    return do_run(notched_mesh(), "tension-y", ctx.mat, ctx.model(100, 1),
                  base_cfg(MixMode::local_linear, kNotchDu0, kNotchTarget, 3, 1.0));
  });

  if (!(ref.solved && pf.solved && ls.solved && ll.solved))
    return {false, fmt("notched runs must all solve (ref %d, pf %d, step %d, linear %d)",
                       (int)ref.solved, (int)pf.solved, (int)ls.solved, (int)ll.solved)};

  const double e_pf = mean_fu_error(pf.fu, ref.fu, kNotchDu0, kNotchTarget);
  const double e_ls = mean_fu_error(ls.fu, ref.fu, kNotchDu0, kNotchTarget);
  const double parity = std::abs(e_ls - e_pf) / std::max(e_ls, e_pf);

  const double m_pf = mean_phi_active(pf.metrics);
  const double m_ls = mean_phi_active(ls.metrics);
  const double m_ll = mean_phi_active(ll.metrics);
  const bool fewer = m_ls <= m_pf && m_ll <= m_pf;

  const bool pass = parity <= 0.2 && fewer;
  return {pass, fmt("F-u error: local-step %.3f vs phase-field %.3f (gap %.0f%%, tol 20%%); "
                    "mean n(phi>tau): step %.1f, linear %.1f <= phase-field %.1f %s",
                    e_ls, e_pf, 100.0 * parity, m_ls, m_ll, m_pf, fewer ? "yes" : "NO")};
}

// ---------------------------------------------------------------------------
// 10. the high-fidelity evaluation ledger is exact

Result c10_accounting(Ctx& ctx) {
  // (a) closed-form ledger on a proportional elastic run: the first step costs
  // two assemblies (initial residual + the accepted Newton trial), every later
  // step converges on its scaled warm start in a single assembly
  const Material m_el = make_material(1000.0, 0.0, 1e6, 100.0, 0.01);
  const Mesh strip = build_strip(8, 4, 2.0, 1.0);
  SimConfig c = base_cfg(MixMode::full_hf, 1e-3, 5e-3, 3, 1.0);
  const RunResult el = do_run(strip, "tension-x", m_el, nullptr, c);
  const long long n_ips = 3LL * strip.n_elements();
  bool elastic_ok = el.solved && el.metrics.rows.size() == 5;
  long long prev = 0;
  for (size_t i = 0; elastic_ok && i < el.metrics.rows.size(); ++i) {
    const long long delta = el.metrics.rows[i].hf_evals_cum - prev;
    prev = el.metrics.rows[i].hf_evals_cum;
    elastic_ok = delta == (i == 0 ? 2 * n_ips : n_ips);
  }

  // (b) retraced history is charged to the step that performs the retrace
  const Material& mat = ctx.mat;
  ElasticZeroU sur(mat.De);
  MixtureModel mix(mat, &sur, 3, 0.01);
  const std::vector<double> all_gp(3, 0.0);
  const std::vector<double> mixed{0.8, 0.0, 0.5};
  const std::vector<char> exact(3, 1);
  const std::vector<double> zeros(3, 0.0);
  ConstitutiveResponse resp;
  const Eigen::Vector3d e1(0.004, -0.001, 0.002), e2(0.008, -0.002, 0.004),
      e3(0.012, -0.003, 0.006);
  for (const Eigen::Vector3d& e : {e1, e2}) {
    mix.begin_attempt();
    mix.prepare_iteration(all_gp);
    for (int ip = 0; ip < 3; ++ip) mix.evaluate(ip, e, resp);
    mix.commit({e, e, e}, zeros, exact, all_gp);
  }
  const long long before = mix.hf_evals();
  mix.begin_attempt();
  mix.prepare_iteration(mixed);  // ips 0 and 2 re-enter: 2 committed steps each
  const long long retraced = mix.hf_evals() - before;
  for (int ip = 0; ip < 3; ++ip) mix.evaluate(ip, e3, resp);
  const long long with_evals = mix.hf_evals() - before;
  mix.commit({e3, e3, e3}, zeros, exact, mixed);
  mix.begin_attempt();
  mix.prepare_iteration(mixed);  // already materialized: no further retracing
  const long long after_repeat = mix.hf_evals() - before;
  const bool retrace_ok = before == 0 && retraced == 4 && with_evals == 6 && after_repeat == 6;

  // (c) two independent instruments agree on the oracle pair: the full-mode
  // mixture counts its own plastic-model calls, the wrapped-surrogate twin
  // counts through the adapter
  const Result c1 = c1_oracle_equivalence(ctx);  // ensures both runs exist
  const RunResult& full = ctx.runs.at("dog_c1_full");
  const RunResult& twin = ctx.runs.at("dog_c1_perfect");
  bool cross_ok = c1.pass && full.metrics.rows.size() == twin.metrics.rows.size();
  for (size_t i = 0; cross_ok && i < full.metrics.rows.size(); ++i)
    cross_ok = full.metrics.rows[i].hf_evals_cum == twin.metrics.rows[i].hf_evals_cum;

  const bool pass = elastic_ok && retrace_ok && cross_ok;
  return {pass, fmt("elastic closed-form ledger %s (%lld evals); retrace charged in-step %s "
                    "(4 retraced + 2 live); cross-instrument rows equal %s (final %lld)",
                    elastic_ok ? "exact" : "NO", el.hf_final, retrace_ok ? "yes" : "NO",
                    cross_ok ? "yes" : "NO", full.hf_final)};
}

// ---------------------------------------------------------------------------
// 11. FEM fundamentals: patch test, global tangent, mirror symmetry

Result c11_fem(Ctx& ctx) {
  // (a) affine patch test: boundary-prescribed affine field is reproduced
  // exactly at every interior node and integration point
  const Mesh patch_t3 = build_strip(3, 3, 1.0, 1.0);
  const Mesh patch = promote_to_t6(patch_t3);
  FemSystem fem(patch);
  const Eigen::Matrix2d A = (Eigen::Matrix2d() << 0.01, 0.003, 0.002, -0.004).finished();
  auto affine = [&](const Eigen::Vector2d& x) { return Eigen::Vector2d(A * x); };
  std::vector<DirichletBC> bcs;
  for (int n = 0; n < patch.n_nodes(); ++n) {
    const Eigen::Vector2d& p = patch.nodes[n];
    const bool bdry = p.x() == 0.0 || p.x() == 1.0 || p.y() == 0.0 || p.y() == 1.0;
    if (!bdry) continue;
    const Eigen::Vector2d v = affine(p);
    bcs.push_back({n, 0, v.x()});
    bcs.push_back({n, 1, v.y()});
  }
  const DofMap dofs = make_dofmap(patch.n_nodes(), bcs);
  const Material& mat = ctx.mat;
  const ConstitutiveFn elastic = [&](int, int, const Eigen::Vector3d& eps,
                                     ConstitutiveResponse& out) {
    out.stress = mat.De * eps;
    out.tangent = mat.De;
    return true;
  };
  Eigen::VectorXd u = Eigen::VectorXd::Zero(fem.n_dofs());
  LinearSolver solver;
  const NewtonReport rep = fem.solve_newton(u, elastic, dofs, solver, NewtonConfig{});
  const Eigen::Vector3d exx(A(0, 0), A(1, 1), A(0, 1) + A(1, 0));
  double patch_err = 0.0;
  for (int n = 0; n < patch.n_nodes(); ++n) {
    const Eigen::Vector2d v = affine(patch.nodes[n]);
    patch_err = std::max(patch_err, std::abs(u[2 * n] - v.x()));
    patch_err = std::max(patch_err, std::abs(u[2 * n + 1] - v.y()));
  }
  std::vector<Eigen::Vector3d> eps_ips;
  fem.strains(u, eps_ips);
  for (const auto& e : eps_ips) patch_err = std::max(patch_err, (e - exx).norm());
  const bool patch_ok = rep.converged && patch_err <= 1e-10;

  // (b) assembled tangent vs central finite differences in the plastic range
  const Mesh tan_mesh = promote_to_t6(build_strip(3, 2, 1.5, 1.0));
  FemSystem fem2(tan_mesh);
  std::vector<PlasticState> committed(fem2.n_ips());
  const ConstitutiveFn plastic_fn = [&](int e, int q, const Eigen::Vector3d& eps,
                                        ConstitutiveResponse& out) {
    const HFResult r = update_stress(eps, committed[e * fem2.n_ips_per_elem() + q], mat);
    out = r.resp;
    return r.converged;
  };
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> jig(-1e-3, 1e-3);
  Eigen::VectorXd u2(fem2.n_dofs());
  const Eigen::Matrix2d Ap = (Eigen::Matrix2d() << 0.02, 0.005, 0.005, -0.015).finished();
  for (int n = 0; n < tan_mesh.n_nodes(); ++n) {
    const Eigen::Vector2d v = Ap * tan_mesh.nodes[n];
    u2[2 * n] = v.x() + jig(rng);
    u2[2 * n + 1] = v.y() + jig(rng);
  }
  const DofMap free_dofs = make_dofmap(tan_mesh.n_nodes(), {{0, 0, u2[0]}, {0, 1, u2[1]}});
  Eigen::VectorXd r0(fem2.n_dofs());
  SpMat K;
  NewtonReport arep;
  if (!fem2.assemble(u2, plastic_fn, free_dofs, r0, &K, &arep, false))
    return {false, "tangent fixture failed to assemble"};
  auto free_residual = [&](const Eigen::VectorXd& uu) {
    Eigen::VectorXd rf(fem2.n_dofs());
    fem2.assemble(uu, plastic_fn, free_dofs, rf, nullptr, nullptr, false);
    Eigen::VectorXd out(free_dofs.n_free);
    for (int d = 0; d < fem2.n_dofs(); ++d)
      if (free_dofs.free_index[d] >= 0) out[free_dofs.free_index[d]] = rf[d];
    return out;
  };
  std::normal_distribution<double> gauss(0.0, 1.0);
  double tan_err = 0.0;
  for (int t = 0; t < 3; ++t) {
    Eigen::VectorXd d = Eigen::VectorXd::NullaryExpr(free_dofs.n_free,
                                                     [&](Eigen::Index) { return gauss(rng); });
    d /= d.norm();
    Eigen::VectorXd du = Eigen::VectorXd::Zero(fem2.n_dofs());
    for (int dof = 0; dof < fem2.n_dofs(); ++dof)
      if (free_dofs.free_index[dof] >= 0) du[dof] = d[free_dofs.free_index[dof]];
    const double h = 1e-6;
    const Eigen::VectorXd fd = (free_residual(u2 + h * du) - free_residual(u2 - h * du)) / (2.0 * h);
    const Eigen::VectorXd an = K * d;
    tan_err = std::max(tan_err, (an - fd).norm() / an.norm());
  }
  const bool tan_ok = tan_err <= 1e-5;

  // (c) mirror symmetry of a plastic solve on the waisted bar (the alternating
  // diagonal pattern is symmetric about the mid-height line for even ny)
  const Mesh dog = build_dogbone(30, 6);
  const RunResult run = do_run(dog, "tension-x", mat, nullptr,
                               base_cfg(MixMode::full_hf, 1e-2, 0.08, 3, 1.0));
  if (!run.solved) return {false, "symmetric-fixture run failed"};
  Simulation sim(dog, "tension-x", mat, nullptr, base_cfg(MixMode::full_hf, 1e-2, 0.08, 3, 1.0));
  sim.run();
  const Mesh& pm = sim.mesh();
  const Eigen::VectorXd& us = sim.displacement();
  double asym = 0.0;
  int paired = 0;
  for (int i = 0; i < pm.n_nodes(); ++i) {
    const Eigen::Vector2d& p = pm.nodes[i];
    if (p.y() < 0.0) continue;  // pair each upper node with its reflection
    int j = -1;
    for (int k = 0; k < pm.n_nodes(); ++k)
      if (std::abs(pm.nodes[k].x() - p.x()) <= 1e-9 && std::abs(pm.nodes[k].y() + p.y()) <= 1e-9) {
        j = k;
        break;
      }
    if (j < 0) continue;
    ++paired;
    asym = std::max(asym, std::abs(us[2 * i] - us[2 * j]));
    asym = std::max(asym, std::abs(us[2 * i + 1] + us[2 * j + 1]));
  }
  const bool sym_ok = paired > pm.n_nodes() / 3 && asym <= 1e-9;

  const bool pass = patch_ok && tan_ok && sym_ok;
  return {pass, fmt("patch test %.1e (tol 1e-10); tangent FD %.1e (tol 1e-5); "
                    "mirror asymmetry %.1e over %d pairs (tol 1e-9)",
                    patch_err, tan_err, asym, paired)};
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  const char* name;
  Result (*fn)(Ctx&);
};

const Criterion kCriteria[] = {
    {1, "oracle equivalence", c1_oracle_equivalence},
    {2, "plasticity suite", c2_plasticity},
    {3, "gaussian-process suite", c3_gp},
    {4, "phase-field suite", c4_phasefield},
    {5, "time-step consistency", c5_timestep_consistency},
    {6, "hybrid accuracy", c6_hybrid_accuracy},
    {7, "opposing-force monotonicity", c7_opposing_force},
    {8, "acceleration", c8_acceleration},
    {9, "local-mode parity", c9_local_parity},
    {10, "accounting exactness", c10_accounting},
    {11, "fem fundamentals", c11_fem},
};

}  // namespace

int main(int argc, char** argv) {
  std::string workdir = "acceptance_work";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--workdir" && i + 1 < argc) {
      workdir = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    } else if (a == "--list") {
      for (const Criterion& c : kCriteria) std::printf("%2d  %s\n", c.id, c.name);
      return 0;
    } else {
      std::fprintf(stderr, "usage: %s [--workdir DIR] [--only 1,5,8] [--list]\n", argv[0]);
      return 1;
    }
  }
  std::filesystem::create_directories(workdir);

  Ctx ctx;
  ctx.work = workdir;
  int failures = 0, ran = 0;
  std::printf("acceptance run; work directory: %s\n", workdir.c_str());
  for (const Criterion& c : kCriteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    ++ran;
    const double t0 = now_s();
    Result r;
    try {
      r = c.fn(ctx);
    } catch (const std::exception& e) {
      r = {false, fmt("exception: %s", e.what())};
    }
    if (!r.pass) ++failures;
    std::printf("[%2d] %s  %s: %s  (%.1f s)\n", c.id, r.pass ? "PASS" : "FAIL", c.name,
                r.detail.c_str(), now_s() - t0);
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failures, ran);
  return failures;
}
