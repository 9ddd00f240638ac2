// Timings for the kernels that dominate a run: residual/tangent assembly in
// serial vs threaded form, strain gathering, and batched surrogate variance.
// Build with OpenMP and set OMP_NUM_THREADS to see scaling; single-core hosts
// show parity (the threaded path costs nothing extra).

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "pfmix/fem.hpp"
#include "pfmix/fixtures.hpp"
#include "pfmix/material.hpp"
#include "pfmix/surrogate.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace pfmix;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <typename F>
double best_of(int reps, F&& body) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    body();
    best = std::min(best, ms_since(t0));
  }
  return best;
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("threads available: %d\n", omp_get_max_threads());
#else
  std::printf("threads available: 1 (built without OpenMP)\n");
#endif

  const Material mat = make_material(3130.0, 0.37, 64.80, 33.60, 0.003407);
  const Mesh mesh = promote_to_t6(build_holes(60, 30, 0.13));
  FemSystem fem(mesh);
  std::printf("mesh: %d elements, %d ips, %d dofs\n\n", fem.n_elements(), fem.n_ips(),
              fem.n_dofs());

  // displacement with plastic-range strains and some roughness
  Eigen::VectorXd u(fem.n_dofs());
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> jig(-5e-4, 5e-4);
  for (int i = 0; i < fem.n_dofs() / 2; ++i) {
    const Eigen::Vector2d p = mesh.nodes[i];
    u[2 * i] = 0.015 * p.x() + jig(rng);
    u[2 * i + 1] = -0.006 * p.y() + jig(rng);
  }

  const ConstitutiveFn fn = [&](int, int, const Eigen::Vector3d& eps, ConstitutiveResponse& out) {
    const HFResult h = update_stress(eps, PlasticState{}, mat);
    if (!h.converged) return false;
    out = h.resp;
    return true;
  };
  const DofMap dofs = make_dofmap(mesh.n_nodes(), {{0, 0, u[0]}, {0, 1, u[1]}});

  Eigen::VectorXd r;
  SpMat K;
  const double asm_ser = best_of(5, [&] { fem.assemble(u, fn, dofs, r, &K, nullptr, false); });
  const double asm_par = best_of(5, [&] { fem.assemble(u, fn, dofs, r, &K, nullptr, true); });
  std::printf("assemble r+K      serial %8.2f ms   threaded %8.2f ms   speedup %.2fx\n", asm_ser,
              asm_par, asm_ser / asm_par);

  const double res_ser = best_of(5, [&] { fem.assemble(u, fn, dofs, r, nullptr, nullptr, false); });
  const double res_par = best_of(5, [&] { fem.assemble(u, fn, dofs, r, nullptr, nullptr, true); });
  std::printf("assemble r only   serial %8.2f ms   threaded %8.2f ms   speedup %.2fx\n", res_ser,
              res_par, res_ser / res_par);

  std::vector<Eigen::Vector3d> eps;
  const double strain_ms = best_of(5, [&] { fem.strains(u, eps); });
  std::printf("strain gather     %8.2f ms (threaded)\n\n", strain_ms);

  // batched predictive variance on a trained surrogate
  const TrainingDataset data = generate_training_data(10, 1, mat);
  const auto sur = fit_surrogate(data, mat, 1);
  UncertaintyBatch ub;
  const double var_ms = best_of(5, [&] { sur->uncertainty_batch(eps, ub); });
  std::printf("variance batch    %8.2f ms for %zu points (%d training samples)\n", var_ms,
              eps.size(), sur->component(0).n());

  int exact = 0;
  for (char e : ub.exact) exact += e;
  std::printf("  exact values: %d / %zu (rest are subset upper bounds)\n", exact, ub.exact.size());
  return 0;
}
