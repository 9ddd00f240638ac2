#include "pfmix/cli.hpp"

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "pfmix/driver.hpp"
#include "pfmix/errors.hpp"
#include "pfmix/fixtures.hpp"
#include "pfmix/metrics.hpp"
#include "pfmix/surrogate.hpp"

namespace pfmix {

namespace {

struct MaterialFlags {
  double E = 3130.0;
  double nu = 0.37;
  double sigma_inf = 64.80;
  double delta_sigma = 33.60;
  double eps_ref = 0.003407;

  void add_to(CLI::App* app) {
    app->add_option("--E", E, "Young's modulus");
    app->add_option("--nu", nu, "Poisson ratio");
    app->add_option("--sigma_inf", sigma_inf, "saturation yield stress");
    app->add_option("--delta_sigma", delta_sigma, "yield stress drop at zero plastic strain");
    app->add_option("--eps_ref", eps_ref, "hardening reference plastic strain");
  }
  Material make() const { return make_material(E, nu, sigma_inf, delta_sigma, eps_ref); }
};

int cmd_gen_data(int curves, std::uint64_t seed, const std::string& out,
                 const MaterialFlags& mf) {
  const TrainingDataset d = generate_training_data(curves, seed, mf.make());
  write_dataset_csv(d, out);
  std::printf("wrote %zu samples (%d curves, %d redraws) to %s\n", d.samples.size(), d.n_curves,
              d.redraws, out.c_str());
  return 0;
}

int cmd_train(const std::string& data, const std::string& out, std::uint64_t seed,
              const MaterialFlags& mf) {
  const TrainingDataset d = read_dataset_csv(data);
  const Material mat = mf.make();
  const auto sur = fit_surrogate(d, mat, seed);
  sur->save(out);
  const char* names[3] = {"sxx", "syy", "sxy"};
  for (int c = 0; c < 3; ++c) {
    const Kernel& k = sur->component(c).kernel;
    std::printf("%s: sigma_f=%.6g ell=%.6g sigma_n=%.6g\n", names[c], k.sf, k.ell, k.sn);
  }
  std::printf("saved model (%d points per component) to %s\n", sur->component(0).n(),
              out.c_str());
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& outdir_override) {
  RunConfig cfg = load_run_config(config_path);
  if (!outdir_override.empty()) cfg.output_dir = outdir_override;
  std::string csv;
  const RunMetrics m = execute_run(cfg, &csv);
  int accepted = 0;
  for (const auto& r : m.rows) accepted += r.accepted;
  std::printf("%s: %d accepted steps, %zu attempts, metrics in %s\n",
              m.solved ? "solved" : "UNSOLVED", accepted, m.rows.size(), csv.c_str());
  if (!m.solved) return 2;
  return 0;
}

int cmd_compare(const std::string& a_path, const std::string& b_path, double du, double u_max) {
  const FuCurve a = fu_curve(read_metrics_csv(a_path));
  const FuCurve b = fu_curve(read_metrics_csv(b_path));
  if (a.u.empty() || b.u.empty()) throw IoError("compare: a curve has no accepted steps");
  if (u_max <= 0.0) u_max = std::min(a.u.back(), b.u.back());
  const FuErrorReport rep = fu_error(a, b, du, u_max);
  std::printf("fu_error=%.17g n_points=%d u_common=%.17g truncated=%d\n", rep.error,
              rep.n_points, rep.u_common, rep.truncated ? 1 : 0);
  return 0;
}

int cmd_mesh(const std::string& shape, const std::string& out, int nx, int ny, double width,
             double height, double fine, double coarse, double radius) {
  Mesh m;
  if (shape == "rect")
    m = generate_rectangle(nx, ny, width, height);
  else if (shape == "dogbone")
    m = build_dogbone(nx > 0 ? nx : 60, ny > 0 ? ny : 12);
  else if (shape == "notched")
    m = build_notched(fine, coarse);
  else if (shape == "holes")
    m = build_holes(nx > 0 ? nx : 40, ny > 0 ? ny : 20, radius);
  else if (shape == "strip")
    m = build_strip(nx > 0 ? nx : 50, ny > 0 ? ny : 2, width, height);
  else
    throw CLI::ValidationError("--shape", "unknown shape '" + shape + "'");
  write_mesh(m, out);
  std::printf("wrote %s mesh: %d nodes, %d elements to %s\n", shape.c_str(), m.n_nodes(),
              m.n_elements(), out.c_str());
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"adaptive plastic/surrogate mixture FEM"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate proportional-loading training data");
  int gd_curves = 10;
  std::uint64_t gd_seed = 0;
  std::string gd_out;
  MaterialFlags gd_mat;
  gen->add_option("--curves", gd_curves, "number of loading curves")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gd_seed, "random seed");
  gen->add_option("--out", gd_out, "output CSV path")->required();
  gd_mat.add_to(gen);

  // train
  auto* tr = app.add_subcommand("train", "fit the stress surrogate on a dataset");
  std::string tr_data, tr_out;
  std::uint64_t tr_seed = 0;
  MaterialFlags tr_mat;
  tr->add_option("--data", tr_data, "training CSV path")->required();
  tr->add_option("--out", tr_out, "output model path")->required();
  tr->add_option("--seed", tr_seed, "hyperparameter search seed");
  tr_mat.add_to(tr);

  // run
  auto* rn = app.add_subcommand("run", "execute a simulation from a config file");
  std::string rn_config, rn_outdir;
  rn->add_option("--config", rn_config, "run configuration file")->required();
  rn->add_option("--output-dir", rn_outdir, "override the configured output directory");

  // compare
  auto* cp = app.add_subcommand("compare", "force-displacement error between two runs");
  std::string cp_a, cp_b;
  double cp_du = 0.0, cp_umax = 0.0;
  cp->add_option("--a", cp_a, "first metrics CSV")->required();
  cp->add_option("--b", cp_b, "second metrics CSV")->required();
  cp->add_option("--du", cp_du, "comparison grid spacing")
      ->required()
      ->check(CLI::PositiveNumber);
  cp->add_option("--u-max", cp_umax, "compare up to this displacement");

  // mesh
  auto* ms = app.add_subcommand("mesh", "generate an experiment mesh");
  std::string ms_shape, ms_out;
  int ms_nx = 0, ms_ny = 0;
  double ms_w = 1.0, ms_h = 1.0, ms_fine = 0.02, ms_coarse = 0.05, ms_r = 0.13;
  ms->add_option("--shape", ms_shape, "rect | dogbone | notched | holes | strip")->required();
  ms->add_option("--out", ms_out, "output mesh path")->required();
  ms->add_option("--nx", ms_nx, "cells along x");
  ms->add_option("--ny", ms_ny, "cells along y");
  ms->add_option("--width", ms_w, "rectangle width");
  ms->add_option("--height", ms_h, "rectangle height");
  ms->add_option("--fine", ms_fine, "fine grid spacing (notched)");
  ms->add_option("--coarse", ms_coarse, "coarse grid spacing (notched)");
  ms->add_option("--radius", ms_r, "hole radius (holes)");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_gen_data(gd_curves, gd_seed, gd_out, gd_mat);
    if (tr->parsed()) return cmd_train(tr_data, tr_out, tr_seed, tr_mat);
    if (rn->parsed()) return cmd_run(rn_config, rn_outdir);
    if (cp->parsed()) return cmd_compare(cp_a, cp_b, cp_du, cp_umax);
    if (ms->parsed())
      return cmd_mesh(ms_shape, ms_out, ms_nx, ms_ny, ms_w, ms_h, ms_fine, ms_coarse, ms_r);
    return 1;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace pfmix
