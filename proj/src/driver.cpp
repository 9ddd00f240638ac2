#include "pfmix/driver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "pfmix/config.hpp"
#include "pfmix/errors.hpp"

namespace pfmix {

namespace {

// Stand-in surrogate for the pure plastic-model reference: zero uncertainty,
// never asked for a response because every point carries full weight.
class ZeroSurrogate : public Surrogate {
 public:
  bool response(int, const Eigen::Vector3d&, ConstitutiveResponse&) override { return false; }
  void uncertainty_batch(const std::vector<Eigen::Vector3d>& eps,
                         UncertaintyBatch& out) const override {
    out.value.assign(eps.size(), 0.0);
    out.exact.assign(eps.size(), 1);
  }
  void refine_uncertainty(const std::vector<Eigen::Vector3d>&, const std::vector<int>& ips,
                          UncertaintyBatch& out) const override {
    for (int ip : ips) out.exact[ip] = 1;
  }
};

const std::vector<int>& set_or_throw(const Mesh& m, const std::string& name) {
  const auto it = m.sets.find(name);
  if (it == m.sets.end())
    throw std::invalid_argument("experiment needs node set '" + name + "' in the mesh");
  return it->second;
}

}  // namespace

Experiment make_experiment(const Mesh& promoted, const std::string& name) {
  Experiment e;
  std::string fixed_set, driven_set;
  int load_comp;
  if (name == "tension-x") {
    fixed_set = "left";
    driven_set = "right";
    load_comp = 0;
  } else if (name == "tension-y") {
    fixed_set = "bottom";
    driven_set = "top";
    load_comp = 1;
  } else {
    throw std::invalid_argument("unknown experiment '" + name +
                                "' (expected tension-x or tension-y)");
  }
  for (int n : set_or_throw(promoted, fixed_set)) {
    e.bcs.push_back({n, 0, 0.0});
    e.scale.push_back(0.0);
    e.bcs.push_back({n, 1, 0.0});
    e.scale.push_back(0.0);
  }
  for (int n : set_or_throw(promoted, driven_set)) {
    for (int c = 0; c < 2; ++c) {
      e.bcs.push_back({n, c, 0.0});
      e.scale.push_back(c == load_comp ? 1.0 : 0.0);
      if (c == load_comp) e.reaction_dofs.push_back(2 * n + c);
    }
  }
  return e;
}

Simulation::Simulation(const Mesh& t3_mesh, const std::string& experiment, const Material& mat,
                       Surrogate* surrogate, const SimConfig& cfg)
    : mesh_(promote_to_t6(t3_mesh)),
      fem_(mesh_),
      exp_(make_experiment(mesh_, experiment)),
      dofs_(make_dofmap(mesh_.n_nodes(), exp_.bcs)),
      mat_(mat),
      sur_(surrogate),
      cfg_(cfg) {
  if (cfg_.mode == MixMode::full_hf || sur_ == nullptr) {
    if (cfg_.mode != MixMode::full_hf)
      throw std::invalid_argument("Simulation: this mode needs a surrogate");
    zero_sur_ = std::make_unique<ZeroSurrogate>();
    sur_ = zero_sur_.get();
  }
  if (!(cfg_.stepping.du0 > 0.0) || !(cfg_.stepping.u_target > 0.0))
    throw std::invalid_argument("Simulation: du0 and u_target must be positive");
  if (!(cfg_.stepping.gamma > 0.0 && cfg_.stepping.gamma < 1.0))
    throw std::invalid_argument("Simulation: gamma must be in (0,1)");
  if (cfg_.stepping.du_min <= 0.0)
    cfg_.stepping.du_min = cfg_.stepping.du0 * std::pow(cfg_.stepping.gamma, 6);
  if (cfg_.stepping.du_max <= 0.0) cfg_.stepping.du_max = cfg_.stepping.du0;
  if (cfg_.stepping.du_min > cfg_.stepping.du0 || cfg_.stepping.du0 > cfg_.stepping.du_max)
    throw std::invalid_argument("Simulation: need du_min <= du0 <= du_max");
  if (cfg_.stagger.k_max < 1) throw std::invalid_argument("Simulation: k_max must be >= 1");

  mix_ = std::make_unique<MixtureModel>(mat_, sur_, fem_.n_ips(), cfg_.tau);
  u_c_ = Eigen::VectorXd::Zero(fem_.n_dofs());
  phi_nodal_c_ = Eigen::VectorXd::Zero(mesh_.n_vertex_nodes);
  eps_c_.assign(fem_.n_ips(), Eigen::Vector3d::Zero());
}

Simulation::~Simulation() = default;

void Simulation::compute_uncertainty(const Eigen::VectorXd& u, UncertaintyState& out) const {
  fem_.strains(u, out.eps);
  UncertaintyBatch b;
  sur_->uncertainty_batch(out.eps, b);
  out.value = std::move(b.value);
  out.exact = std::move(b.exact);
}

bool Simulation::update_phi(UncertaintyState& U, Eigen::VectorXd& phi_nodal,
                            std::vector<double>& phi_ips) const {
  const int nq = fem_.n_ips_per_elem();
  const int ne = fem_.n_elements();
  phi_ips.assign(fem_.n_ips(), 0.0);

  if (cfg_.mode == MixMode::full_hf) {
    phi_nodal.setOnes(mesh_.n_vertex_nodes);
    std::fill(phi_ips.begin(), phi_ips.end(), 1.0);
    return true;
  }

  if (cfg_.mode == MixMode::phase_field) {
    for (int round = 0;; ++round) {
      const DrivingField drive = project_uncertainty(mesh_, U.value, nq);
      const PhaseSolveResult res = solve_phase(mesh_, phi_nodal, drive, cfg_.pf);
      if (!res.converged) return false;
      // cheap variance bounds only overestimate; anything near an active node
      // gets the exact value before the solution is trusted
      std::vector<int> want;
      for (int e = 0; e < ne; ++e) {
        bool active = false;
        for (int k = 0; k < 3; ++k)
          if (res.phi[mesh_.t3[e][k]] > 0.0) active = true;
        if (!active) continue;
        for (int q = 0; q < nq; ++q)
          if (!U.exact[e * nq + q]) want.push_back(e * nq + q);
      }
      if (want.empty() || round > ne) {
        phi_nodal = res.phi;
        for (int e = 0; e < ne; ++e)
          for (int q = 0; q < nq; ++q)
            phi_ips[e * nq + q] = phi_at_ip(mesh_, phi_nodal, e, fem_.rule().points[q]);
        return true;
      }
      UncertaintyBatch b{std::move(U.value), std::move(U.exact)};
      sur_->refine_uncertainty(U.eps, want, b);
      U.value = std::move(b.value);
      U.exact = std::move(b.exact);
    }
  }

  // local rules: refine every point whose bound could cross the threshold
  const double slack = 1e-9 * std::max(1.0, cfg_.b);
  std::vector<int> want;
  for (int i = 0; i < fem_.n_ips(); ++i)
    if (!U.exact[i] && U.value[i] >= cfg_.b - slack) want.push_back(i);
  if (!want.empty()) {
    UncertaintyBatch b{std::move(U.value), std::move(U.exact)};
    sur_->refine_uncertainty(U.eps, want, b);
    U.value = std::move(b.value);
    U.exact = std::move(b.exact);
  }
  for (int i = 0; i < fem_.n_ips(); ++i) phi_ips[i] = local_phi(U.value[i], cfg_.b, cfg_.mode);
  // nodal display field: per-node max of adjacent IP weights
  phi_nodal.setZero(mesh_.n_vertex_nodes);
  for (int e = 0; e < ne; ++e)
    for (int k = 0; k < 3; ++k) {
      double m = 0.0;
      for (int q = 0; q < nq; ++q) m = std::max(m, phi_ips[e * nq + q]);
      phi_nodal[mesh_.t3[e][k]] = std::max(phi_nodal[mesh_.t3[e][k]], m);
    }
  return true;
}

StepOutcome Simulation::staggered_step(double du) {
  StepOutcome out;
  out.du_used = du;
  if (!(du > 0.0)) throw std::invalid_argument("staggered_step: du must be positive");
  const double u_t = u_level_ + du;

  mix_->begin_attempt();
  for (size_t i = 0; i < exp_.bcs.size(); ++i) {
    const int dof = 2 * exp_.bcs[i].node + exp_.bcs[i].comp;
    dofs_.bc_value[dof] = exp_.scale[i] * u_t;
  }

  // scale the committed field to the new load level; exact predictor for
  // proportional elastic loading, and it keeps the driven edge from imposing
  // a displacement jump across the first layer of elements
  Eigen::VectorXd u = u_c_;
  if (u_level_ > 0.0) u *= u_t / u_level_;
  Eigen::VectorXd phi_nodal = phi_nodal_c_;
  std::vector<double> phi_ips = mix_->phi_committed();
  UncertaintyState Uw;
  Uw.value = mix_->U_committed();
  Uw.exact = mix_->U_committed_exact();
  Uw.eps = eps_c_;

  const ConstitutiveFn fn = [this, nq = fem_.n_ips_per_elem()](
                                int e, int q, const Eigen::Vector3d& eps,
                                ConstitutiveResponse& resp) {
    return mix_->evaluate(e * nq + q, eps, resp);
  };

  Eigen::VectorXd r_final;
  bool converged = false;
  for (int k = 1; k <= cfg_.stagger.k_max; ++k) {
    std::vector<double> phi_ips_new;
    Eigen::VectorXd phi_nodal_new = phi_nodal;
    if (!update_phi(Uw, phi_nodal_new, phi_ips_new)) {
      out.failure_kind = FailureKind::phasefield;
      last_counts_ = phase_populations(phi_ips, cfg_.tau);
      return out;
    }
    bool phi_same;
    if (cfg_.mode == MixMode::phase_field)
      phi_same = phi_nodal_new.size() == phi_nodal.size() &&
                 (phi_nodal_new.array() == phi_nodal.array()).all();
    else
      phi_same = phi_ips_new == phi_ips;
    phi_nodal = phi_nodal_new;
    phi_ips = phi_ips_new;
    if (!phi_same) out.phi_changed = true;
    if (phi_same && out.stagger_iters >= 1) {
      converged = true;  // stable weights certify the last solve
      break;
    }

    int fail_ip = -1;
    if (!mix_->prepare_iteration(phi_ips, &fail_ip)) {
      out.failure_kind = FailureKind::mechanical;
      last_counts_ = phase_populations(phi_ips, cfg_.tau);
      return out;
    }
    const Eigen::VectorXd u_before = u;
    const NewtonReport rep = fem_.solve_newton(u, fn, dofs_, solver_, cfg_.newton, true, &r_final);
    out.nr_iters_total += rep.iterations;
    nr_cum_ += rep.iterations;
    if (!rep.converged) {
      out.failure_kind = FailureKind::mechanical;
      last_counts_ = phase_populations(phi_ips, cfg_.tau);
      return out;
    }
    ++out.stagger_iters;
    if (phi_same) {
      converged = true;
      break;
    }
    if (out.stagger_iters >= 2) {
      const double rel =
          (u - u_before).norm() / std::max(u.norm(), cfg_.stagger.u_floor);
      if (rel <= cfg_.stagger.tol_u) {
        converged = true;
        break;
      }
    }
    if (k < cfg_.stagger.k_max) compute_uncertainty(u, Uw);
  }
  (void)converged;  // exhausting k_max still accepts the last iterate

  UncertaintyState Ufin;
  compute_uncertainty(u, Ufin);
  mix_->commit(Ufin.eps, Ufin.value, Ufin.exact, phi_ips);
  eps_c_ = Ufin.eps;
  u_c_ = u;
  phi_nodal_c_ = phi_nodal;
  u_level_ = u_t;
  ++steps_accepted_;
  double F = 0.0;
  for (int d : exp_.reaction_dofs) F += r_final[d];
  F_c_ = F;
  out.accepted = true;
  last_counts_ = phase_populations(phi_ips, cfg_.tau);

  if (cfg_.snapshot_du > 0.0) {
    const double m = u_level_ / cfg_.snapshot_du;
    if (std::abs(m - std::round(m)) * cfg_.snapshot_du <= 1e-9 * cfg_.snapshot_du) {
      Snapshot s;
      s.u_level = u_level_;
      s.stress = mix_->stress_committed();
      s.phi = mix_->phi_committed();
      s.state = mix_->plastic_states();
      snapshots_.push_back(std::move(s));
    }
  }
  return out;
}

RunMetrics Simulation::run() {
  RunMetrics m;
  const StepperConfig& st = cfg_.stepping;
  double du = st.du0;
  int step_index = 0;

  while (u_level_ < st.u_target * (1.0 - 1e-12)) {
    ++step_index;
    double du_att = std::min(du, st.u_target - u_level_);
    bool reduced = false;
    bool increasing = false;
    while (true) {
      const StepOutcome o = staggered_step(du_att);
      MetricsRow row;
      row.step = step_index;
      row.u = o.accepted ? u_level_ : u_level_ + du_att;
      row.F = F_c_;
      row.du = du_att;
      row.accepted = o.accepted ? 1 : 0;
      row.stagger_iters = o.stagger_iters;
      row.nr_iters_cum = nr_cum_;
      row.hf_evals_cum = mix_->hf_evals();
      row.n_ips_gp = last_counts_.gp;
      row.n_ips_mixed = last_counts_.mixed;
      row.n_ips_hf = last_counts_.hf;
      row.failure_kind = o.failure_kind == FailureKind::none
                             ? "none"
                             : (o.failure_kind == FailureKind::mechanical ? "mechanical"
                                                                          : "phasefield");
      row.phi_changed = o.phi_changed;
      m.rows.push_back(row);
      if (o.accepted) break;

      reduced = true;
      const double failed = du_att;
      double next;
      if (!increasing) {
        if (du_att > st.du_min * (1.0 + 1e-12)) {
          next = std::max(du_att * st.gamma, st.du_min);
        } else {
          increasing = true;
          next = std::min(du_att / st.gamma, st.du_max);
        }
      } else {
        if (du_att < st.du_max * (1.0 - 1e-12)) {
          next = std::min(du_att / st.gamma, st.du_max);
        } else {
          m.solved = false;
          return m;
        }
      }
      next = std::min(next, st.u_target - u_level_);
      if (std::abs(next - failed) <= 1e-15 * std::max(1.0, failed)) {
        if (!increasing) {
          increasing = true;
          next = std::min(std::min(failed / st.gamma, st.du_max), st.u_target - u_level_);
        }
        if (std::abs(next - failed) <= 1e-15 * std::max(1.0, failed)) {
          m.solved = false;
          return m;
        }
      }
      du_att = next;
    }

    if (reduced)
      du = du_att;  // hold the recovered size for one step
    else if (du < st.du0 * (1.0 - 1e-12))
      du = std::min(du / st.gamma, st.du0);  // then grow back per clean step
  }
  return m;
}

void Simulation::write_fields_vtk(const std::string& path) const {
  write_vtk(path, mesh_, phi_nodal_c_, u_c_, mix_->stress_committed(), mix_->plastic_states(),
            fem_.n_ips_per_elem());
}

RunConfig load_run_config(const std::string& path) {
  const KeyValues kv = KeyValues::from_file(path);
  RunConfig c;
  c.mesh_path = kv.get_string("mesh");
  c.experiment = kv.get_string("experiment");
  c.mode = kv.get_string("mode", "phase-field");
  c.sim.mode = parse_mix_mode(c.mode);
  c.model_path = kv.get_string("model", "");
  c.output_dir = kv.get_string("output_dir", ".");
  c.E = kv.get_double("E", 3130.0);
  c.nu = kv.get_double("nu", 0.37);
  c.sigma_inf = kv.get_double("sigma_inf", 64.80);
  c.delta_sigma = kv.get_double("delta_sigma", 33.60);
  c.eps_ref = kv.get_double("eps_ref", 0.003407);
  c.sim.stepping.du0 = kv.get_double("du0");
  c.sim.stepping.u_target = kv.get_double("u_target");
  c.sim.stepping.gamma = kv.get_double("gamma", 0.5);
  c.sim.stepping.du_min = kv.get_double("du_min", 0.0);
  c.sim.stepping.du_max = kv.get_double("du_max", 0.0);
  c.sim.stagger.k_max = kv.get_int("k_max", 3);
  c.sim.stagger.tol_u = kv.get_double("tol_u", 1e-6);
  c.sim.tau = kv.get_double("tau", 0.01);
  c.sim.b = kv.get_double("b", 10.0);
  c.sim.pf.b = c.sim.b;
  c.sim.pf.eps = kv.get_double("eps", 0.0);
  c.sim.pf.omega = kv.get_double("omega", 0.0);
  c.sim.pf.tol = kv.get_double("pf_tol", 1e-8);
  c.sim.pf.max_iter = kv.get_int("pf_max_iter", 50);
  c.sim.newton.rtol = kv.get_double("newton_rtol", 1e-8);
  c.sim.newton.atol = kv.get_double("newton_atol", 1e-10);
  c.sim.newton.max_iter = kv.get_int("newton_max_iter", 25);
  c.sim.snapshot_du = kv.get_double("snapshot_du", 0.0);
  kv.get_u64("seed", 0);  // reserved; runs are deterministic
  kv.reject_unknown();

  if (c.sim.mode == MixMode::phase_field && !(c.sim.pf.eps > 0.0 && c.sim.pf.omega > 0.0))
    throw IoError(path + ": phase-field mode needs positive 'eps' and 'omega'");
  if (c.sim.mode != MixMode::full_hf && c.model_path.empty())
    throw IoError(path + ": mode '" + c.mode + "' needs a 'model' file");
  return c;
}

RunMetrics execute_run(const RunConfig& cfg, std::string* csv_path_out) {
  const Mesh mesh = read_mesh(cfg.mesh_path);
  const Material mat = make_material(cfg.E, cfg.nu, cfg.sigma_inf, cfg.delta_sigma, cfg.eps_ref);
  std::unique_ptr<GPSurrogate> sur;
  if (cfg.sim.mode != MixMode::full_hf) sur = GPSurrogate::load(cfg.model_path);

  Simulation sim(mesh, cfg.experiment, mat, sur.get(), cfg.sim);
  const RunMetrics m = sim.run();

  std::filesystem::create_directories(cfg.output_dir);
  const std::string csv = cfg.output_dir + "/metrics.csv";
  write_metrics_csv(m, csv);
  sim.write_fields_vtk(cfg.output_dir + "/final.vtk");
  if (csv_path_out) *csv_path_out = csv;
  return m;
}

}  // namespace pfmix
