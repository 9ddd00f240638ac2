#include "pfmix/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pfmix/errors.hpp"

namespace pfmix {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

constexpr const char* kHeader =
    "step,u,F,du,accepted,stagger_iters,nr_iters_cum,hf_evals_cum,"
    "n_ips_gp,n_ips_mixed,n_ips_hf,failure_kind";

}  // namespace

PhaseCounts phase_populations(const std::vector<double>& phi, double tau) {
  PhaseCounts c;
  for (double p : phi) {
    if (p < tau)
      ++c.gp;
    else if (p > 1.0 - tau)
      ++c.hf;
    else
      ++c.mixed;
  }
  return c;
}

void write_metrics_csv(const RunMetrics& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open metrics file for writing: " + path);
  out << kHeader << "\n";
  for (const auto& r : m.rows)
    out << r.step << "," << fmt(r.u) << "," << fmt(r.F) << "," << fmt(r.du) << "," << r.accepted
        << "," << r.stagger_iters << "," << r.nr_iters_cum << "," << r.hf_evals_cum << ","
        << r.n_ips_gp << "," << r.n_ips_mixed << "," << r.n_ips_hf << "," << r.failure_kind
        << "\n";
  out << "# solved=" << (m.solved ? 1 : 0) << "\n";
  if (!out) throw IoError("metrics write failed: " + path);
}

RunMetrics read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw IoError("metrics parse error: bad header in " + path);
  RunMetrics m;
  int lineno = 1;
  bool saw_solved = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# solved=";
      if (line.rfind(tag, 0) == 0) {
        m.solved = line.substr(tag.size()) == "1";
        saw_solved = true;
      }
      continue;
    }
    std::istringstream ss(line);
    MetricsRow r;
    char c;
    ss >> r.step >> c >> r.u >> c >> r.F >> c >> r.du >> c >> r.accepted >> c >> r.stagger_iters >>
        c >> r.nr_iters_cum >> c >> r.hf_evals_cum >> c >> r.n_ips_gp >> c >> r.n_ips_mixed >> c >>
        r.n_ips_hf >> c;
    std::getline(ss, r.failure_kind);
    if (ss.fail() || r.failure_kind.empty())
      throw IoError("metrics parse error at line " + std::to_string(lineno) + " in " + path);
    m.rows.push_back(r);
  }
  if (!saw_solved) throw IoError("metrics parse error: missing solved marker in " + path);
  return m;
}

FuCurve fu_curve(const RunMetrics& m) {
  FuCurve c;
  for (const auto& r : m.rows) {
    if (!r.accepted) continue;
    if (!c.u.empty() && !(r.u > c.u.back()))
      throw std::invalid_argument("fu_curve: accepted displacements must increase");
    c.u.push_back(r.u);
    c.F.push_back(r.F);
  }
  return c;
}

namespace {

// piecewise-linear value with an implicit (0, 0) anchor
double interp(const FuCurve& c, double u) {
  double u0 = 0.0, f0 = 0.0;
  for (size_t i = 0; i < c.u.size(); ++i) {
    const double u1 = c.u[i], f1 = c.F[i];
    if (u <= u1) {
      const double w = (u1 == u0) ? 0.0 : (u - u0) / (u1 - u0);
      return f0 + w * (f1 - f0);
    }
    u0 = u1;
    f0 = f1;
  }
  throw std::invalid_argument("fu interpolation out of range");
}

}  // namespace

FuErrorReport fu_error(const FuCurve& a, const FuCurve& b, double du, double u_max) {
  if (!(du > 0.0)) throw std::invalid_argument("fu_error: grid spacing must be positive");
  if (a.u.empty() || b.u.empty()) throw std::invalid_argument("fu_error: empty curve");
  FuErrorReport rep;
  const double ua = a.u.back(), ub = b.u.back();
  double u_stop = std::min(std::min(ua, ub), u_max);
  rep.truncated = u_stop < u_max * (1.0 - 1e-12);
  const double slack = 1e-9 * du;
  for (int k = 1;; ++k) {
    const double u = k * du;
    if (u > u_stop + slack) break;
    const double uu = std::min(u, u_stop);
    rep.error += std::abs(interp(a, uu) - interp(b, uu));
    rep.u_common = uu;
    ++rep.n_points;
  }
  return rep;
}

void write_vtk(const std::string& path, const Mesh& mesh, const Eigen::VectorXd& phi_vertex,
               const Eigen::VectorXd& u, const std::vector<Eigen::Vector3d>& ip_stress,
               const std::vector<PlasticState>& ip_state, int ips_per_elem,
               const std::string& title) {
  if (!mesh.promoted()) throw std::invalid_argument("write_vtk: quadratic mesh required");
  const int nn = mesh.n_nodes();
  const int ne = mesh.n_elements();
  if (phi_vertex.size() != mesh.n_vertex_nodes || u.size() != 2 * nn)
    throw std::invalid_argument("write_vtk: field size mismatch");
  if (static_cast<int>(ip_stress.size()) != ne * ips_per_elem ||
      static_cast<int>(ip_state.size()) != ne * ips_per_elem)
    throw std::invalid_argument("write_vtk: ip field size mismatch");

  // extend phi to midside nodes as the mean of the edge endpoints
  Eigen::VectorXd phi_all = Eigen::VectorXd::Zero(nn);
  phi_all.head(mesh.n_vertex_nodes) = phi_vertex;
  for (int e = 0; e < ne; ++e) {
    const auto& c6 = mesh.t6[e];
    for (int k = 0; k < 3; ++k) {
      const int a = c6[k], b = c6[(k + 1) % 3];
      phi_all[c6[3 + k]] = 0.5 * (phi_vertex[a] + phi_vertex[b]);
    }
  }

  std::ofstream out(path);
  if (!out) throw IoError("cannot open vtk file for writing: " + path);
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nn << " double\n";
  for (int i = 0; i < nn; ++i)
    out << fmt(mesh.nodes[i].x()) << " " << fmt(mesh.nodes[i].y()) << " 0\n";
  out << "CELLS " << ne << " " << ne * 7 << "\n";
  for (int e = 0; e < ne; ++e) {
    out << 6;
    for (int k = 0; k < 6; ++k) out << " " << mesh.t6[e][k];
    out << "\n";
  }
  out << "CELL_TYPES " << ne << "\n";
  for (int e = 0; e < ne; ++e) out << 22 << "\n";

  out << "POINT_DATA " << nn << "\n";
  auto point_scalar = [&](const char* name, auto&& get) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < nn; ++i) out << fmt(get(i)) << "\n";
  };
  point_scalar("phi", [&](int i) { return phi_all[i]; });
  point_scalar("u_x", [&](int i) { return u[2 * i]; });
  point_scalar("u_y", [&](int i) { return u[2 * i + 1]; });

  out << "CELL_DATA " << ne << "\n";
  auto cell_avg = [&](const char* name, auto&& get) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int e = 0; e < ne; ++e) {
      double s = 0.0;
      for (int q = 0; q < ips_per_elem; ++q) s += get(e * ips_per_elem + q);
      out << fmt(s / ips_per_elem) << "\n";
    }
  };
  cell_avg("sxx", [&](int ip) { return ip_stress[ip](0); });
  cell_avg("syy", [&](int ip) { return ip_stress[ip](1); });
  cell_avg("sxy", [&](int ip) { return ip_stress[ip](2); });
  cell_avg("eps_p_eq", [&](int ip) { return ip_state[ip].ep_eq; });
  if (!out) throw IoError("vtk write failed: " + path);
}

}  // namespace pfmix
