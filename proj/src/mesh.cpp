#include "pfmix/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pfmix/errors.hpp"

namespace pfmix {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double tri_area(const Mesh& m, int e) {
  const auto& t = m.t3[e];
  const Eigen::Vector2d a = m.nodes[t[0]], b = m.nodes[t[1]], c = m.nodes[t[2]];
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

Eigen::Vector2d tri_centroid(const Mesh& m, int e) {
  const auto& t = m.t3[e];
  return (m.nodes[t[0]] + m.nodes[t[1]] + m.nodes[t[2]]) / 3.0;
}

void validate(const Mesh& m) {
  const int nn = m.n_nodes();
  if (m.t3.empty()) fail("mesh validation: no elements");
  if (m.n_vertex_nodes <= 0 || m.n_vertex_nodes > nn)
    fail("mesh validation: bad vertex node count");

  double scale = 0.0;
  for (const auto& p : m.nodes) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double area_tol = 1e-14 * std::max(1.0, scale * scale);

  std::map<std::pair<int, int>, int> edge_count;
  for (int e = 0; e < m.n_elements(); ++e) {
    for (int k = 0; k < 3; ++k) {
      const int v = m.t3[e][k];
      if (v < 0 || v >= m.n_vertex_nodes)
        fail("mesh validation: element " + std::to_string(e) + " node index out of range");
    }
    const double a = tri_area(m, e);
    if (a <= area_tol)
      fail("mesh validation: degenerate or negatively oriented triangle " + std::to_string(e));
    for (int k = 0; k < 3; ++k) {
      int u = m.t3[e][k], v = m.t3[e][(k + 1) % 3];
      if (u > v) std::swap(u, v);
      if (++edge_count[{u, v}] > 2)
        fail("mesh validation: edge shared by more than 2 triangles near element " +
             std::to_string(e));
    }
  }

  for (const auto& [name, ids] : m.sets)
    for (int id : ids)
      if (id < 0 || id >= nn) fail("mesh validation: set '" + name + "' has bad node id");

  if (m.promoted()) {
    if (m.t6.size() != m.t3.size()) fail("mesh validation: t6/t3 element count mismatch");
    for (int e = 0; e < m.n_elements(); ++e) {
      const auto& q = m.t6[e];
      for (int k = 0; k < 3; ++k)
        if (q[k] != m.t3[e][k]) fail("mesh validation: t6 corners differ from t3");
      for (int k = 0; k < 3; ++k) {
        const int mid = q[3 + k];
        if (mid < m.n_vertex_nodes || mid >= nn)
          fail("mesh validation: midside node index out of range");
        const Eigen::Vector2d a = m.nodes[q[k]], b = m.nodes[q[(k + 1) % 3]];
        const double edge_len = (b - a).norm();
        if ((m.nodes[mid] - 0.5 * (a + b)).norm() > 1e-12 * edge_len)
          fail("mesh validation: midside node off edge midpoint, element " + std::to_string(e));
      }
    }
  }
}

Mesh read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file: " + path);

  Mesh m;
  int lineno = 0;
  std::string line;
  auto next_tokens = [&](std::vector<std::string>& tok) -> bool {
    tok.clear();
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ss(line);
      std::string t;
      while (ss >> t) tok.push_back(t);
      if (!tok.empty()) return true;
    }
    return false;
  };
  auto parse_fail = [&](const std::string& what) {
    throw IoError("mesh parse error at line " + std::to_string(lineno) + ": " + what);
  };

  try {
  std::vector<std::string> tok;
  if (!next_tokens(tok) || tok.size() != 2 || tok[0] != "nodes")
    parse_fail("expected 'nodes N'");
  const int nn = std::stoi(tok[1]);
  if (nn <= 0) parse_fail("node count must be positive");
  m.nodes.reserve(nn);
  for (int i = 0; i < nn; ++i) {
    if (!next_tokens(tok) || tok.size() != 3) parse_fail("expected 'id x y'");
    if (std::stoi(tok[0]) != i) parse_fail("node ids must be 0-based and consecutive");
    m.nodes.emplace_back(std::stod(tok[1]), std::stod(tok[2]));
  }
  m.n_vertex_nodes = nn;

  if (!next_tokens(tok) || tok.size() != 2 || tok[0] != "elements")
    parse_fail("expected 'elements M'");
  const int ne = std::stoi(tok[1]);
  if (ne <= 0) parse_fail("element count must be positive");
  m.t3.reserve(ne);
  for (int e = 0; e < ne; ++e) {
    if (!next_tokens(tok) || tok.size() != 4) parse_fail("expected 'id n1 n2 n3'");
    if (std::stoi(tok[0]) != e) parse_fail("element ids must be 0-based and consecutive");
    std::array<int, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      tri[k] = std::stoi(tok[1 + k]);
      if (tri[k] < 0 || tri[k] >= nn) parse_fail("node index out of range");
    }
    m.t3.push_back(tri);
  }

  while (next_tokens(tok)) {
    if (tok[0] != "set" || tok.size() < 3) parse_fail("expected 'set NAME k id...'");
    const std::string name = tok[1];
    const int k = std::stoi(tok[2]);
    if (static_cast<int>(tok.size()) != 3 + k) parse_fail("set length mismatch");
    if (m.sets.count(name)) parse_fail("duplicate set '" + name + "'");
    std::vector<int> ids(k);
    for (int i = 0; i < k; ++i) {
      ids[i] = std::stoi(tok[3 + i]);
      if (ids[i] < 0 || ids[i] >= nn) parse_fail("set node index out of range");
    }
    m.sets[name] = std::move(ids);
  }

  validate(m);
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError("mesh parse error at line " + std::to_string(lineno) + ": " + e.what());
  }
  return m;
}

std::string mesh_to_string(const Mesh& m) {
  std::string out;
  out += "nodes " + std::to_string(m.n_vertex_nodes) + "\n";
  for (int i = 0; i < m.n_vertex_nodes; ++i)
    out += std::to_string(i) + " " + fmt_double(m.nodes[i].x()) + " " +
           fmt_double(m.nodes[i].y()) + "\n";
  out += "elements " + std::to_string(m.n_elements()) + "\n";
  for (int e = 0; e < m.n_elements(); ++e)
    out += std::to_string(e) + " " + std::to_string(m.t3[e][0]) + " " +
           std::to_string(m.t3[e][1]) + " " + std::to_string(m.t3[e][2]) + "\n";
  for (const auto& [name, ids] : m.sets) {
    std::vector<int> keep;
    for (int id : ids)
      if (id < m.n_vertex_nodes) keep.push_back(id);
    out += "set " + name + " " + std::to_string(keep.size());
    for (int id : keep) out += " " + std::to_string(id);
    out += "\n";
  }
  return out;
}

void write_mesh(const Mesh& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open mesh file for writing: " + path);
  out << mesh_to_string(m);
  if (!out) throw IoError("write failed: " + path);
}

std::vector<double> grade_ticks(double lo, double hi, double coarse,
                                const std::vector<std::array<double, 3>>& fine_bands) {
  if (!(hi > lo) || !(coarse > 0)) fail("grade_ticks: bad interval or spacing");
  std::vector<double> cuts{lo, hi};
  for (const auto& b : fine_bands) {
    if (!(b[0] < b[1]) || !(b[2] > 0)) fail("grade_ticks: bad band");
    if (b[0] > lo && b[0] < hi) cuts.push_back(b[0]);
    if (b[1] > lo && b[1] < hi) cuts.push_back(b[1]);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             cuts.end());

  std::vector<double> ticks{cuts.front()};
  for (size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], b = cuts[s + 1], mid = 0.5 * (a + b);
    double h = coarse;
    for (const auto& band : fine_bands)
      if (mid > band[0] && mid < band[1]) h = std::min(h, band[2]);
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-9)));
    for (int i = 1; i <= n; ++i) ticks.push_back(a + (b - a) * i / n);
  }
  return ticks;
}

Mesh generate_rectangle_graded(const std::vector<double>& xticks,
                               const std::vector<double>& yticks) {
  const int nx = static_cast<int>(xticks.size()) - 1;
  const int ny = static_cast<int>(yticks.size()) - 1;
  if (nx < 1 || ny < 1) fail("generate_rectangle: need at least 1 cell per direction");
  for (int i = 0; i < nx; ++i)
    if (!(xticks[i + 1] > xticks[i])) fail("generate_rectangle: x ticks not increasing");
  for (int j = 0; j < ny; ++j)
    if (!(yticks[j + 1] > yticks[j])) fail("generate_rectangle: y ticks not increasing");

  Mesh m;
  const int W = nx + 1;
  m.nodes.reserve(static_cast<size_t>(W) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) m.nodes.emplace_back(xticks[i], yticks[j]);
  m.n_vertex_nodes = m.n_nodes();

  m.t3.reserve(static_cast<size_t>(2) * nx * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int n00 = j * W + i, n10 = n00 + 1, n01 = n00 + W, n11 = n01 + 1;
      if ((i + j) % 2 == 0) {
        m.t3.push_back({n00, n10, n11});
        m.t3.push_back({n00, n11, n01});
      } else {
        m.t3.push_back({n00, n10, n01});
        m.t3.push_back({n10, n11, n01});
      }
    }

  auto& left = m.sets["left"];
  auto& right = m.sets["right"];
  for (int j = 0; j <= ny; ++j) {
    left.push_back(j * W);
    right.push_back(j * W + nx);
  }
  auto& bottom = m.sets["bottom"];
  auto& top = m.sets["top"];
  for (int i = 0; i <= nx; ++i) {
    bottom.push_back(i);
    top.push_back(ny * W + i);
  }

  validate(m);
  return m;
}

Mesh generate_rectangle(int nx, int ny, double width, double height) {
  if (nx < 1 || ny < 1) fail("generate_rectangle: cell counts must be >= 1");
  if (!(width > 0) || !(height > 0)) fail("generate_rectangle: dimensions must be > 0");
  std::vector<double> xt(nx + 1), yt(ny + 1);
  for (int i = 0; i <= nx; ++i) xt[i] = width * i / nx;
  for (int j = 0; j <= ny; ++j) yt[j] = height * j / ny;
  return generate_rectangle_graded(xt, yt);
}

Mesh carve(const Mesh& m, const std::function<bool(double, double)>& keep) {
  if (m.promoted()) fail("carve: promoted meshes are not carvable");

  std::vector<int> remap(m.n_nodes(), -1);
  Mesh out;
  for (int e = 0; e < m.n_elements(); ++e) {
    const Eigen::Vector2d c = tri_centroid(m, e);
    if (!keep(c.x(), c.y())) continue;
    std::array<int, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      const int old = m.t3[e][k];
      if (remap[old] < 0) {
        remap[old] = out.n_nodes();
        out.nodes.push_back(m.nodes[old]);
      }
      tri[k] = remap[old];
    }
    out.t3.push_back(tri);
  }
  if (out.t3.empty()) fail("carve: no elements survive the predicate");
  out.n_vertex_nodes = out.n_nodes();

  for (const auto& [name, ids] : m.sets) {
    std::vector<int> kept;
    for (int id : ids)
      if (remap[id] >= 0) kept.push_back(remap[id]);
    std::sort(kept.begin(), kept.end());
    out.sets[name] = std::move(kept);
  }

  validate(out);
  return out;
}

Mesh promote_to_t6(const Mesh& m) {
  if (m.promoted()) fail("promote_to_t6: mesh already promoted");
  validate(m);

  Mesh out = m;
  std::map<std::pair<int, int>, int> edge_mid;
  out.t6.reserve(m.t3.size());
  for (int e = 0; e < m.n_elements(); ++e) {
    const auto& t = m.t3[e];
    std::array<int, 6> q{t[0], t[1], t[2], -1, -1, -1};
    for (int k = 0; k < 3; ++k) {
      int u = t[k], v = t[(k + 1) % 3];
      if (u > v) std::swap(u, v);
      auto it = edge_mid.find({u, v});
      int mid;
      if (it == edge_mid.end()) {
        mid = out.n_nodes();
        out.nodes.push_back(0.5 * (m.nodes[u] + m.nodes[v]));
        edge_mid[{u, v}] = mid;
      } else {
        mid = it->second;
      }
      q[3 + k] = mid;
    }
    out.t6.push_back(q);
  }

  for (auto& [name, ids] : out.sets) {
    std::vector<char> member(m.n_vertex_nodes, 0);
    for (int id : ids) member[id] = 1;
    for (const auto& [edge, mid] : edge_mid)
      if (member[edge.first] && member[edge.second]) ids.push_back(mid);
    std::sort(ids.begin(), ids.end());
  }

  validate(out);
  return out;
}

}  // namespace pfmix
