#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace pfmix {

// Triangular mesh. Vertex nodes come first; promotion appends midside nodes
// and fills t6 (corners n0,n1,n2 then midsides on edges 01,12,20).
struct Mesh {
  std::vector<Eigen::Vector2d> nodes;
  std::vector<std::array<int, 3>> t3;
  std::vector<std::array<int, 6>> t6;
  std::map<std::string, std::vector<int>> sets;
  int n_vertex_nodes = 0;

  bool promoted() const { return !t6.empty(); }
  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_elements() const { return static_cast<int>(t3.size()); }
};

double tri_area(const Mesh& m, int e);
Eigen::Vector2d tri_centroid(const Mesh& m, int e);

// Throws std::runtime_error on any invariant violation.
void validate(const Mesh& m);

Mesh read_mesh(const std::string& path);
void write_mesh(const Mesh& m, const std::string& path);
std::string mesh_to_string(const Mesh& m);

// Structured crossed-diagonal grid on [0,width] x [0,height].
Mesh generate_rectangle(int nx, int ny, double width, double height);

// Same topology rules but with explicit, strictly increasing axis ticks.
Mesh generate_rectangle_graded(const std::vector<double>& xticks,
                               const std::vector<double>& yticks);

// Tick vector on [lo,hi]: spacing <= coarse everywhere, <= the band's own
// spacing inside each {start, end, spacing} band. Band edges land on ticks.
std::vector<double> grade_ticks(double lo, double hi, double coarse,
                                const std::vector<std::array<double, 3>>& fine_bands);

// Keeps elements whose centroid satisfies `keep`, drops orphaned nodes,
// renumbers contiguously. Rejects empty results and promoted input.
Mesh carve(const Mesh& m, const std::function<bool(double, double)>& keep);

// One midside node per unique edge; boundary sets gain midside nodes whose
// edge has both endpoints in the set. Promoting twice is rejected.
Mesh promote_to_t6(const Mesh& m);

}  // namespace pfmix
