#pragma once

// Reeb graphs of piecewise-linear Morse functions on triangulated surfaces.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "qmlab/mesh.hpp"

namespace qmlab::reeb {

enum class NodeType { Min, Max, Saddle, Regular };

const char* to_string(NodeType t);

struct Node {
  int id = 0;
  int vertex = -1;  // mesh vertex realising the critical point
  double value = 0.0;
  NodeType type = NodeType::Regular;
};

/// Pushforward of the area measure to one arc: a continuous piecewise-linear
/// density in the F-parameter, given at sorted breakpoints.
struct Density {
  std::vector<double> t;
  std::vector<double> rho;

  double value(double s) const;
  double total() const;
};

struct Arc {
  int id = 0;
  int lower = 0;  // node id at F_G(a-)
  int upper = 0;  // node id at F_G(a+)
  double t_lo = 0.0;
  double t_hi = 0.0;
  Density density;
  int triangle_count = 0;  // triangles contributing to this arc
};

struct ReebGraph {
  std::vector<Node> nodes;
  std::vector<Arc> arcs;
  int genus = 0;
  double total_area = 0.0;

  const Node& node(int id) const;
  const Arc& arc(int id) const;
  int degree(int node_id) const;
  /// sum over nodes of (2 - degree).
  int euler_sum() const;
};

struct MorseData {
  std::vector<double> effective;       // strictly ordered values after tie-break
  std::vector<NodeType> vertex_type;   // PL classification of every vertex
  std::vector<int> vertex_arc;         // arc id of each regular vertex, -1 else
};

/// Critical-value sweep. Throws ValidationError for degenerate saddles.
ReebGraph build_reeb(const mesh::SurfaceMesh& m, const std::vector<double>& f,
                     MorseData* morse = nullptr);

/// Tie-broken values: ties are separated in (value, index) order.
std::vector<double> tie_break(const std::vector<double>& f);

/// Link classification of every vertex, independent of the sweep.
std::vector<NodeType> classify_vertices(const mesh::SurfaceMesh& m, const std::vector<double>& f);

/// Iterated removal of degree-1 nodes, lowest id first. With a seed, leaves
/// are removed in a random order instead. `on_step`, if given, sees the graph
/// after every removal.
ReebGraph prune(const ReebGraph& g, std::optional<std::uint64_t> seed = std::nullopt,
                const std::function<void(const ReebGraph&)>& on_step = {});

/// Degree-3 node ids of a pruned graph; throws NumericalError unless there
/// are exactly 2g - 2 of them.
std::set<int> trivalent_vertices(const ReebGraph& pruned);

/// Piecewise-linear function of the F-parameter on each arc.
struct GraphHamiltonian {
  std::map<int, std::vector<std::pair<double, double>>> edges;  // arc id -> (t, h)

  static GraphHamiltonian constant(const ReebGraph& g, double c);
  /// h = psi(F_G) for a scalar function psi sampled at each arc's density breakpoints.
  static GraphHamiltonian of_height(const ReebGraph& g, const std::function<double(double)>& psi);
  /// Linear combination a*h1 + b*h2 (breakpoints merged).
  static GraphHamiltonian combine(double a, const GraphHamiltonian& h1, double b,
                                  const GraphHamiltonian& h2);

  double value(int arc_id, double t) const;
  /// Common limit of the incident arcs at a node; throws if they disagree.
  double node_value(const ReebGraph& g, int node_id, double tol = 1e-9) const;
};

/// sum over arcs of the integral of h * density, exact for piecewise-linear data.
double graph_integral(const ReebGraph& g, const GraphHamiltonian& h);

/// graph_integral(g, h) - sum of h over the trivalent vertices of prune(g).
/// Requires g >= 2 and total measure 2g - 2.
double reduced_integral(const ReebGraph& g, const GraphHamiltonian& h);

/// Builds H_G from per-vertex values of H; rejects H that is not constant on
/// level components (H must be affine in F on every triangle within `tol`).
GraphHamiltonian import_field(const mesh::SurfaceMesh& m, const ReebGraph& g,
                              const MorseData& morse, const std::vector<double>& h,
                              double tol = 1e-6);

}  // namespace qmlab::reeb
