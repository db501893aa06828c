#pragma once

// Closed orientable triangulated surfaces.

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace qmlab::mesh {

using Vec3 = Eigen::Vector3d;
using Tri = std::array<int, 3>;

struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<Tri> triangles;        // consistently oriented
  std::vector<double> area_weights;  // per triangle, positive
  int genus = 0;

  double total_area() const;
  int euler_characteristic() const;
};

/// Validates a closed, connected, orientable 2-manifold (every edge in exactly
/// two triangles, every vertex link a single cycle, consistent orientation
/// after reorienting where needed), computes the genus and per-triangle
/// Euclidean areas. Throws ValidationError on any violation.
SurfaceMesh make_mesh(std::vector<Vec3> vertices, std::vector<Tri> triangles);

/// Same, with caller-supplied positive area weights instead of Euclidean areas.
SurfaceMesh make_mesh(std::vector<Vec3> vertices, std::vector<Tri> triangles,
                      std::vector<double> area_weights);

/// Rescales the weights so that they sum to `total`.
void normalize_area(SurfaceMesh& m, double total);

/// Rescales to 2g - 2; requires g >= 2.
void normalize_hyperbolic(SurfaceMesh& m);

/// Undirected edges (lo, hi) with lo < hi, each listed once, plus for every
/// triangle the indices of its three edges (edge k is opposite corner k).
struct EdgeTable {
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 2>> edge_triangles;  // the two incident triangles
  std::vector<std::array<int, 3>> triangle_edges;
};

EdgeTable build_edges(const SurfaceMesh& m);

/// Neighbours of each vertex in cyclic order (orientation of the mesh).
std::vector<std::vector<int>> vertex_links(const SurfaceMesh& m);

// ---------------------------------------------------------------------------
// Generators.

/// Parameters of the implicit surface z^2/Z^2 + w(x, y) = 0 with
/// w = x^2/A^2 + y^2/B^2 - 1 + sum_i K exp(-|p - c_i|^2 / s^2): a flattened
/// ellipsoid pierced by one handle per hole centre c_i (on the x axis).
struct ImplicitSurface {
  double a = 2.0;
  double b = 1.0;
  double z = 0.3;
  double bump = 1.5;
  double width = 0.35;
  std::vector<double> holes;  // x coordinates of hole centres
  double cell = 0.05;         // marching-tetrahedra grid step

  double value(const Vec3& p) const;
};

/// Standard parameter sets for genus 0..3 (holes spread along the x axis).
ImplicitSurface standard_surface(int genus, double cell = 0.05);

/// Marching tetrahedra on the cube grid (six-tetrahedron split), vertices
/// welded across cells, triangles oriented outward.
SurfaceMesh polygonize(const ImplicitSurface& s);

/// Height function with a small generic tilt: x + 0.0131 y + 0.0047 z.
std::vector<double> tilted_height(const SurfaceMesh& m);

/// Smooth random function: a random unit linear term plus a few low-frequency
/// cosine modes. Deterministic in `seed`.
std::vector<double> random_smooth_field(const SurfaceMesh& m, std::uint64_t seed);

}  // namespace qmlab::mesh
