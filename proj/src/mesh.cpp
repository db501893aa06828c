#include "qmlab/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "qmlab/error.hpp"
#include "qmlab/parallel.hpp"

namespace qmlab::mesh {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double triangle_area(const SurfaceMesh& m, const Tri& t) {
  return 0.5 * (m.vertices[t[1]] - m.vertices[t[0]]).cross(m.vertices[t[2]] - m.vertices[t[0]]).norm();
}

// Reorients triangles so every edge is traversed once in each direction.
void orient(std::vector<Tri>& tris, const std::vector<std::array<int, 2>>& edge_tris,
            const std::vector<std::array<int, 3>>& tri_edges,
            const std::vector<std::array<int, 2>>& edges) {
  auto has_directed = [](const Tri& t, int a, int b) {
    for (int k = 0; k < 3; ++k)
      if (t[k] == a && t[(k + 1) % 3] == b) return true;
    return false;
  };
  std::vector<int> state(tris.size(), 0);  // 0 unvisited, 1 visited
  std::queue<int> q;
  state[0] = 1;
  q.push(0);
  std::size_t seen = 1;
  while (!q.empty()) {
    const int t = q.front();
    q.pop();
    for (int k = 0; k < 3; ++k) {
      const int e = tri_edges[t][k];
      const int u = edge_tris[e][0] == t ? edge_tris[e][1] : edge_tris[e][0];
      const int a = edges[e][0], b = edges[e][1];
      const bool t_ab = has_directed(tris[t], a, b);
      bool u_ab = has_directed(tris[u], a, b);
      if (state[u] == 0) {
        if (u_ab == t_ab) {
          std::swap(tris[u][1], tris[u][2]);
          u_ab = !u_ab;
        }
        state[u] = 1;
        ++seen;
        q.push(u);
      } else if (u_ab == t_ab) {
        throw ValidationError("mesh: surface is not orientable");
      }
    }
  }
  if (seen != tris.size()) throw ValidationError("mesh: surface is not connected");
}

}  // namespace

double SurfaceMesh::total_area() const {
  double s = 0.0;
  for (double a : area_weights) s += a;
  return s;
}

int SurfaceMesh::euler_characteristic() const {
  const long long f = static_cast<long long>(triangles.size());
  const long long e = 3 * f / 2;
  return static_cast<int>(static_cast<long long>(vertices.size()) - e + f);
}

EdgeTable build_edges(const SurfaceMesh& m) {
  EdgeTable t;
  std::unordered_map<std::uint64_t, int> index;
  index.reserve(m.triangles.size() * 2);
  t.triangle_edges.resize(m.triangles.size());
  for (std::size_t i = 0; i < m.triangles.size(); ++i) {
    const Tri& tri = m.triangles[i];
    for (int k = 0; k < 3; ++k) {
      const int a = tri[(k + 1) % 3], b = tri[(k + 2) % 3];
      const auto key = edge_key(a, b);
      auto it = index.find(key);
      int e;
      if (it == index.end()) {
        e = static_cast<int>(t.edges.size());
        index.emplace(key, e);
        t.edges.push_back({std::min(a, b), std::max(a, b)});
        t.edge_triangles.push_back({static_cast<int>(i), -1});
      } else {
        e = it->second;
        auto& et = t.edge_triangles[e];
        if (et[1] != -1) {
          std::ostringstream os;
          os << "mesh: edge (" << a << ", " << b << ") lies in more than two triangles";
          throw ValidationError(os.str());
        }
        et[1] = static_cast<int>(i);
      }
      t.triangle_edges[i][k] = e;
    }
  }
  for (std::size_t e = 0; e < t.edges.size(); ++e) {
    if (t.edge_triangles[e][1] == -1) {
      std::ostringstream os;
      os << "mesh: boundary edge (" << t.edges[e][0] << ", " << t.edges[e][1] << ")";
      throw ValidationError(os.str());
    }
  }
  return t;
}

std::vector<std::vector<int>> vertex_links(const SurfaceMesh& m) {
  // For vertex v in oriented triangle (v, a, b) record a -> b; the link is
  // the resulting cycle.
  std::vector<std::vector<std::pair<int, int>>> steps(m.vertices.size());
  for (const Tri& t : m.triangles)
    for (int k = 0; k < 3; ++k) steps[t[k]].push_back({t[(k + 1) % 3], t[(k + 2) % 3]});
  std::vector<std::vector<int>> links(m.vertices.size());
  for (std::size_t v = 0; v < steps.size(); ++v) {
    const auto& s = steps[v];
    if (s.size() < 3) {
      std::ostringstream os;
      os << "mesh: vertex " << v << " has a degenerate link";
      throw ValidationError(os.str());
    }
    std::unordered_map<int, int> next;
    for (auto [a, b] : s) {
      if (!next.emplace(a, b).second) {
        std::ostringstream os;
        os << "mesh: vertex " << v << " is not a manifold point";
        throw ValidationError(os.str());
      }
    }
    auto& link = links[v];
    link.reserve(s.size());
    int cur = s.front().first;
    for (std::size_t i = 0; i < s.size(); ++i) {
      link.push_back(cur);
      auto it = next.find(cur);
      if (it == next.end()) {
        std::ostringstream os;
        os << "mesh: vertex " << v << " has an open link";
        throw ValidationError(os.str());
      }
      cur = it->second;
    }
    if (cur != link.front()) {
      std::ostringstream os;
      os << "mesh: vertex " << v << " link is not a single cycle";
      throw ValidationError(os.str());
    }
  }
  return links;
}

SurfaceMesh make_mesh(std::vector<Vec3> vertices, std::vector<Tri> triangles) {
  SurfaceMesh m;
  m.vertices = std::move(vertices);
  m.triangles = std::move(triangles);
  std::vector<double> w(m.triangles.size(), 1.0);
  for (std::size_t i = 0; i < m.triangles.size(); ++i) {
    for (int v : m.triangles[i])
      if (v < 0 || v >= static_cast<int>(m.vertices.size()))
        throw ValidationError("mesh: triangle references a missing vertex");
    w[i] = triangle_area(m, m.triangles[i]);
  }
  return make_mesh(std::move(m.vertices), std::move(m.triangles), std::move(w));
}

SurfaceMesh make_mesh(std::vector<Vec3> vertices, std::vector<Tri> triangles,
                      std::vector<double> area_weights) {
  SurfaceMesh m;
  m.vertices = std::move(vertices);
  m.triangles = std::move(triangles);
  m.area_weights = std::move(area_weights);
  if (m.triangles.empty()) throw ValidationError("mesh: no triangles");
  if (m.area_weights.size() != m.triangles.size())
    throw ValidationError("mesh: one area weight per triangle required");
  std::vector<char> used(m.vertices.size(), 0);
  for (std::size_t i = 0; i < m.triangles.size(); ++i) {
    const Tri& t = m.triangles[i];
    for (int v : t) {
      if (v < 0 || v >= static_cast<int>(m.vertices.size()))
        throw ValidationError("mesh: triangle references a missing vertex");
      used[v] = 1;
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw ValidationError("mesh: triangle with repeated vertex");
    if (!(m.area_weights[i] > 0.0) || !std::isfinite(m.area_weights[i])) {
      std::ostringstream os;
      os << "mesh: triangle " << i << " has non-positive area";
      throw ValidationError(os.str());
    }
  }
  if (std::find(used.begin(), used.end(), 0) != used.end())
    throw ValidationError("mesh: isolated vertex");

  const EdgeTable et = build_edges(m);
  orient(m.triangles, et.edge_triangles, et.triangle_edges, et.edges);
  vertex_links(m);  // manifold vertex check

  const int chi = m.euler_characteristic();
  if (chi > 2 || chi % 2 != 0) {
    std::ostringstream os;
    os << "mesh: Euler characteristic " << chi << " is not that of a closed orientable surface";
    throw ValidationError(os.str());
  }
  m.genus = (2 - chi) / 2;
  return m;
}

void normalize_area(SurfaceMesh& m, double total) {
  if (!(total > 0.0)) throw ValidationError("normalize_area: total must be positive");
  const double s = total / m.total_area();
  for (double& a : m.area_weights) a *= s;
}

void normalize_hyperbolic(SurfaceMesh& m) {
  if (m.genus < 2) throw ValidationError("normalize_hyperbolic: genus must be at least 2");
  normalize_area(m, 2.0 * m.genus - 2.0);
}

// ---------------------------------------------------------------------------

double ImplicitSurface::value(const Vec3& p) const {
  double w = p.x() * p.x() / (a * a) + p.y() * p.y() / (b * b) - 1.0;
  for (double cx : holes) {
    const double dx = p.x() - cx, dy = p.y();
    w += bump * std::exp(-(dx * dx + dy * dy) / (width * width));
  }
  return p.z() * p.z() / (z * z) + w;
}

ImplicitSurface standard_surface(int genus, double cell) {
  ImplicitSurface s;
  s.cell = cell;
  switch (genus) {
    case 0:
      break;
    case 1:
      s.a = 1.4;
      s.holes = {0.0};
      break;
    case 2:
      s.holes = {-0.9, 0.9};
      break;
    case 3:
      s.a = 2.8;
      s.holes = {-1.65, 0.0, 1.65};
      break;
    default:
      throw ValidationError("standard_surface: genus must be 0..3");
  }
  return s;
}

SurfaceMesh polygonize(const ImplicitSurface& s) {
  if (!(s.cell > 0.0)) throw ValidationError("polygonize: cell must be positive");
  // One spare cell on each side keeps the whole surface strictly inside the grid.
  const double lo[3] = {-1.1 * s.a - s.cell, -1.1 * s.b - s.cell, -1.1 * s.z - s.cell};
  int count[3];
  const double hi[3] = {1.1 * s.a + s.cell, 1.1 * s.b + s.cell, 1.1 * s.z + s.cell};
  for (int d = 0; d < 3; ++d) count[d] = static_cast<int>(std::ceil((hi[d] - lo[d]) / s.cell)) + 1;
  // Offset the grid by a fraction of a cell so no grid node sits on a
  // symmetry plane of the surface.
  auto node = [&](int i, int j, int k) {
    return Vec3(lo[0] + (i + 0.5) * s.cell, lo[1] + (j + 0.5) * s.cell,
                lo[2] + (k + 0.5) * s.cell);
  };
  auto id = [&](int i, int j, int k) -> long long {
    return (static_cast<long long>(i) * count[1] + j) * count[2] + k;
  };
  std::vector<double> g(static_cast<std::size_t>(count[0]) * count[1] * count[2]);
  for (int i = 0; i < count[0]; ++i)
    for (int j = 0; j < count[1]; ++j)
      for (int k = 0; k < count[2]; ++k) {
        double v = s.value(node(i, j, k));
        if (std::abs(v) < 1e-9) v = 1e-9;
        g[id(i, j, k)] = v;
      }

  std::vector<Vec3> verts;
  std::unordered_map<std::uint64_t, int> welded;
  auto cut = [&](long long a, const Vec3& pa, long long b, const Vec3& pb) {
    if (a > b) return -1;  // never called this way
    const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) ^ static_cast<std::uint64_t>(b);
    auto it = welded.find(key);
    if (it != welded.end()) return it->second;
    double t = g[a] / (g[a] - g[b]);
    t = std::clamp(t, 1e-4, 1.0 - 1e-4);
    verts.push_back(pa + t * (pb - pa));
    const int vid = static_cast<int>(verts.size()) - 1;
    welded.emplace(key, vid);
    return vid;
  };

  // Kuhn split of the unit cube: tetrahedra along the main diagonal 0 -> 7.
  static const int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0},
                                    {0, 0, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
  static const int kTets[6][4] = {{0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7},
                                  {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7}};
  std::vector<Tri> tris;
  for (int i = 0; i + 1 < count[0]; ++i)
    for (int j = 0; j + 1 < count[1]; ++j)
      for (int k = 0; k + 1 < count[2]; ++k)
        for (const auto& tet : kTets) {
          long long ids[4];
          Vec3 pos[4];
          int pos_count = 0;
          for (int c = 0; c < 4; ++c) {
            const int* o = kCorner[tet[c]];
            ids[c] = id(i + o[0], j + o[1], k + o[2]);
            pos[c] = node(i + o[0], j + o[1], k + o[2]);
            if (g[ids[c]] > 0) ++pos_count;
          }
          if (pos_count == 0 || pos_count == 4) continue;
          std::vector<int> in, out;
          for (int c = 0; c < 4; ++c) (g[ids[c]] > 0 ? out : in).push_back(c);
          auto edge_vertex = [&](int c0, int c1) {
            return ids[c0] < ids[c1] ? cut(ids[c0], pos[c0], ids[c1], pos[c1])
                                     : cut(ids[c1], pos[c1], ids[c0], pos[c0]);
          };
          Vec3 pc = Vec3::Zero(), nc = Vec3::Zero();
          for (int c : out) pc += pos[c];
          for (int c : in) nc += pos[c];
          const Vec3 outward = pc / out.size() - nc / in.size();
          auto emit = [&](int a, int b, int c) {
            const Vec3 n = (verts[b] - verts[a]).cross(verts[c] - verts[a]);
            if (n.dot(outward) < 0) std::swap(b, c);
            tris.push_back({a, b, c});
          };
          if (in.size() == 1 || out.size() == 1) {
            const int apex = in.size() == 1 ? in[0] : out[0];
            const auto& others = in.size() == 1 ? out : in;
            emit(edge_vertex(apex, others[0]), edge_vertex(apex, others[1]),
                 edge_vertex(apex, others[2]));
          } else {
            const int a = edge_vertex(in[0], out[0]), b = edge_vertex(in[0], out[1]);
            const int c = edge_vertex(in[1], out[1]), d = edge_vertex(in[1], out[0]);
            emit(a, b, c);
            emit(a, c, d);
          }
        }
  return make_mesh(std::move(verts), std::move(tris));
}

std::vector<double> tilted_height(const SurfaceMesh& m) {
  std::vector<double> f(m.vertices.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec3& p = m.vertices[i];
    f[i] = p.x() + 0.0131 * p.y() + 0.0047 * p.z();
  }
  return f;
}

}  // namespace qmlab::mesh

namespace qmlab::mesh {

std::vector<double> random_smooth_field(const SurfaceMesh& m, std::uint64_t seed) {
  Rng rng = stream(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec3 dir(normal(rng), normal(rng), normal(rng));
  dir.normalize();
  struct Mode {
    Vec3 k;
    double amp, phase;
  };
  std::vector<Mode> modes(4);
  for (auto& mode : modes) {
    mode.k = Vec3(normal(rng), normal(rng), normal(rng)) * 1.2;
    mode.amp = 0.15 * uniform01(rng);
    mode.phase = 2.0 * std::numbers::pi * uniform01(rng);
  }
  std::vector<double> f(m.vertices.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec3& p = m.vertices[i];
    double v = dir.dot(p);
    for (const auto& mode : modes) v += mode.amp * std::cos(mode.k.dot(p) + mode.phase);
    f[i] = v;
  }
  return f;
}

}  // namespace qmlab::mesh
