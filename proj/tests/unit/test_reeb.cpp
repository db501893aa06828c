#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qmlab/error.hpp"
#include "qmlab/mesh.hpp"
#include "qmlab/reeb.hpp"

using namespace qmlab;
using namespace qmlab::mesh;
using namespace qmlab::reeb;

namespace {

// Round torus in the xy plane as an nu x nv quad grid, each quad split in two.
SurfaceMesh grid_torus(int nu, int nv, double big = 2.0, double small = 0.7) {
  std::vector<Vec3> v;
  std::vector<Tri> t;
  auto id = [&](int i, int j) { return ((i + nu) % nu) * nv + (j + nv) % nv; };
  for (int i = 0; i < nu; ++i) {
    const double u = 2 * std::numbers::pi * (i + 0.3) / nu;
    for (int j = 0; j < nv; ++j) {
      const double w = 2 * std::numbers::pi * (j + 0.2) / nv;
      v.emplace_back((big + small * std::cos(w)) * std::cos(u), (big + small * std::cos(w)) * std::sin(u),
                     small * std::sin(w));
    }
  }
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      t.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      t.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return make_mesh(std::move(v), std::move(t));
}

SurfaceMesh tetrahedron() {
  return make_mesh({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)},
                   {Tri{0, 2, 1}, Tri{0, 1, 3}, Tri{0, 3, 2}, Tri{1, 2, 3}});
}

// Independent PL classification: number of sign changes of f - f(v) along
// the link edges of v (each triangle (v, a, b) contributes the edge ab).
struct Counts {
  int minima = 0, maxima = 0, saddles = 0;
  std::vector<double> saddle_values;
};

Counts link_counts(const SurfaceMesh& m, const std::vector<double>& f) {
  const auto g = tie_break(f);
  std::vector<int> changes(m.vertices.size(), 0), above(m.vertices.size(), 0);
  for (const auto& tri : m.triangles)
    for (int c = 0; c < 3; ++c) {
      const int v = tri[c], a = tri[(c + 1) % 3], b = tri[(c + 2) % 3];
      if ((g[a] > g[v]) != (g[b] > g[v])) ++changes[v];
      if (g[a] > g[v]) ++above[v];
    }
  Counts out;
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    if (changes[v] == 0) (above[v] > 0 ? out.minima : out.maxima)++;
    if (changes[v] >= 4) {
      out.saddles += changes[v] / 2 - 1;
      out.saddle_values.push_back(f[v]);
    }
  }
  std::sort(out.saddle_values.begin(), out.saddle_values.end());
  return out;
}

double surface_integral(const SurfaceMesh& m, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.triangles.size(); ++i) {
    const auto& t = m.triangles[i];
    s += m.area_weights[i] * (f[t[0]] + f[t[1]] + f[t[2]]) / 3.0;
  }
  return s;
}

int count_type(const ReebGraph& g, NodeType t) {
  return static_cast<int>(std::count_if(g.nodes.begin(), g.nodes.end(), [&](const Node& n) { return n.type == t; }));
}

const SurfaceMesh& genus_mesh(int g) {
  static const SurfaceMesh m2 = [] {
    auto m = polygonize(standard_surface(2, 0.07));
    normalize_hyperbolic(m);
    return m;
  }();
  static const SurfaceMesh m3 = [] {
    auto m = polygonize(standard_surface(3, 0.08));
    normalize_hyperbolic(m);
    return m;
  }();
  return g == 2 ? m2 : m3;
}

}  // namespace

TEST_CASE("mesh validation") {
  const auto tet = tetrahedron();
  CHECK(tet.genus == 0);
  CHECK(tet.euler_characteristic() == 2);
  CHECK_THROWS_AS(make_mesh({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {Tri{0, 1, 2}}), ValidationError);
  // Two tetrahedra sharing an edge pinch it into four triangles.
  std::vector<Vec3> v{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(0, -1, 0), Vec3(0, 0, -1)};
  std::vector<Tri> t{{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}, {0, 1, 4}, {0, 5, 1}, {0, 4, 5}, {1, 5, 4}};
  CHECK_THROWS_AS(make_mesh(v, t), ValidationError);
  CHECK_THROWS_AS(make_mesh(tet.vertices, tet.triangles, {1.0, 1.0, -1.0, 1.0}), ValidationError);
  auto torus = grid_torus(12, 8);
  CHECK(torus.genus == 1);
  CHECK_THROWS_AS(normalize_hyperbolic(torus), ValidationError);
}

TEST_CASE("generated meshes have the requested genus") {
  for (int g = 0; g <= 3; ++g) {
    const auto m = polygonize(standard_surface(g, 0.1));
    CHECK(m.genus == g);
    CHECK(m.euler_characteristic() == 2 - 2 * g);
  }
  CHECK(genus_mesh(2).total_area() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("sphere height") {
  const auto m = polygonize(standard_surface(0, 0.1));
  const auto g = build_reeb(m, tilted_height(m));
  CHECK(g.nodes.size() == 2);
  CHECK(g.arcs.size() == 1);
  CHECK(g.euler_sum() == 2);
  const auto pruned = prune(g);
  CHECK(pruned.nodes.size() == 1);
  CHECK(pruned.arcs.empty());
}

TEST_CASE("round torus height") {
  const auto m = grid_torus(24, 12);
  std::vector<double> f;
  for (const auto& p : m.vertices) f.push_back(p.x() + 0.0131 * p.y() + 0.0047 * p.z());
  MorseData md;
  const auto g = build_reeb(m, f, &md);
  CHECK(g.nodes.size() == 4);
  CHECK(count_type(g, NodeType::Saddle) == 2);
  CHECK(count_type(g, NodeType::Min) == 1);
  CHECK(count_type(g, NodeType::Max) == 1);
  CHECK(g.arcs.size() == 4);
  CHECK(g.euler_sum() == 0);
  const auto pruned = prune(g);
  CHECK(pruned.nodes.size() == 2);
  for (const auto& n : pruned.nodes) CHECK(pruned.degree(n.id) == 2);
  CHECK(trivalent_vertices(pruned).empty());
  const auto c = link_counts(m, f);
  CHECK(c.saddles == 2);
  CHECK(c.minima == 1);
  CHECK(c.maxima == 1);
  double measure = 0.0;
  for (const auto& a : g.arcs) measure += a.density.total();
  CHECK(measure == doctest::Approx(m.total_area()).epsilon(1e-12));
}

TEST_CASE("genus-2 height graph") {
  const auto& m = genus_mesh(2);
  const auto f = tilted_height(m);
  const auto g = build_reeb(m, f);
  CHECK(g.nodes.size() == 6);
  CHECK(count_type(g, NodeType::Saddle) == 4);
  CHECK(g.euler_sum() == -2);
  for (const auto& a : g.arcs) CHECK(g.node(a.lower).value < g.node(a.upper).value);
  int steps = 0;
  const auto pruned = prune(g, std::nullopt, [&](const ReebGraph& h) {
    ++steps;
    CHECK(h.euler_sum() == -2);
  });
  CHECK(steps == 2);
  const auto tri = trivalent_vertices(pruned);
  CHECK(tri.size() == 2);
  const auto c = link_counts(m, f);
  REQUIRE(c.saddle_values.size() == 4);
  std::vector<double> tri_values;
  for (int id : tri) tri_values.push_back(g.node(id).value);
  std::sort(tri_values.begin(), tri_values.end());
  CHECK(tri_values[0] == doctest::Approx(c.saddle_values[1]).epsilon(1e-12));
  CHECK(tri_values[1] == doctest::Approx(c.saddle_values[2]).epsilon(1e-12));
}

TEST_CASE("pruning is idempotent and order independent") {
  const auto& m = genus_mesh(3);
  const auto g = build_reeb(m, tilted_height(m));
  CHECK(count_type(g, NodeType::Saddle) == 6);
  const auto pruned = prune(g);
  const auto again = prune(pruned);
  CHECK(again.nodes.size() == pruned.nodes.size());
  CHECK(again.arcs.size() == pruned.arcs.size());
  CHECK(trivalent_vertices(pruned).size() == 4);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto shuffled = prune(g, seed);
    CHECK(trivalent_vertices(shuffled) == trivalent_vertices(pruned));
    CHECK(shuffled.arcs.size() == pruned.arcs.size());
  }
}

TEST_CASE("property: random Morse fields") {
  for (int genus : {2, 3}) {
    const auto& m = genus_mesh(genus);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto f = random_smooth_field(m, seed);
      MorseData md;
      const auto g = build_reeb(m, f, &md);
      const int saddles = count_type(g, NodeType::Saddle);
      const int extrema = count_type(g, NodeType::Min) + count_type(g, NodeType::Max);
      CHECK(saddles - extrema == 2 * genus - 2);
      CHECK(g.euler_sum() == 2 - 2 * genus);
      const auto c = link_counts(m, f);
      CHECK(c.saddles == saddles);
      CHECK(c.minima + c.maxima == extrema);
      const auto cls = classify_vertices(m, f);
      CHECK(std::count(cls.begin(), cls.end(), NodeType::Saddle) == c.saddles);
      const auto pruned = prune(g, std::nullopt, [&](const ReebGraph& h) { CHECK(h.euler_sum() == 2 - 2 * genus); });
      CHECK(trivalent_vertices(pruned).size() == static_cast<std::size_t>(2 * genus - 2));
      CHECK(graph_integral(g, GraphHamiltonian::constant(g, 1.0)) ==
            doctest::Approx(2.0 * genus - 2).epsilon(1e-12));
    }
  }
}

TEST_CASE("tie break") {
  const auto t = tie_break({1.0, 0.0, 1.0, 1.0, -2.0});
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = i + 1; j < t.size(); ++j) CHECK(t[i] != t[j]);
  CHECK(t[0] < t[2]);
  CHECK(t[2] < t[3]);
  CHECK(t[1] < t[0]);
  CHECK(t[4] < t[1]);
}

TEST_CASE("graph integrals") {
  const auto& m = genus_mesh(2);
  const auto f = tilted_height(m);
  MorseData md;
  const auto g = build_reeb(m, f, &md);
  CHECK(graph_integral(g, GraphHamiltonian::constant(g, 2.5)) == doctest::Approx(5.0).epsilon(1e-12));
  const auto hf = GraphHamiltonian::of_height(g, [](double t) { return t; });
  const double oracle = surface_integral(m, md.effective);
  CHECK(std::abs(graph_integral(g, hf) - oracle) < 1e-10);
  // The surface is symmetric under x -> -x up to the tilt and the grid offset.
  CHECK(std::abs(graph_integral(g, hf)) < 5e-3);
  // Indicator of one pendant arc.
  const Arc* pendant = nullptr;
  for (const auto& a : g.arcs)
    if (g.node(a.lower).type == NodeType::Min) pendant = &a;
  REQUIRE(pendant);
  GraphHamiltonian ind = GraphHamiltonian::constant(g, 0.0);
  ind.edges[pendant->id] = {{pendant->t_lo, 1.0}, {pendant->t_hi, 1.0}};
  CHECK(graph_integral(g, ind) == doctest::Approx(pendant->density.total()).epsilon(1e-12));
  GraphHamiltonian missing = GraphHamiltonian::constant(g, 1.0);
  missing.edges.erase(pendant->id);
  CHECK_THROWS(graph_integral(g, missing));
}

TEST_CASE("reduced integral") {
  const auto& m = genus_mesh(2);
  const auto f = tilted_height(m);
  MorseData md;
  const auto g = build_reeb(m, f, &md);
  for (double c : {0.0, 1.0, -3.7})
    CHECK(std::abs(reduced_integral(g, GraphHamiltonian::constant(g, c))) < 1e-12);
  const auto h1 = GraphHamiltonian::of_height(g, [](double t) { return t; });
  const auto h2 = GraphHamiltonian::of_height(g, [](double t) { return std::sin(2 * t) + 0.3 * t * t; });
  const double a = 1.7, b = -0.4;
  const double lin = reduced_integral(g, GraphHamiltonian::combine(a, h1, b, h2));
  CHECK(std::abs(lin - a * reduced_integral(g, h1) - b * reduced_integral(g, h2)) < 1e-12);
  const auto shifted = GraphHamiltonian::combine(1.0, h2, 1.0, GraphHamiltonian::constant(g, 2.0));
  CHECK(std::abs(reduced_integral(g, shifted) - reduced_integral(g, h2)) < 1e-12);
  const auto c = link_counts(m, md.effective);
  const double oracle = surface_integral(m, md.effective) - c.saddle_values[1] - c.saddle_values[2];
  CHECK(std::abs(reduced_integral(g, h1) - oracle) < 1e-10);
}

TEST_CASE("reduced integral preconditions") {
  const auto torus = grid_torus(12, 8);
  std::vector<double> f;
  for (const auto& p : torus.vertices) f.push_back(p.x() + 0.01 * p.y());
  const auto gt = build_reeb(torus, f);
  CHECK_THROWS_AS(reduced_integral(gt, GraphHamiltonian::constant(gt, 1.0)), ValidationError);
  auto m = polygonize(standard_surface(2, 0.1));
  const auto g = build_reeb(m, tilted_height(m));
  CHECK_THROWS_AS(reduced_integral(g, GraphHamiltonian::constant(g, 1.0)), ValidationError);
}

TEST_CASE("surface field import") {
  const auto& m = genus_mesh(2);
  const auto f = tilted_height(m);
  MorseData md;
  const auto g = build_reeb(m, f, &md);
  std::vector<double> h(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) h[i] = 2.0 * md.effective[i] - 1.0;
  const auto gh = import_field(m, g, md, h);
  const auto expect = GraphHamiltonian::of_height(g, [](double t) { return 2.0 * t - 1.0; });
  CHECK(graph_integral(g, gh) == doctest::Approx(graph_integral(g, expect)).epsilon(1e-10));
  CHECK(reduced_integral(g, gh) == doctest::Approx(reduced_integral(g, expect)).epsilon(1e-10));
  std::vector<double> y(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) y[i] = m.vertices[i].y();
  CHECK_THROWS_AS(import_field(m, g, md, y), ValidationError);
}

TEST_CASE("node values of graph Hamiltonians") {
  const auto& m = genus_mesh(2);
  const auto g = build_reeb(m, tilted_height(m));
  auto h = GraphHamiltonian::of_height(g, [](double t) { return t * t; });
  for (const auto& n : g.nodes) CHECK(h.node_value(g, n.id) == doctest::Approx(n.value * n.value).epsilon(1e-12));
  const int arc = g.arcs[1].id;
  h.edges[arc].front().second += 0.5;
  CHECK_THROWS(h.node_value(g, g.arc(arc).lower));
}
