#include "qmlab/reeb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "qmlab/error.hpp"
#include "qmlab/parallel.hpp"

namespace qmlab::reeb {

namespace {

struct Piece {
  double t0, t1, r0, r1;
  double at(double s) const { return r0 + (r1 - r0) * (s - t0) / (t1 - t0); }
};

double interpolate(const std::vector<std::pair<double, double>>& pts, double s) {
  if (s <= pts.front().first) return pts.front().second;
  if (s >= pts.back().first) return pts.back().second;
  auto it = std::upper_bound(pts.begin(), pts.end(), s,
                             [](double v, const auto& p) { return v < p.first; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  return lo.second + (hi.second - lo.second) * (s - lo.first) / (hi.first - lo.first);
}

int sign_changes(const std::vector<int>& link, const std::vector<double>& f, int v) {
  int changes = 0;
  const std::size_t k = link.size();
  for (std::size_t i = 0; i < k; ++i) {
    const bool a = f[link[i]] > f[v];
    const bool b = f[link[(i + 1) % k]] > f[v];
    if (a != b) ++changes;
  }
  return changes;
}

NodeType classify(const std::vector<int>& link, const std::vector<double>& f, int v) {
  const int c = sign_changes(link, f, v);
  if (c == 0) return f[link.front()] > f[v] ? NodeType::Min : NodeType::Max;
  if (c == 2) return NodeType::Regular;
  if (c == 4) return NodeType::Saddle;
  std::ostringstream os;
  os << "reeb: degenerate saddle (" << c / 2 << " lower wedges) at vertex " << v;
  throw ValidationError(os.str());
}

// Density of an arc from its pieces: exact sums at every breakpoint, right
// limits in the interior and at t_lo, left limit at t_hi.
Density assemble(std::vector<Piece> pieces, double t_lo, double t_hi) {
  std::vector<double> ts{t_lo, t_hi};
  for (const auto& p : pieces) {
    ts.push_back(p.t0);
    ts.push_back(p.t1);
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) { return a.t0 < b.t0; });

  Density d;
  d.t = ts;
  d.rho.assign(ts.size(), 0.0);
  std::vector<const Piece*> active, keep;
  std::size_t next = 0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double s = ts[k];
    const bool last = k + 1 == ts.size();
    while (next < pieces.size() && pieces[next].t0 <= s) active.push_back(&pieces[next++]);
    keep.clear();
    double sum = 0.0;
    for (const Piece* p : active) {
      if (last) {
        if (p->t0 < s && s <= p->t1) sum += p->at(s);
      } else if (p->t0 <= s && s < p->t1) {
        sum += p->t0 == s ? p->r0 : p->at(s);
      }
      if (p->t1 > s) keep.push_back(p);
    }
    active.swap(keep);
    d.rho[k] = sum;
  }
  return d;
}

}  // namespace

const char* to_string(NodeType t) {
  switch (t) {
    case NodeType::Min:
      return "min";
    case NodeType::Max:
      return "max";
    case NodeType::Saddle:
      return "saddle";
    case NodeType::Regular:
      return "regular";
  }
  return "?";
}

double Density::value(double s) const {
  if (t.empty() || s < t.front() || s > t.back()) return 0.0;
  if (s == t.back()) return rho.back();
  auto it = std::upper_bound(t.begin(), t.end(), s);
  const std::size_t k = static_cast<std::size_t>(it - t.begin());
  return rho[k - 1] + (rho[k] - rho[k - 1]) * (s - t[k - 1]) / (t[k] - t[k - 1]);
}

double Density::total() const {
  std::vector<double> parts;
  for (std::size_t k = 1; k < t.size(); ++k) parts.push_back(0.5 * (t[k] - t[k - 1]) * (rho[k] + rho[k - 1]));
  return pairwise_sum(parts);
}

const Node& ReebGraph::node(int id) const {
  for (const auto& n : nodes)
    if (n.id == id) return n;
  throw ValidationError("reeb: unknown node id " + std::to_string(id));
}

const Arc& ReebGraph::arc(int id) const {
  for (const auto& a : arcs)
    if (a.id == id) return a;
  throw ValidationError("reeb: unknown arc id " + std::to_string(id));
}

int ReebGraph::degree(int node_id) const {
  int d = 0;
  for (const auto& a : arcs) d += (a.lower == node_id) + (a.upper == node_id);
  return d;
}

int ReebGraph::euler_sum() const {
  std::unordered_map<int, int> deg;
  for (const auto& n : nodes) deg[n.id] = 0;
  for (const auto& a : arcs) {
    ++deg[a.lower];
    ++deg[a.upper];
  }
  int s = 0;
  for (const auto& [id, d] : deg) s += 2 - d;
  return s;
}

std::vector<double> tie_break(const std::vector<double>& f) {
  std::vector<int> order(f.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b] || (f[a] == f[b] && a < b); });
  double scale = 0.0;
  for (double v : f) scale = std::max(scale, std::abs(v));
  const double eps = 1e-12 * std::max(scale, 1.0);
  std::vector<double> out(f);
  for (std::size_t i = 1; i < order.size(); ++i)
    if (out[order[i]] <= out[order[i - 1]]) out[order[i]] = out[order[i - 1]] + eps;
  return out;
}

std::vector<NodeType> classify_vertices(const mesh::SurfaceMesh& m, const std::vector<double>& f) {
  if (f.size() != m.vertices.size()) throw ValidationError("reeb: one value per vertex required");
  const auto eff = tie_break(f);
  const auto links = mesh::vertex_links(m);
  std::vector<NodeType> out(m.vertices.size());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = classify(links[v], eff, static_cast<int>(v));
  return out;
}

ReebGraph build_reeb(const mesh::SurfaceMesh& m, const std::vector<double>& f, MorseData* morse) {
  const int nv = static_cast<int>(m.vertices.size());
  if (static_cast<int>(f.size()) != nv) throw ValidationError("reeb: one value per vertex required");
  for (double v : f)
    if (!std::isfinite(v)) throw ValidationError("reeb: non-finite field value");

  const std::vector<double> eff = tie_break(f);
  const auto links = mesh::vertex_links(m);
  const mesh::EdgeTable et = mesh::build_edges(m);
  const int ne = static_cast<int>(et.edges.size());

  std::vector<std::vector<int>> vertex_edges(nv);
  for (int e = 0; e < ne; ++e) {
    vertex_edges[et.edges[e][0]].push_back(e);
    vertex_edges[et.edges[e][1]].push_back(e);
  }
  std::vector<int> order(nv);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return eff[a] < eff[b]; });

  ReebGraph g;
  g.genus = m.genus;
  g.total_area = m.total_area();
  std::vector<char> done(nv, 0);
  std::vector<int> label(ne, -1);
  std::vector<std::vector<std::pair<double, int>>> history(ne);
  std::vector<NodeType> vtype(nv, NodeType::Regular);
  std::vector<int> varc(nv, -1);

  auto other = [&](int e, int v) { return et.edges[e][0] == v ? et.edges[e][1] : et.edges[e][0]; };
  auto new_node = [&](int v, NodeType t) {
    g.nodes.push_back({static_cast<int>(g.nodes.size()), v, eff[v], t});
    return g.nodes.back().id;
  };
  auto new_arc = [&](int lower, double t) {
    Arc a;
    a.id = static_cast<int>(g.arcs.size());
    a.lower = lower;
    a.upper = -1;
    a.t_lo = t;
    g.arcs.push_back(a);
    return a.id;
  };
  auto set_label = [&](int e, int arc, double t) {
    label[e] = arc;
    history[e].push_back({t, arc});
  };
  auto close_arc = [&](int arc, int node, double t) {
    if (g.arcs[arc].upper != -1) throw NumericalError("reeb: arc closed twice");
    g.arcs[arc].upper = node;
    g.arcs[arc].t_hi = t;
  };
  auto lower_labels = [&](int v) {
    std::vector<int> ls;
    for (int e : vertex_edges[v])
      if (done[other(e, v)]) ls.push_back(label[e]);
    std::sort(ls.begin(), ls.end());
    ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
    return ls;
  };

  std::vector<int> stamp(ne, -1);
  for (int v : order) {
    const double t = eff[v];
    const NodeType type = classify(links[v], eff, v);
    vtype[v] = type;
    switch (type) {
      case NodeType::Min: {
        const int node = new_node(v, type);
        const int arc = new_arc(node, t);
        for (int e : vertex_edges[v]) set_label(e, arc, t);
        done[v] = 1;
        break;
      }
      case NodeType::Max: {
        const auto ls = lower_labels(v);
        if (ls.size() != 1) throw NumericalError("reeb: maximum closes more than one component");
        close_arc(ls[0], new_node(v, type), t);
        done[v] = 1;
        break;
      }
      case NodeType::Regular: {
        const auto ls = lower_labels(v);
        if (ls.size() != 1) {
          std::ostringstream os;
          os << "reeb: regular vertex " << v << " touches " << ls.size() << " level components";
          throw NumericalError(os.str());
        }
        varc[v] = ls[0];
        for (int e : vertex_edges[v])
          if (!done[other(e, v)]) set_label(e, ls[0], t);
        done[v] = 1;
        break;
      }
      case NodeType::Saddle: {
        const auto ls = lower_labels(v);
        const int node = new_node(v, type);
        for (int arc : ls) close_arc(arc, node, t);
        done[v] = 1;
        // Level components just above t through the upper edges of v: flood
        // fill over crossing edges, adjacent when they share a triangle.
        int out = 0;
        for (int e0 : vertex_edges[v]) {
          if (done[other(e0, v)] || stamp[e0] == v) continue;
          const int arc = new_arc(node, t);
          ++out;
          std::vector<int> stack{e0};
          stamp[e0] = v;
          while (!stack.empty()) {
            const int e = stack.back();
            stack.pop_back();
            set_label(e, arc, t);
            for (int tri : et.edge_triangles[e]) {
              for (int e2 : et.triangle_edges[tri]) {
                if (e2 == e || stamp[e2] == v) continue;
                if (done[et.edges[e2][0]] == done[et.edges[e2][1]]) continue;
                stamp[e2] = v;
                stack.push_back(e2);
              }
            }
          }
        }
        if (static_cast<int>(ls.size()) + out != 3) {
          std::ostringstream os;
          os << "reeb: saddle at vertex " << v << " has " << ls.size() << " incoming and " << out
             << " outgoing level components";
          throw ValidationError(os.str());
        }
        break;
      }
    }
  }
  for (const auto& a : g.arcs)
    if (a.upper == -1) throw NumericalError("reeb: unterminated arc");

  // Pushforward of the area: on each triangle with values a < b < c the
  // density is the tent with peak 2 * area / (c - a) at b. Its level segments
  // follow the long edge (a, c), whose arc history splits the tent.
  std::vector<std::vector<Piece>> pieces(g.arcs.size());
  std::vector<std::vector<int>> arc_tris(g.arcs.size());
  for (std::size_t ti = 0; ti < m.triangles.size(); ++ti) {
    std::array<int, 3> vs = m.triangles[ti];
    std::sort(vs.begin(), vs.end(), [&](int x, int y) { return eff[x] < eff[y]; });
    const double a = eff[vs[0]], b = eff[vs[1]], c = eff[vs[2]];
    const double peak = 2.0 * m.area_weights[ti] / (c - a);
    int long_edge = -1;
    for (int e : et.triangle_edges[ti]) {
      const auto& ed = et.edges[e];
      if ((ed[0] == vs[0] && ed[1] == vs[2]) || (ed[0] == vs[2] && ed[1] == vs[0])) long_edge = e;
    }
    const auto& hist = history[long_edge];
    auto tent = [&](double s) {
      if (s <= b) return b > a ? peak * (s - a) / (b - a) : peak;
      return c > b ? peak * (c - s) / (c - b) : peak;
    };
    for (std::size_t h = 0; h < hist.size(); ++h) {
      const double s0 = hist[h].first;
      const double s1 = h + 1 < hist.size() ? hist[h + 1].first : c;
      const int arc = hist[h].second;
      if (!(s1 > s0)) continue;
      bool touched = false;
      if (s0 < b) {
        const double e1 = std::min(s1, b);
        pieces[arc].push_back({s0, e1, s0 == a ? 0.0 : tent(s0), e1 == b ? peak : tent(e1)});
        touched = true;
      }
      if (s1 > b) {
        const double e0 = std::max(s0, b);
        pieces[arc].push_back({e0, s1, e0 == b ? peak : tent(e0), s1 == c ? 0.0 : tent(s1)});
        touched = true;
      }
      if (touched) arc_tris[arc].push_back(static_cast<int>(ti));
    }
  }
  for (std::size_t i = 0; i < g.arcs.size(); ++i) {
    Arc& arc = g.arcs[i];
    for (const auto& p : pieces[i])
      if (p.t0 < arc.t_lo - 1e-12 * (1.0 + std::abs(arc.t_lo)) ||
          p.t1 > arc.t_hi + 1e-12 * (1.0 + std::abs(arc.t_hi)))
        throw NumericalError("reeb: area piece outside its arc");
    arc.density = assemble(std::move(pieces[i]), arc.t_lo, arc.t_hi);
    std::sort(arc_tris[i].begin(), arc_tris[i].end());
    arc.triangle_count = static_cast<int>(
        std::unique(arc_tris[i].begin(), arc_tris[i].end()) - arc_tris[i].begin());
  }
  if (morse) {
    morse->effective = eff;
    morse->vertex_type = std::move(vtype);
    morse->vertex_arc = std::move(varc);
  }
  return g;
}

// ---------------------------------------------------------------------------

ReebGraph prune(const ReebGraph& g, std::optional<std::uint64_t> seed,
                const std::function<void(const ReebGraph&)>& on_step) {
  ReebGraph cur = g;
  std::map<int, int> deg;
  for (const auto& n : cur.nodes) deg[n.id] = 0;
  for (const auto& a : cur.arcs) {
    ++deg[a.lower];
    ++deg[a.upper];
  }
  std::set<int> leaves;
  for (const auto& [id, d] : deg)
    if (d == 1) leaves.insert(id);
  std::optional<Rng> rng;
  if (seed) rng = stream(*seed, 0);
  while (!leaves.empty()) {
    auto it = leaves.begin();
    if (rng) std::advance(it, std::uniform_int_distribution<std::size_t>(0, leaves.size() - 1)(*rng));
    const int leaf = *it;
    leaves.erase(it);
    auto arc_it = std::find_if(cur.arcs.begin(), cur.arcs.end(),
                               [&](const Arc& a) { return a.lower == leaf || a.upper == leaf; });
    const int nb = arc_it->lower == leaf ? arc_it->upper : arc_it->lower;
    cur.arcs.erase(arc_it);
    cur.nodes.erase(std::find_if(cur.nodes.begin(), cur.nodes.end(),
                                 [&](const Node& n) { return n.id == leaf; }));
    deg.erase(leaf);
    const int d = --deg[nb];
    if (d == 1) leaves.insert(nb);
    if (d == 0) leaves.erase(nb);
    if (on_step) on_step(cur);
  }
  if (cur.nodes.empty()) throw NumericalError("reeb: pruning emptied the graph");
  return cur;
}

std::set<int> trivalent_vertices(const ReebGraph& pruned) {
  if (pruned.genus < 1)
    throw ValidationError("reeb: the trivalent set is defined for genus >= 1 only");
  std::set<int> out;
  for (const auto& n : pruned.nodes) {
    const int d = pruned.degree(n.id);
    if (d == 1) throw ValidationError("reeb: graph is not pruned");
    if (d == 3) out.insert(n.id);
  }
  const std::size_t expected = static_cast<std::size_t>(2 * pruned.genus - 2);
  if (out.size() != expected) {
    std::ostringstream os;
    os << "reeb: " << out.size() << " trivalent vertices, expected 2g-2 = " << expected;
    throw NumericalError(os.str());
  }
  return out;
}

// ---------------------------------------------------------------------------

GraphHamiltonian GraphHamiltonian::constant(const ReebGraph& g, double c) {
  GraphHamiltonian h;
  for (const auto& a : g.arcs) h.edges[a.id] = {{a.t_lo, c}, {a.t_hi, c}};
  return h;
}

GraphHamiltonian GraphHamiltonian::of_height(const ReebGraph& g,
                                             const std::function<double(double)>& psi) {
  GraphHamiltonian h;
  for (const auto& a : g.arcs) {
    auto& pts = h.edges[a.id];
    for (double t : a.density.t) pts.push_back({t, psi(t)});
  }
  return h;
}

GraphHamiltonian GraphHamiltonian::combine(double a, const GraphHamiltonian& h1, double b,
                                           const GraphHamiltonian& h2) {
  GraphHamiltonian h;
  for (const auto& [id, p1] : h1.edges) {
    auto it = h2.edges.find(id);
    if (it == h2.edges.end()) throw ValidationError("combine: arc sets differ");
    std::vector<double> ts;
    for (const auto& p : p1) ts.push_back(p.first);
    for (const auto& p : it->second) ts.push_back(p.first);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    auto& out = h.edges[id];
    for (double t : ts) out.push_back({t, a * interpolate(p1, t) + b * interpolate(it->second, t)});
  }
  if (h.edges.size() != h2.edges.size()) throw ValidationError("combine: arc sets differ");
  return h;
}

double GraphHamiltonian::value(int arc_id, double t) const {
  auto it = edges.find(arc_id);
  if (it == edges.end() || it->second.empty())
    throw ValidationError("graph hamiltonian: no data on arc " + std::to_string(arc_id));
  return interpolate(it->second, t);
}

double GraphHamiltonian::node_value(const ReebGraph& g, int node_id, double tol) const {
  std::optional<double> v;
  for (const auto& a : g.arcs) {
    for (int end = 0; end < 2; ++end) {
      if ((end == 0 ? a.lower : a.upper) != node_id) continue;
      const double x = value(a.id, end == 0 ? a.t_lo : a.t_hi);
      if (!v) {
        v = x;
      } else if (std::abs(*v - x) > tol * (1.0 + std::abs(x))) {
        std::ostringstream os;
        os << "graph hamiltonian: limits disagree at node " << node_id << " (" << *v << " vs " << x
           << ")";
        throw ValidationError(os.str());
      }
    }
  }
  if (!v) throw ValidationError("graph hamiltonian: node " + std::to_string(node_id) + " has no arcs");
  return *v;
}

double graph_integral(const ReebGraph& g, const GraphHamiltonian& h) {
  std::vector<double> per_arc;
  per_arc.reserve(g.arcs.size());
  for (const auto& a : g.arcs) {
    auto it = h.edges.find(a.id);
    if (it == h.edges.end() || it->second.empty())
      throw ValidationError("graph_integral: no data on arc " + std::to_string(a.id));
    const auto& pts = it->second;
    for (std::size_t k = 1; k < pts.size(); ++k)
      if (!(pts[k].first > pts[k - 1].first))
        throw ValidationError("graph_integral: breakpoints must increase on arc " + std::to_string(a.id));
    const double slack = 1e-9 * (1.0 + std::abs(a.t_lo) + std::abs(a.t_hi));
    if (pts.front().first > a.t_lo + slack || pts.back().first < a.t_hi - slack)
      throw ValidationError("graph_integral: data does not cover arc " + std::to_string(a.id));

    std::vector<double> ts = a.density.t;
    for (const auto& p : pts)
      if (p.first > a.t_lo && p.first < a.t_hi) ts.push_back(p.first);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    // Product of two linear functions on each interval: Simpson is exact.
    std::vector<double> parts;
    parts.reserve(ts.size());
    for (std::size_t k = 1; k < ts.size(); ++k) {
      const double u = ts[k - 1], w = ts[k], mid = 0.5 * (u + w);
      const double fu = interpolate(pts, u) * a.density.value(u);
      const double fm = interpolate(pts, mid) * a.density.value(mid);
      const double fw = interpolate(pts, w) * a.density.value(w);
      parts.push_back((w - u) / 6.0 * (fu + 4.0 * fm + fw));
    }
    per_arc.push_back(pairwise_sum(parts));
  }
  return pairwise_sum(per_arc);
}

double reduced_integral(const ReebGraph& g, const GraphHamiltonian& h) {
  if (g.genus < 2) throw ValidationError("reduced_integral: genus must be at least 2");
  double total = 0.0;
  for (const auto& a : g.arcs) total += a.density.total();
  const double expected = 2.0 * g.genus - 2.0;
  if (std::abs(total - expected) > 1e-9 * expected) {
    std::ostringstream os;
    os << "reduced_integral: total area " << total << " is not normalized to 2g-2 = " << expected;
    throw ValidationError(os.str());
  }
  const ReebGraph pruned = prune(g);
  double vertex_sum = 0.0;
  for (int id : trivalent_vertices(pruned)) vertex_sum += h.node_value(g, id);
  return graph_integral(g, h) - vertex_sum;
}

GraphHamiltonian import_field(const mesh::SurfaceMesh& m, const ReebGraph& g,
                              const MorseData& morse, const std::vector<double>& h, double tol) {
  if (h.size() != m.vertices.size()) throw ValidationError("import: one value per vertex required");
  const auto& f = morse.effective;
  double scale = 1.0;
  for (double v : h) scale = std::max(scale, std::abs(v));
  for (std::size_t ti = 0; ti < m.triangles.size(); ++ti) {
    std::array<int, 3> vs = m.triangles[ti];
    std::sort(vs.begin(), vs.end(), [&](int x, int y) { return f[x] < f[y]; });
    const double lam = (f[vs[1]] - f[vs[0]]) / (f[vs[2]] - f[vs[0]]);
    const double pred = h[vs[0]] + lam * (h[vs[2]] - h[vs[0]]);
    if (std::abs(pred - h[vs[1]]) > tol * scale) {
      std::ostringstream os;
      os << "import: H is not constant on level sets of F near triangle " << ti << " (deviation "
         << std::abs(pred - h[vs[1]]) << ")";
      throw ValidationError(os.str());
    }
  }
  std::map<int, std::vector<std::pair<double, double>>> interior;
  for (std::size_t v = 0; v < m.vertices.size(); ++v)
    if (morse.vertex_arc[v] >= 0) interior[morse.vertex_arc[v]].push_back({f[v], h[v]});
  GraphHamiltonian out;
  for (const auto& a : g.arcs) {
    auto& pts = out.edges[a.id];
    pts.push_back({a.t_lo, h[g.node(a.lower).vertex]});
    auto it = interior.find(a.id);
    if (it != interior.end()) {
      std::sort(it->second.begin(), it->second.end());
      pts.insert(pts.end(), it->second.begin(), it->second.end());
    }
    pts.push_back({a.t_hi, h[g.node(a.upper).vertex]});
  }
  return out;
}

}  // namespace qmlab::reeb
