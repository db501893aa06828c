#include "qmlab/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qmlab/error.hpp"

namespace qmlab::io {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

std::string child(const std::string& where, const std::string& key) { return where + "." + key; }

std::string child(const std::string& where, std::size_t index) {
  return where + "[" + std::to_string(index) + "]";
}

void require_object(const Json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
}

const Json& member(const Json& j, const std::string& key, const std::string& where) {
  require_object(j, where);
  const auto it = j.find(key);
  if (it == j.end()) fail(child(where, key), "missing");
  return *it;
}

const Json& array(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array");
  return j;
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "not finite");
  return v;
}

int integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

std::string string(const Json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

double number_or(const Json& j, const std::string& key, double fallback, const std::string& where) {
  require_object(j, where);
  const auto it = j.find(key);
  return it == j.end() ? fallback : number(*it, child(where, key));
}

int integer_or(const Json& j, const std::string& key, int fallback, const std::string& where) {
  require_object(j, where);
  const auto it = j.find(key);
  return it == j.end() ? fallback : integer(*it, child(where, key));
}

std::vector<double> numbers(const Json& j, const std::string& where) {
  array(j, where);
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], child(where, i)));
  return out;
}

// Row-major rows x cols matrix given flat or as a list of rows.
symp::Matrix matrix(const Json& j, int rows, int cols, const std::string& where) {
  array(j, where);
  symp::Matrix m(rows, cols);
  if (!j.empty() && j[0].is_array()) {
    if (static_cast<int>(j.size()) != rows) fail(where, "expected " + std::to_string(rows) + " rows");
    for (int r = 0; r < rows; ++r) {
      const auto row = numbers(j[static_cast<std::size_t>(r)], child(where, static_cast<std::size_t>(r)));
      if (static_cast<int>(row.size()) != cols)
        fail(child(where, static_cast<std::size_t>(r)), "expected " + std::to_string(cols) + " entries");
      for (int c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
    }
  } else {
    const auto flat = numbers(j, where);
    if (static_cast<int>(flat.size()) != rows * cols)
      fail(where, "expected " + std::to_string(rows * cols) + " entries");
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

Json matrix_json(const symp::Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

int positive_n(const Json& j, const std::string& where) {
  const int n = integer(member(j, "n", where), child(where, "n"));
  if (n < 1) fail(child(where, "n"), "must be positive");
  return n;
}

ham::TimeProfile time_profile(const Json& j, const std::string& where) {
  ham::TimeProfile tp;
  if (j.is_null()) return tp;
  require_object(j, where);
  if (j.contains("poly")) tp.poly = numbers(j["poly"], child(where, "poly"));
  tp.sin_amp = number_or(j, "sin", 0.0, where);
  if (tp.poly.empty()) fail(child(where, "poly"), "must not be empty");
  return tp;
}

const Json& optional(const Json& j, const std::string& key) {
  static const Json null;
  const auto it = j.find(key);
  return it == j.end() ? null : *it;
}

double cutoff_of(const Json& j, const std::string& where) {
  const Json& c = optional(j, "cutoff");
  if (c.is_null()) return ham::kInf;
  const double r = number(c, child(where, "cutoff"));
  if (!(r > 0)) fail(child(where, "cutoff"), "must be positive");
  return r;
}

std::vector<hyp::PolyOneForm::Term> coefficient_terms(const Json& j, const std::string& where) {
  std::vector<hyp::PolyOneForm::Term> out;
  if (j.is_number()) {
    out.push_back({number(j, where), 0, 0});
    return out;
  }
  array(j, where);
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string w = child(where, k);
    array(j[k], w);
    if (j[k].size() != 3) fail(w, "expected [coef, i, j]");
    const int i = integer(j[k][1], child(w, 1));
    const int e = integer(j[k][2], child(w, 2));
    if (i < 0 || e < 0) fail(w, "exponents must be nonnegative");
    out.push_back({number(j[k][0], child(w, 0)), i, e});
  }
  return out;
}

}  // namespace

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

symp::SpPath sp_path_from_json(const Json& j) {
  const std::string where = "path";
  const int n = positive_n(j, where);
  const auto times = numbers(member(j, "times", where), child(where, "times"));
  const Json& mats = array(member(j, "matrices", where), child(where, "matrices"));
  if (mats.size() != times.size()) fail(child(where, "matrices"), "must have one matrix per time");
  std::vector<symp::SpMatrix> samples;
  for (std::size_t i = 0; i < mats.size(); ++i) {
    const std::string w = child(child(where, "matrices"), i);
    try {
      samples.emplace_back(matrix(mats[i], 2 * n, 2 * n, w));
    } catch (const ValidationError& e) {
      if (std::string(e.what()).rfind(w, 0) == 0) throw;
      fail(w, e.what());
    }
  }
  return symp::SpPath(times, std::move(samples));
}

Json to_json(const symp::SpPath& path) {
  Json mats = Json::array();
  for (const auto& s : path.samples()) mats.push_back(matrix_json(s.matrix()));
  return {{"n", path.n()}, {"times", path.times()}, {"matrices", mats}};
}

symp::LagrangianFrame frame_from_json(const Json& j) {
  const std::string where = "frame";
  const int n = positive_n(j, where);
  const auto cols = matrix(member(j, "columns", where), 2 * n, n, child(where, "columns"));
  try {
    return symp::LagrangianFrame(cols);
  } catch (const ValidationError& e) {
    fail(child(where, "columns"), e.what());
  }
}

Json to_json(const symp::LagrangianFrame& frame) {
  return {{"n", frame.n()}, {"columns", matrix_json(frame.columns())}};
}

ham::FieldPtr field_from_json(const Json& j, int dim, const std::string& where) {
  const std::string kind = string(member(j, "kind", where), child(where, "kind"));
  const ham::TimeProfile tp = time_profile(optional(j, "time"), child(where, "time"));
  if (kind == "radial") {
    ham::RadialSpec rs;
    rs.dim = dim;
    rs.amplitude = number_or(j, "amplitude", 1.0, where);
    rs.radius = number(member(j, "radius", where), child(where, "radius"));
    rs.exponent = integer_or(j, "exponent", 3, where);
    const Json& prof = optional(j, "profile");
    if (!prof.is_null()) {
      const std::string p = string(prof, child(where, "profile"));
      if (p == "bump") rs.profile = ham::Profile::Bump;
      else if (p == "quadratic") rs.profile = ham::Profile::Quadratic;
      else fail(child(where, "profile"), "expected \"bump\" or \"quadratic\"");
    }
    const Json& c = optional(j, "center");
    if (!c.is_null()) {
      rs.center = numbers(c, child(where, "center"));
      if (static_cast<int>(rs.center.size()) != dim) fail(child(where, "center"), "dimension mismatch");
    }
    rs.time = tp;
    if (!(rs.radius > 0)) fail(child(where, "radius"), "must be positive");
    if (rs.exponent < 2) fail(child(where, "exponent"), "must be at least 2");
    return ham::make_radial(rs);
  }
  if (kind == "poly") {
    const Json& terms = array(member(j, "terms", where), child(where, "terms"));
    std::vector<ham::Monomial> mono;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const std::string w = child(child(where, "terms"), i);
      ham::Monomial m;
      m.coef = number(member(terms[i], "coef", w), child(w, "coef"));
      const auto e = numbers(member(terms[i], "exponents", w), child(w, "exponents"));
      if (static_cast<int>(e.size()) != dim) fail(child(w, "exponents"), "dimension mismatch");
      for (double v : e) {
        if (v < 0 || v != std::floor(v)) fail(child(w, "exponents"), "expected nonnegative integers");
        m.exponents.push_back(static_cast<int>(v));
      }
      mono.push_back(std::move(m));
    }
    return ham::make_poly(dim, std::move(mono), cutoff_of(j, where), tp);
  }
  if (kind == "grid") {
    if (dim != 2) fail(where, "grid Hamiltonians are two-dimensional");
    const Json& rows = array(member(j, "values", where), child(where, "values"));
    std::vector<std::vector<double>> values;
    for (std::size_t i = 0; i < rows.size(); ++i) values.push_back(numbers(rows[i], child(child(where, "values"), i)));
    const double hw = number(member(j, "half_width", where), child(where, "half_width"));
    const double cut = cutoff_of(j, where);
    if (!std::isfinite(cut)) fail(child(where, "cutoff"), "required for grid Hamiltonians");
    try {
      return ham::make_grid(std::move(values), hw, cut, tp);
    } catch (const ValidationError& e) {
      fail(where, e.what());
    }
  }
  if (kind == "sum") {
    const Json& parts = array(member(j, "parts", where), child(where, "parts"));
    std::vector<ham::FieldPtr> fs;
    for (std::size_t i = 0; i < parts.size(); ++i)
      fs.push_back(field_from_json(parts[i], dim, child(child(where, "parts"), i)));
    if (fs.empty()) fail(child(where, "parts"), "must not be empty");
    return ham::make_sum(std::move(fs));
  }
  if (kind == "scaled") {
    return ham::make_scaled(field_from_json(member(j, "field", where), dim, child(where, "field")),
                            number(member(j, "factor", where), child(where, "factor")));
  }
  if (kind == "reversed") {
    return ham::make_reversed(field_from_json(member(j, "field", where), dim, child(where, "field")));
  }
  if (kind == "repeated") {
    const int k = integer(member(j, "k", where), child(where, "k"));
    if (k < 1) fail(child(where, "k"), "must be positive");
    return ham::make_repeated(field_from_json(member(j, "field", where), dim, child(where, "field")), k);
  }
  if (kind == "concat") {
    // "first" acts first.
    auto g = field_from_json(member(j, "first", where), dim, child(where, "first"));
    auto f = field_from_json(member(j, "second", where), dim, child(where, "second"));
    return ham::make_concat(f, g);
  }
  if (kind == "pullback") {
    const symp::Matrix m = matrix(member(j, "matrix", where), dim, dim, child(where, "matrix"));
    if (symp::symplectic_defect(m) > symp::kTolSp) fail(child(where, "matrix"), "not symplectic");
    return ham::make_pullback(field_from_json(member(j, "field", where), dim, child(where, "field")), m);
  }
  fail(child(where, "kind"), "unknown kind \"" + kind + "\"");
}

flow::Scenario scenario_from_json(const Json& j, const std::string& where) {
  require_object(j, where);
  flow::Scenario sc;
  sc.dim = integer_or(j, "dim", 2, where);
  if (sc.dim < 2 || sc.dim % 2 != 0 || sc.dim > ham::kMaxDim) fail(child(where, "dim"), "must be even in [2, 8]");
  const Json& form = optional(j, "form");
  if (!form.is_null()) {
    const std::string f = string(form, child(where, "form"));
    if (f == "standard") sc.form.kind = ham::FormKind::Standard;
    else if (f == "hyperbolic") sc.form.kind = ham::FormKind::Hyperbolic;
    else fail(child(where, "form"), "expected \"standard\" or \"hyperbolic\"");
  }
  sc.h = field_from_json(member(j, "H", where), sc.dim, child(where, "H"));
  sc.support_radius = number(member(j, "support_radius", where), child(where, "support_radius"));
  const double fallback = sc.form.kind == ham::FormKind::Hyperbolic ? 0.5 * (1.0 + sc.support_radius)
                                                                    : 2.0 * sc.support_radius;
  sc.domain_radius = number_or(j, "domain_radius", fallback, where);
  sc.dt = number_or(j, "dt", 1e-3, where);
  try {
    sc.validate();
  } catch (const ValidationError& e) {
    fail(where, e.what());
  }
  return sc;
}

hyp::DiskIsotopy disk_isotopy_from_json(const Json& j) {
  const std::string where = "isotopy";
  require_object(j, where);
  hyp::DiskIsotopy iso;
  iso.genus = integer(member(j, "genus", where), child(where, "genus"));
  iso.disk_area = number(member(j, "disk_area", where), child(where, "disk_area"));
  if (iso.genus < 2) fail(child(where, "genus"), "must be at least 2");
  if (!(iso.disk_area > 0.0 && iso.disk_area < 2.0 * iso.genus - 2.0))
    fail(child(where, "disk_area"), "must lie in (0, 2g - 2)");
  Json sj = member(j, "scenario", where);
  require_object(sj, child(where, "scenario"));
  if (!sj.contains("form")) sj["form"] = "hyperbolic";
  if (!sj.contains("domain_radius")) sj["domain_radius"] = iso.disk_radius();
  iso.scenario = scenario_from_json(sj, child(where, "scenario"));
  try {
    iso.validate();
  } catch (const ValidationError& e) {
    fail(where, e.what());
  }
  return iso;
}

hyp::PolyOneForm one_form_from_json(const Json& j, const std::string& where) {
  const std::string kind = string(member(j, "kind", where), child(where, "kind"));
  if (kind != "poly") fail(child(where, "kind"), "expected \"poly\"");
  hyp::PolyOneForm eta;
  eta.a = coefficient_terms(member(j, "a", where), child(where, "a"));
  eta.b = coefficient_terms(member(j, "b", where), child(where, "b"));
  return eta;
}

reeb::GraphHamiltonian graph_hamiltonian_from_json(const Json& j) {
  const std::string where = "graph_hamiltonian";
  const Json& edges = array(member(j, "edges", where), child(where, "edges"));
  reeb::GraphHamiltonian h;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string w = child(child(where, "edges"), i);
    const int id = integer(member(edges[i], "id", w), child(w, "id"));
    const Json& bps = array(member(edges[i], "breakpoints", w), child(w, "breakpoints"));
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < bps.size(); ++k) {
      const auto pair = numbers(bps[k], child(child(w, "breakpoints"), k));
      if (pair.size() != 2) fail(child(child(w, "breakpoints"), k), "expected [t, h]");
      if (!pts.empty() && !(pair[0] > pts.back().first))
        fail(child(child(w, "breakpoints"), k), "t must increase");
      pts.emplace_back(pair[0], pair[1]);
    }
    if (pts.empty()) fail(child(w, "breakpoints"), "must not be empty");
    if (!h.edges.emplace(id, std::move(pts)).second) fail(child(w, "id"), "duplicate arc id");
  }
  return h;
}

Json to_json(const reeb::GraphHamiltonian& h) {
  Json edges = Json::array();
  for (const auto& [id, pts] : h.edges) {
    Json bps = Json::array();
    for (const auto& [t, v] : pts) bps.push_back({t, v});
    edges.push_back({{"id", id}, {"breakpoints", bps}});
  }
  return {{"edges", edges}};
}

Json to_json(const reeb::ReebGraph& g) {
  Json nodes = Json::array();
  for (const auto& n : g.nodes)
    nodes.push_back({{"id", n.id},
                     {"vertex", n.vertex},
                     {"value", n.value},
                     {"type", reeb::to_string(n.type)},
                     {"degree", g.degree(n.id)}});
  Json arcs = Json::array();
  for (const auto& a : g.arcs)
    arcs.push_back({{"id", a.id},
                    {"lower", a.lower},
                    {"upper", a.upper},
                    {"t_lo", a.t_lo},
                    {"t_hi", a.t_hi},
                    {"measure", a.density.total()},
                    {"triangles", a.triangle_count}});
  return {{"genus", g.genus}, {"total_area", g.total_area}, {"nodes", nodes}, {"edges", arcs}};
}

mesh::SurfaceMesh read_off(std::istream& in) {
  // Tokens with '#' comments stripped.
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  std::size_t pos = 0;
  auto next = [&](const char* what) -> const std::string& {
    if (pos >= tokens.size()) throw ValidationError(std::string("OFF: unexpected end of file reading ") + what);
    return tokens[pos++];
  };
  auto next_int = [&](const char* what) {
    const std::string& s = next(what);
    try {
      std::size_t used = 0;
      const long v = std::stol(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ValidationError(std::string("OFF: expected integer for ") + what + ", got \"" + s + "\"");
    }
  };
  auto next_double = [&](const char* what) {
    const std::string& s = next(what);
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ValidationError(std::string("OFF: expected number for ") + what + ", got \"" + s + "\"");
    }
  };
  if (next("header") != "OFF") throw ValidationError("OFF: missing OFF header");
  const long nv = next_int("vertex count");
  const long nf = next_int("face count");
  next_int("edge count");
  if (nv < 3 || nf < 1) throw ValidationError("OFF: empty mesh");
  std::vector<mesh::Vec3> verts(static_cast<std::size_t>(nv));
  for (auto& v : verts) {
    v.x() = next_double("vertex");
    v.y() = next_double("vertex");
    v.z() = next_double("vertex");
  }
  std::vector<mesh::Tri> tris(static_cast<std::size_t>(nf));
  for (std::size_t f = 0; f < tris.size(); ++f) {
    if (next_int("face size") != 3)
      throw ValidationError("OFF: face " + std::to_string(f) + " is not a triangle");
    for (int k = 0; k < 3; ++k) {
      const long idx = next_int("face index");
      if (idx < 0 || idx >= nv)
        throw ValidationError("OFF: face " + std::to_string(f) + " has vertex index out of range");
      tris[f][static_cast<std::size_t>(k)] = static_cast<int>(idx);
    }
  }
  return mesh::make_mesh(std::move(verts), std::move(tris));
}

mesh::SurfaceMesh read_off_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open");
  try {
    return read_off(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_off(std::ostream& out, const mesh::SurfaceMesh& m) {
  out << "OFF\n" << m.vertices.size() << ' ' << m.triangles.size() << " 0\n";
  out << std::setprecision(17);
  for (const auto& v : m.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : m.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

std::vector<double> read_vertex_field(std::istream& in, std::size_t n_vertices) {
  std::vector<double> values(n_vertices, 0.0);
  std::vector<bool> seen(n_vertices, false);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto comma = line.find(',');
    const std::string where = "field CSV line " + std::to_string(lineno);
    if (comma == std::string::npos) throw ValidationError(where + ": expected \"vertex_id,value\"");
    const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
    long id = 0;
    double v = 0;
    try {
      std::size_t ua = 0, ub = 0;
      id = std::stol(a, &ua);
      v = std::stod(b, &ub);
      if (a.find_first_not_of(" \t", ua) != std::string::npos ||
          b.find_first_not_of(" \t", ub) != std::string::npos)
        throw std::invalid_argument(line);
    } catch (const std::exception&) {
      if (lineno == 1) continue;  // header
      throw ValidationError(where + ": expected \"vertex_id,value\"");
    }
    if (!std::isfinite(v)) throw ValidationError(where + ": value not finite");
    if (id < 0 || static_cast<std::size_t>(id) >= n_vertices)
      throw ValidationError(where + ": vertex id out of range");
    if (seen[static_cast<std::size_t>(id)]) throw ValidationError(where + ": duplicate vertex id");
    seen[static_cast<std::size_t>(id)] = true;
    values[static_cast<std::size_t>(id)] = v;
  }
  for (std::size_t i = 0; i < n_vertices; ++i)
    if (!seen[i]) throw ValidationError("field CSV: missing vertex " + std::to_string(i));
  return values;
}

std::vector<double> read_vertex_field_file(const std::string& path, std::size_t n_vertices) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open");
  try {
    return read_vertex_field(in, n_vertices);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_vertex_field(std::ostream& out, const std::vector<double>& values) {
  out << "vertex_id,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < values.size(); ++i) out << i << ',' << values[i] << '\n';
}

}  // namespace qmlab::io
