// qmlab: batch front end. One experiment per invocation; writes
// <out>/<kind>.json and, for kinds with a series, <out>/<kind>.csv.
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "qmlab/error.hpp"
#include "qmlab/hamflow.hpp"
#include "qmlab/hypgeo.hpp"
#include "qmlab/io.hpp"
#include "qmlab/mesh.hpp"
#include "qmlab/qm.hpp"
#include "qmlab/reeb.hpp"
#include "qmlab/symplinalg.hpp"

namespace fs = std::filesystem;
using qmlab::ValidationError;
using Json = qmlab::io::Json;

namespace {

struct Run {
  Json spec;       // resolved parameters, echoed into the result
  fs::path base;   // directory of the spec file
  std::optional<std::uint64_t> seed_override;
  int jobs = 1;
  std::ostringstream csv;
};

const Json& get(const Json& j, const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError("spec." + key + ": missing");
  return *it;
}

int get_int(Run& r, const std::string& key, std::optional<int> fallback = std::nullopt) {
  if (!r.spec.contains(key)) {
    if (!fallback) throw ValidationError("spec." + key + ": missing");
    r.spec[key] = *fallback;
  }
  const Json& v = r.spec[key];
  if (!v.is_number_integer()) throw ValidationError("spec." + key + ": expected an integer");
  return v.get<int>();
}

double get_double(Run& r, const std::string& key, std::optional<double> fallback = std::nullopt) {
  if (!r.spec.contains(key)) {
    if (!fallback) throw ValidationError("spec." + key + ": missing");
    r.spec[key] = *fallback;
  }
  const Json& v = r.spec[key];
  if (!v.is_number()) throw ValidationError("spec." + key + ": expected a number");
  return v.get<double>();
}

std::uint64_t seed_of(Run& r) {
  if (r.seed_override) r.spec["seed"] = *r.seed_override;
  if (!r.spec.contains("seed")) throw ValidationError("spec.seed: missing (required for this kind)");
  const Json& v = r.spec["seed"];
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    throw ValidationError("spec.seed: expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

int positive(int v, const char* what) {
  if (v < 1) throw ValidationError(std::string("spec.") + what + ": must be positive");
  return v;
}

std::string resolve(const Run& r, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? p : (r.base / path).string();
}

// An object given inline, or a string naming a JSON file next to the spec.
Json inline_or_file(const Run& r, const std::string& key) {
  const Json& v = get(r.spec, key);
  if (v.is_string()) return qmlab::io::read_json_file(resolve(r, v.get<std::string>()));
  return v;
}

Json error_json(double value, double deterministic, double statistical) {
  return {{"value", value}, {"error", {{"deterministic", deterministic}, {"statistical", statistical}}}};
}

// ---------------------------------------------------------------------------

Json run_phi(Run& r) {
  using namespace qmlab::symp;
  std::optional<SpPath> path;
  if (r.spec.contains("builtin")) {
    const std::string b = r.spec["builtin"].is_string() ? r.spec["builtin"].get<std::string>() : "";
    if (b != "rotation_loop") throw ValidationError("spec.builtin: expected \"rotation_loop\"");
    path = SpPath::rotation_loop(positive(get_int(r, "n", 1), "n"), positive(get_int(r, "samples", 64), "samples"));
  } else {
    path = qmlab::io::sp_path_from_json(inline_or_file(r, "path"));
  }
  const int n = path->n();
  const LagrangianFrame l0 = r.spec.contains("l0") ? qmlab::io::frame_from_json(inline_or_file(r, "l0"))
                                                    : LagrangianFrame::real_subspace(n);
  if (l0.n() != n) throw ValidationError("spec.l0: dimension mismatch");
  const int p = positive(get_int(r, "p", 64), "p");
  r.csv << "p,value,error_bound\n" << std::setprecision(17);
  Bracket last;
  for (int q = 1;; q = std::min(2 * q, p)) {
    last = phi_homog(*path, q, l0);
    r.csv << q << ',' << last.value << ',' << last.error_bound << '\n';
    if (q == p) break;
  }
  return {{"value", last.value}, {"error_bound", last.error_bound}, {"p", p}, {"n", n},
          {"phi_lag", phi_lag(*path, l0)}};
}

Json run_tau(Run& r) {
  const auto sc = qmlab::io::scenario_from_json(inline_or_file(r, "scenario"));
  const int p = positive(get_int(r, "p", 128), "p");
  const int n_samples = positive(get_int(r, "n_samples", 4000), "n_samples");
  const auto seed = seed_of(r);
  const auto tau = qmlab::flow::tau_ball(sc, p, n_samples, seed, r.jobs);
  Json out = error_json(tau.value, tau.deterministic_error, tau.std_error);
  out["p"] = p;
  out["n_samples"] = n_samples;
  out["seed"] = seed;
  out["support_volume"] = tau.volume;
  out["integrator"] = {{"scheme", "implicit_midpoint"},
                       {"steps_per_period", sc.steps_per_period()},
                       {"newton_tol", qmlab::flow::kNewtonTol}};
  if (r.spec.contains("s")) {
    // tau + s Cal for each requested s.
    const double cal = qmlab::flow::calabi(sc, {sc.form.kind, nullptr}, {}, r.jobs);
    out["calabi"] = cal;
    Json rows = Json::array();
    r.csv << "s,value\n" << std::setprecision(17);
    const Json& ss = r.spec["s"];
    if (!ss.is_array()) throw ValidationError("spec.s: expected an array");
    for (std::size_t i = 0; i < ss.size(); ++i) {
      if (!ss[i].is_number()) throw ValidationError("spec.s[" + std::to_string(i) + "]: expected a number");
      const double s = ss[i].get<double>();
      if (s == 0.0) throw ValidationError("spec.s[" + std::to_string(i) + "]: must be nonzero");
      rows.push_back({{"s", s}, {"value", tau.value + s * cal}});
      r.csv << s << ',' << tau.value + s * cal << '\n';
    }
    out["restriction"] = rows;
  }
  return out;
}

Json run_calabi(Run& r) {
  const auto sc = qmlab::io::scenario_from_json(inline_or_file(r, "scenario"));
  qmlab::flow::Quadrature rule;
  if (r.spec.contains("quadrature")) {
    const Json& q = r.spec["quadrature"];
    if (!q.is_object()) throw ValidationError("spec.quadrature: expected an object");
    rule.radial = q.value("radial", rule.radial);
    rule.angular = q.value("angular", rule.angular);
    rule.per_axis = q.value("per_axis", rule.per_axis);
    rule.radius = q.value("radius", rule.radius);
  }
  r.spec["quadrature"] = {{"radial", rule.radial}, {"angular", rule.angular},
                          {"per_axis", rule.per_axis}, {"radius", rule.radius}};
  qmlab::ham::PrimitiveOneForm lam{sc.form.kind, nullptr};
  if (r.spec.contains("primitive_shift"))
    lam.exact_shift = qmlab::io::field_from_json(r.spec["primitive_shift"], sc.dim, "spec.primitive_shift");
  const double v = qmlab::flow::calabi(sc, lam, rule, r.jobs);
  return {{"value", v}, {"integrator", {{"scheme", "implicit_midpoint"}, {"steps_per_period", sc.steps_per_period()}}}};
}

qmlab::mesh::SurfaceMesh load_mesh(Run& r) {
  const Json& m = get(r.spec, "mesh");
  if (m.is_string()) return qmlab::io::read_off_file(resolve(r, m.get<std::string>()));
  if (m.is_object() && m.contains("generate")) {
    const Json& g = m["generate"];
    const int genus = g.value("genus", -1);
    if (genus < 0 || genus > 3) throw ValidationError("spec.mesh.generate.genus: expected 0..3");
    return qmlab::mesh::polygonize(qmlab::mesh::standard_surface(genus, g.value("cell", 0.05)));
  }
  throw ValidationError("spec.mesh: expected an OFF path or {\"generate\": {...}}");
}

std::vector<double> load_field(Run& r, const qmlab::mesh::SurfaceMesh& m, const std::string& key) {
  const Json& f = get(r.spec, key);
  if (f.is_string()) {
    const std::string s = f.get<std::string>();
    if (s == "height") return qmlab::mesh::tilted_height(m);
    return qmlab::io::read_vertex_field_file(resolve(r, s), m.vertices.size());
  }
  if (f.is_object() && f.contains("random"))
    return qmlab::mesh::random_smooth_field(m, f["random"].get<std::uint64_t>());
  throw ValidationError("spec." + key + ": expected a CSV path, \"height\" or {\"random\": seed}");
}

Json run_reeb(Run& r) {
  using namespace qmlab::reeb;
  auto m = load_mesh(r);
  if (m.genus >= 2 && r.spec.value("normalize", true)) qmlab::mesh::normalize_hyperbolic(m);
  const auto f = load_field(r, m, "field");
  MorseData morse;
  const ReebGraph g = build_reeb(m, f, &morse);
  Json out = {{"graph", qmlab::io::to_json(g)},
              {"euler_sum", g.euler_sum()},
              {"mesh", {{"vertices", m.vertices.size()}, {"triangles", m.triangles.size()}, {"genus", m.genus}}}};
  int saddles = 0, extrema = 0;
  for (const auto& n : g.nodes) {
    if (n.type == NodeType::Saddle) ++saddles;
    if (n.type == NodeType::Min || n.type == NodeType::Max) ++extrema;
  }
  out["saddles"] = saddles;
  out["extrema"] = extrema;
  if (m.genus >= 1) {
    const ReebGraph pruned = prune(g);
    Json tri = Json::array();
    for (int id : trivalent_vertices(pruned)) tri.push_back(id);
    out["trivalent"] = tri;
  }
  if (r.spec.contains("hamiltonian")) {
    const Json& h = r.spec["hamiltonian"];
    GraphHamiltonian gh;
    if (h.is_object() && h.contains("constant")) {
      gh = GraphHamiltonian::constant(g, h["constant"].get<double>());
    } else if (h.is_object() && h.contains("edges")) {
      gh = qmlab::io::graph_hamiltonian_from_json(h);
    } else if (h == "field") {
      gh = import_field(m, g, morse, f);
    } else if (h.is_string() && h.get<std::string>().ends_with(".json")) {
      gh = qmlab::io::graph_hamiltonian_from_json(qmlab::io::read_json_file(resolve(r, h.get<std::string>())));
    } else if (h.is_string()) {
      gh = import_field(m, g, morse, qmlab::io::read_vertex_field_file(resolve(r, h.get<std::string>()), m.vertices.size()));
    } else {
      throw ValidationError("spec.hamiltonian: expected {\"constant\": c}, graph JSON, \"field\" or a path");
    }
    out["integral"] = graph_integral(g, gh);
    out["reduced_integral"] = reduced_integral(g, gh);
  }
  r.csv << "arc,lower,upper,t_lo,t_hi,measure\n" << std::setprecision(17);
  for (const auto& a : g.arcs)
    r.csv << a.id << ',' << a.lower << ',' << a.upper << ',' << a.t_lo << ',' << a.t_hi << ','
          << a.density.total() << '\n';
  return out;
}

Json run_cal_s(Run& r) {
  const auto iso = qmlab::io::disk_isotopy_from_json(inline_or_file(r, "isotopy"));
  const int p = positive(get_int(r, "p", 64), "p");
  const int n_points = positive(get_int(r, "n_points", 2000), "n_points");
  const int k = positive(get_int(r, "fiber_samples", 8), "fiber_samples");
  const auto seed = seed_of(r);
  const auto e = qmlab::hyp::cal_s_estimate(iso, p, n_points, k, seed, r.jobs);
  Json out = error_json(e.value, e.deterministic_error, e.std_error);
  out["p"] = p;
  out["seed"] = seed;
  out["n_points"] = n_points;
  if (r.spec.value("compare_calabi", true))
    out["calabi"] = qmlab::flow::calabi(iso.scenario, {qmlab::ham::FormKind::Hyperbolic, nullptr}, {}, r.jobs);
  return out;
}

qmlab::symp::SpPath random_sp_path(qmlab::Rng& rng, int n, double scale) {
  std::normal_distribution<double> normal;
  qmlab::symp::Matrix s(2 * n, 2 * n);
  for (int i = 0; i < 2 * n; ++i)
    for (int j = 0; j < 2 * n; ++j) s(i, j) = normal(rng);
  s = 0.5 * scale * (s + s.transpose()).eval();
  return qmlab::symp::SpPath::one_parameter(s, 64);
}

Json run_defect(Run& r) {
  const std::string target = r.spec.value("target", std::string("phi"));
  r.spec["target"] = target;
  const int pairs = positive(get_int(r, "n_pairs", 50), "n_pairs");
  const auto seed = seed_of(r);
  qmlab::qm::DefectEstimate d;
  double bound = 0.0;
  if (target == "phi") {
    const int n = positive(get_int(r, "n", 1), "n");
    const double scale = get_double(r, "scale", 1.0);
    qmlab::symp::PhiEvaluator ev(n);
    d = qmlab::qm::estimate_defect(ev, [&](qmlab::Rng& rng) { return random_sp_path(rng, n, scale); }, pairs, seed);
    bound = 2.0 * n;
  } else if (target == "translation") {
    qmlab::qm::TranslationEvaluator ev;
    d = qmlab::qm::estimate_defect(
        ev,
        [](qmlab::Rng& rng) {
          qmlab::qm::CircleLift f;
          f.maps.push_back({4.0 * qmlab::uniform01(rng) - 2.0, 1.8 * qmlab::uniform01(rng) - 0.9, false});
          return f;
        },
        pairs, seed);
    bound = 1.0;
  } else {
    throw ValidationError("spec.target: expected \"phi\" or \"translation\"");
  }
  return {{"max_observed", d.max_observed}, {"n_pairs", d.n_pairs}, {"seed", d.seed}, {"bound", bound}};
}

Json run_gg(Run& r) {
  const auto iso = qmlab::io::disk_isotopy_from_json(inline_or_file(r, "isotopy"));
  const auto eta = qmlab::io::one_form_from_json(get(r.spec, "eta"), "spec.eta");
  const int p = positive(get_int(r, "p", 256), "p");
  const int n_points = positive(get_int(r, "n_points", 200), "n_points");
  const auto seed = seed_of(r);
  const auto e = qmlab::hyp::phi_eta_estimate(eta, iso, p, n_points, seed, r.jobs);
  Json out = error_json(e.value, e.deterministic_error, e.std_error);
  out["p"] = p;
  out["seed"] = seed;
  out["n_points"] = n_points;
  const double r_s = iso.scenario.support_radius;
  out["bound"] = eta.hyperbolic_norm(r_s) * 2.0 * qmlab::hyp::hyperbolic_distance(0.0, r_s);
  if (r.spec.contains("x")) {
    const Json& x = r.spec["x"];
    if (!x.is_array() || x.size() != 2) throw ValidationError("spec.x: expected [x, y]");
    const std::complex<double> z(x[0].get<double>(), x[1].get<double>());
    r.csv << "p,u\n" << std::setprecision(17);
    for (int q = 1; q <= p; q *= 2) r.csv << q << ',' << qmlab::hyp::gg_u(eta, iso, z, q) << '\n';
  }
  return out;
}

Json run_mesh(Run& r) {
  auto m = load_mesh(r);
  const std::string off = resolve(r, get(r.spec, "off").get<std::string>());
  std::ofstream o(off);
  if (!o) throw ValidationError("spec.off: cannot write " + off);
  qmlab::io::write_off(o, m);
  qmlab::io::write_vertex_field(r.csv, qmlab::mesh::tilted_height(m));
  return {{"vertices", m.vertices.size()}, {"triangles", m.triangles.size()}, {"genus", m.genus}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qmlab: quasi-morphism experiments"};
  app.require_subcommand(1);
  std::string spec_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  int jobs = 1;
  const std::vector<std::pair<std::string, Json (*)(Run&)>> kinds = {
      {"phi", run_phi},       {"tau", run_tau},       {"calabi", run_calabi}, {"reeb", run_reeb},
      {"cal_s", run_cal_s},   {"defect", run_defect}, {"gg", run_gg},         {"mesh", run_mesh}};
  for (const auto& [name, fn] : kinds) {
    auto* sub = app.add_subcommand(name, name + " experiment");
    sub->add_option("--spec", spec_path, "experiment spec (JSON)")->required();
    sub->add_option("--seed", seed, "override spec.seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string kind = app.get_subcommands().front()->get_name();
  try {
    Run run;
    run.spec = qmlab::io::read_json_file(spec_path);
    if (!run.spec.is_object()) throw ValidationError(spec_path + ": expected a JSON object");
    run.base = fs::path(spec_path).parent_path();
    run.seed_override = seed;
    run.jobs = jobs;
    Json result;
    for (const auto& [name, fn] : kinds)
      if (name == kind) result = fn(run);
    fs::create_directories(out_dir);
    const Json record = {{"kind", kind}, {"params", run.spec}, {"result", result}};
    std::ofstream(fs::path(out_dir) / (kind + ".json")) << record.dump(2) << '\n';
    if (!run.csv.str().empty()) std::ofstream(fs::path(out_dir) / (kind + ".csv")) << run.csv.str();
    std::cout << record["result"].dump() << '\n';
    return 0;
  } catch (const qmlab::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const Json::exception& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const qmlab::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const qmlab::EvaluationError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
