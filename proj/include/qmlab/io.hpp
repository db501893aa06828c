#pragma once

// File formats: JSON descriptors for paths, frames, Hamiltonians, scenarios,
// disk isotopies, 1-forms and graph Hamiltonians; OFF meshes; CSV vertex fields.
// Parse failures throw ValidationError naming the offending field.

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmlab/hamflow.hpp"
#include "qmlab/hypgeo.hpp"
#include "qmlab/mesh.hpp"
#include "qmlab/reeb.hpp"
#include "qmlab/symplinalg.hpp"

namespace qmlab::io {

using Json = nlohmann::json;

Json read_json_file(const std::string& path);

symp::SpPath sp_path_from_json(const Json& j);
Json to_json(const symp::SpPath& path);

symp::LagrangianFrame frame_from_json(const Json& j);
Json to_json(const symp::LagrangianFrame& frame);

/// {"kind": "radial" | "poly" | "grid" | "sum" | "scaled" | "reversed" |
///  "repeated" | "concat" | "pullback", ...}
ham::FieldPtr field_from_json(const Json& j, int dim, const std::string& where = "H");

/// {"dim", "form", "H", "support_radius", "domain_radius", "dt"}
flow::Scenario scenario_from_json(const Json& j, const std::string& where = "scenario");

/// {"scenario": {...}, "genus", "disk_area"}
hyp::DiskIsotopy disk_isotopy_from_json(const Json& j);

/// {"kind": "poly", "a": number | [[c, i, j], ...], "b": ...}
hyp::PolyOneForm one_form_from_json(const Json& j, const std::string& where = "eta");

reeb::GraphHamiltonian graph_hamiltonian_from_json(const Json& j);
Json to_json(const reeb::GraphHamiltonian& h);
Json to_json(const reeb::ReebGraph& g);

/// ASCII OFF with triangular faces.
mesh::SurfaceMesh read_off(std::istream& in);
mesh::SurfaceMesh read_off_file(const std::string& path);
void write_off(std::ostream& out, const mesh::SurfaceMesh& m);

/// "vertex_id,value" lines (an optional header line is skipped); every vertex
/// must appear exactly once.
std::vector<double> read_vertex_field(std::istream& in, std::size_t n_vertices);
std::vector<double> read_vertex_field_file(const std::string& path, std::size_t n_vertices);
void write_vertex_field(std::ostream& out, const std::vector<double>& values);

}  // namespace qmlab::io
