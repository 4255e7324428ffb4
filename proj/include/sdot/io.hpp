#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdot/apps.hpp"
#include "sdot/solver.hpp"

namespace sdot::io {

struct MeshLoadOptions {
  /// Per-vertex density CSV; empty means uniform density.
  std::string density_path;
  /// Split polygons with more than three sides into fans (with a warning)
  /// instead of rejecting them.
  bool fan_triangulate = true;
};

/// OFF or OBJ by extension. Degenerate triangles are dropped with a warning.
/// Throws ParseError (with line number) or ValidationError.
SimplexSoup load_mesh(const std::string& path, const MeshLoadOptions& options = {},
                      std::vector<std::string>* warnings = nullptr);

/// One density value per vertex, separated by commas or whitespace.
std::vector<double> load_density(const std::string& path, std::size_t vertex_count);

/// XYZ (3 or 4 columns, the 4th being ν) or ASCII PLY. Masses are rescaled
/// to sum to `total`; uniform when absent. Points closer than
/// `duplicate_tolerance` are rejected with their indices listed.
SiteSet load_points(const std::string& path, double total = 1.0, double duplicate_tolerance = 0.0);

void write_mesh_obj(const SimplexSoup& soup, const std::string& path);
void write_mesh_off(const SimplexSoup& soup, const std::string& path);

/// OBJ with one group "cell_<i>" per site, pieces fan-triangulated.
void export_cells(const RestrictedLaguerreDiagram& diagram, const std::string& path);
void write_dual_obj(const DualMesh& mesh, const std::string& path);
/// x y z ν per line.
void write_points_xyz(const SiteSet& sites, const std::string& path);

using Json = nlohmann::ordered_json;

struct InputDigest {
  std::size_t vertices = 0;
  std::size_t triangles = 0;
  Aabb bounds;
  double total_mass = 0.0;
  std::size_t sites = 0;
};

InputDigest digest(const SimplexSoup& soup, const SiteSet* sites = nullptr);

/// Everything a CLI run produced. Wall-clock values live under "timing" so
/// the rest of the document is reproducible byte for byte.
struct RunReport {
  std::string command;
  Json config = Json::object();
  InputDigest input;
  std::vector<SolveReport> solves;
  Json results = Json::object();
  std::map<std::string, std::string> outputs;
  std::vector<std::string> warnings;
  std::string error;
  int exit_code = 0;
  double wall_seconds = 0.0;
};

Json to_json(const SolveReport& report);
SolveReport solve_report_from_json(const Json& j);
Json to_json(const RunReport& report);
RunReport run_report_from_json(const Json& j);

void write_report(const RunReport& report, const std::string& path);
RunReport read_report(const std::string& path);

Json to_json(const RigidTransform& t);

}  // namespace sdot::io
