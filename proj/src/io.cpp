#include "sdot/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sdot/log.hpp"

namespace sdot::io {

namespace {

std::string lowercase_extension(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return {};
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << std::setprecision(17);
  return out;
}

// Line reader that drops '#' comments and blank lines and remembers where it is.
class LineReader {
 public:
  LineReader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      tokens.clear();
      std::istringstream ss(line);
      for (std::string tok; ss >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    ++line_;
    return false;
  }

  std::size_t line() const { return line_; }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_, line_, what); }

  double number(const std::string& tok) const {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') fail("expected a number, found '" + tok + "'");
    return v;
  }

  long integer(const std::string& tok) const {
    char* end = nullptr;
    const long v = std::strtol(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0') fail("expected an integer, found '" + tok + "'");
    return v;
  }

 private:
  std::istream& in_;
  std::string path_;
  std::size_t line_ = 0;
};

struct RawMesh {
  std::vector<Vec3> vertices;
  std::vector<std::vector<std::uint32_t>> faces;
  std::vector<std::size_t> face_lines;
};

RawMesh read_off(const std::string& path) {
  auto in = open_input(path);
  LineReader reader(in, path);
  std::vector<std::string> tok;
  if (!reader.next(tok)) reader.fail("empty file");
  if (tok[0] != "OFF") reader.fail("missing OFF header");
  tok.erase(tok.begin());
  if (tok.empty() && !reader.next(tok)) reader.fail("missing element counts");
  if (tok.size() < 2) reader.fail("expected vertex and face counts");
  const long nv = reader.integer(tok[0]), nf = reader.integer(tok[1]);
  if (nv < 0 || nf < 0) reader.fail("negative element count");

  RawMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nv));
  for (long v = 0; v < nv; ++v) {
    if (!reader.next(tok)) reader.fail("unexpected end of file, expected " + std::to_string(nv) + " vertices");
    if (tok.size() < 3) reader.fail("vertex needs three coordinates");
    mesh.vertices.push_back({reader.number(tok[0]), reader.number(tok[1]), reader.number(tok[2])});
  }
  for (long f = 0; f < nf; ++f) {
    if (!reader.next(tok)) reader.fail("unexpected end of file, expected " + std::to_string(nf) + " faces");
    const long k = reader.integer(tok[0]);
    if (k < 3 || static_cast<std::size_t>(k) + 1 > tok.size()) reader.fail("malformed face");
    std::vector<std::uint32_t> face;
    for (long c = 1; c <= k; ++c) {
      const long idx = reader.integer(tok[c]);
      if (idx < 0 || idx >= nv) reader.fail("vertex index " + std::to_string(idx) + " out of range");
      face.push_back(static_cast<std::uint32_t>(idx));
    }
    mesh.faces.push_back(std::move(face));
    mesh.face_lines.push_back(reader.line());
  }
  return mesh;
}

RawMesh read_obj(const std::string& path) {
  auto in = open_input(path);
  LineReader reader(in, path);
  std::vector<std::string> tok;
  RawMesh mesh;
  while (reader.next(tok)) {
    if (tok[0] == "v") {
      if (tok.size() < 4) reader.fail("vertex needs three coordinates");
      mesh.vertices.push_back({reader.number(tok[1]), reader.number(tok[2]), reader.number(tok[3])});
    } else if (tok[0] == "f") {
      if (tok.size() < 4) reader.fail("face needs at least three vertices");
      std::vector<std::uint32_t> face;
      for (std::size_t c = 1; c < tok.size(); ++c) {
        long idx = reader.integer(tok[c].substr(0, tok[c].find('/')));
        const long nv = static_cast<long>(mesh.vertices.size());
        if (idx < 0) idx += nv + 1;
        if (idx < 1 || idx > nv) reader.fail("vertex index " + tok[c] + " out of range");
        face.push_back(static_cast<std::uint32_t>(idx - 1));
      }
      mesh.faces.push_back(std::move(face));
      mesh.face_lines.push_back(reader.line());
    }
  }
  return mesh;
}

std::vector<double> parse_numbers(const std::string& path) {
  auto in = open_input(path);
  LineReader reader(in, path);
  std::vector<std::string> tok;
  std::vector<double> values;
  while (reader.next(tok))
    for (auto& t : tok) {
      std::stringstream parts(t);
      for (std::string part; std::getline(parts, part, ',');)
        if (!part.empty()) values.push_back(reader.number(part));
    }
  return values;
}

}  // namespace

std::vector<double> load_density(const std::string& path, std::size_t vertex_count) {
  auto values = parse_numbers(path);
  if (values.size() != vertex_count)
    throw ValidationError(path + ": " + std::to_string(values.size()) + " density values for " +
                          std::to_string(vertex_count) + " vertices");
  return values;
}

SimplexSoup load_mesh(const std::string& path, const MeshLoadOptions& options, std::vector<std::string>* warnings) {
  const std::string ext = lowercase_extension(path);
  RawMesh raw;
  if (ext == "off") raw = read_off(path);
  else if (ext == "obj") raw = read_obj(path);
  else throw ValidationError(path + ": unsupported mesh format (expected .off or .obj)");

  std::vector<std::string> notes;
  auto note = [&](const std::string& w) {
    log::warn(w);
    notes.push_back(w);
  };

  std::vector<TriangleIndices> triangles;
  std::size_t fanned = 0;
  for (std::size_t f = 0; f < raw.faces.size(); ++f) {
    const auto& face = raw.faces[f];
    if (face.size() > 3) {
      if (!options.fan_triangulate)
        throw ParseError(path, raw.face_lines[f], "face with " + std::to_string(face.size()) + " sides");
      ++fanned;
    }
    for (std::size_t k = 1; k + 1 < face.size(); ++k) triangles.push_back({face[0], face[k], face[k + 1]});
  }
  if (fanned) note(path + ": " + std::to_string(fanned) + " polygon(s) with more than three sides fan-triangulated");

  Aabb box;
  for (const auto& t : triangles)
    for (auto v : t) box.extend(raw.vertices[v]);
  const double min_area = 1e-9 * box.diagonal() * box.diagonal();
  const std::size_t before = triangles.size();
  std::erase_if(triangles, [&](const TriangleIndices& t) {
    const Triangle tri{raw.vertices[t[0]], raw.vertices[t[1]], raw.vertices[t[2]]};
    return !(tri.area() > min_area);
  });
  if (triangles.size() != before)
    note(path + ": dropped " + std::to_string(before - triangles.size()) + " degenerate triangle(s)");
  if (triangles.empty()) throw ValidationError(path + ": mesh has no usable triangles");

  std::vector<double> density;
  if (!options.density_path.empty()) density = load_density(options.density_path, raw.vertices.size());
  SimplexSoup soup(std::move(raw.vertices), std::move(triangles), std::move(density));
  for (const auto& w : soup.warnings()) notes.push_back(w);
  if (warnings) warnings->insert(warnings->end(), notes.begin(), notes.end());
  return soup;
}

SiteSet load_points(const std::string& path, double total, double duplicate_tolerance) {
  auto in = open_input(path);
  LineReader reader(in, path);
  std::vector<std::string> tok;
  std::vector<Vec3> positions;
  std::vector<double> masses;
  bool has_mass = false;

  if (lowercase_extension(path) == "ply") {
    if (!reader.next(tok) || tok[0] != "ply") reader.fail("missing ply magic");
    long count = -1;
    std::vector<std::string> props;
    bool in_vertex = false;
    for (;;) {
      if (!reader.next(tok)) reader.fail("unexpected end of header");
      if (tok[0] == "format" && (tok.size() < 2 || tok[1] != "ascii")) reader.fail("only ASCII PLY is supported");
      if (tok[0] == "element") {
        in_vertex = tok.size() >= 3 && tok[1] == "vertex";
        if (in_vertex) count = reader.integer(tok[2]);
      }
      if (tok[0] == "property" && in_vertex && tok.size() >= 3) props.push_back(tok.back());
      if (tok[0] == "end_header") break;
    }
    if (count < 0) reader.fail("no vertex element");
    auto column = [&](const std::string& name) -> long {
      const auto it = std::find(props.begin(), props.end(), name);
      return it == props.end() ? -1 : static_cast<long>(it - props.begin());
    };
    const long cx = column("x"), cy = column("y"), cz = column("z");
    long cm = column("mass");
    if (cm < 0) cm = column("nu");
    if (cx < 0 || cy < 0 || cz < 0) reader.fail("vertex element lacks x, y or z");
    has_mass = cm >= 0;
    for (long v = 0; v < count; ++v) {
      if (!reader.next(tok)) reader.fail("unexpected end of file, expected " + std::to_string(count) + " vertices");
      if (tok.size() < props.size()) reader.fail("too few values on vertex line");
      positions.push_back({reader.number(tok[cx]), reader.number(tok[cy]), reader.number(tok[cz])});
      if (has_mass) masses.push_back(reader.number(tok[cm]));
    }
  } else {
    std::size_t columns = 0;
    while (reader.next(tok)) {
      if (tok.size() != 3 && tok.size() != 4) reader.fail("expected 3 or 4 values per line");
      if (columns == 0) columns = tok.size();
      if (tok.size() != columns) reader.fail("inconsistent column count");
      positions.push_back({reader.number(tok[0]), reader.number(tok[1]), reader.number(tok[2])});
      if (columns == 4) masses.push_back(reader.number(tok[3]));
    }
    has_mass = columns == 4;
  }
  if (positions.empty()) throw ValidationError(path + ": no points");

  const auto clashes = find_close_pairs(positions, duplicate_tolerance);
  if (!clashes.empty()) {
    std::ostringstream msg;
    msg << path << ": duplicate points";
    for (std::size_t k = 0; k < clashes.size() && k < 10; ++k)
      msg << (k ? ", " : " ") << '(' << clashes[k][0] << ", " << clashes[k][1] << ')';
    if (clashes.size() > 10) msg << " and " << clashes.size() - 10 << " more";
    throw ValidationError(msg.str());
  }
  if (!has_mass) return SiteSet::uniform(std::move(positions), total);
  return SiteSet(std::move(positions), std::move(masses)).normalized(total);
}

// ---------------------------------------------------------------- writers

void write_mesh_obj(const SimplexSoup& soup, const std::string& path) {
  auto out = open_output(path);
  for (const auto& v : soup.vertices()) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const auto& t : soup.triangles()) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

void write_mesh_off(const SimplexSoup& soup, const std::string& path) {
  auto out = open_output(path);
  out << "OFF\n" << soup.vertex_count() << ' ' << soup.triangle_count() << " 0\n";
  for (const auto& v : soup.vertices()) out << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const auto& t : soup.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void export_cells(const RestrictedLaguerreDiagram& diagram, const std::string& path) {
  std::vector<std::vector<std::size_t>> by_site(diagram.site_count);
  for (std::size_t p = 0; p < diagram.pieces.size(); ++p) by_site[diagram.pieces[p].site].push_back(p);
  auto out = open_output(path);
  std::size_t next_vertex = 1;
  for (std::size_t i = 0; i < diagram.site_count; ++i) {
    out << "g cell_" << i << '\n';
    for (std::size_t p : by_site[i]) {
      const auto& poly = diagram.pieces[p].polygon;
      for (const auto& v : poly.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
      for (std::size_t k = 1; k + 1 < poly.size(); ++k)
        out << "f " << next_vertex << ' ' << next_vertex + k << ' ' << next_vertex + k + 1 << '\n';
      next_vertex += poly.size();
    }
  }
}

void write_dual_obj(const DualMesh& mesh, const std::string& path) {
  auto out = open_output(path);
  for (const auto& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

void write_points_xyz(const SiteSet& sites, const std::string& path) {
  auto out = open_output(path);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto& p = sites.position(i);
    out << p.x << ' ' << p.y << ' ' << p.z << ' ' << sites.mass(i) << '\n';
  }
}

// ---------------------------------------------------------------- reports

InputDigest digest(const SimplexSoup& soup, const SiteSet* sites) {
  InputDigest d;
  d.vertices = soup.vertex_count();
  d.triangles = soup.triangle_count();
  d.bounds = soup.bounds();
  d.total_mass = total_mass(soup);
  d.sites = sites ? sites->size() : 0;
  return d;
}

namespace {

Json vec_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }
Vec3 vec_from(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

}  // namespace

Json to_json(const SolveReport& r) {
  Json steps = Json::array();
  for (const auto& s : r.steps)
    steps.push_back({{"ell", s.ell},
                     {"residual_before", s.residual_before},
                     {"residual_after", s.residual_after},
                     {"min_mass", s.min_mass},
                     {"cg_iterations", s.cg_iterations}});
  return {{"iterations", r.iterations},
          {"converged", r.converged},
          {"residuals", r.residuals},
          {"steps", steps},
          {"epsilon0", r.epsilon0},
          {"eta", r.eta},
          {"worst_decrease_factor", r.worst_decrease_factor},
          {"evaluations", r.evaluations},
          {"jitter_restarts", r.jitter_restarts},
          {"warnings", r.warnings}};
}

SolveReport solve_report_from_json(const Json& j) {
  SolveReport r;
  r.iterations = j.at("iterations").get<std::size_t>();
  r.converged = j.at("converged").get<bool>();
  r.residuals = j.at("residuals").get<std::vector<double>>();
  for (const auto& s : j.at("steps"))
    r.steps.push_back({s.at("ell").get<int>(), s.at("residual_before").get<double>(),
                       s.at("residual_after").get<double>(), s.at("min_mass").get<double>(),
                       s.at("cg_iterations").get<std::size_t>()});
  r.epsilon0 = j.at("epsilon0").get<double>();
  r.eta = j.at("eta").get<double>();
  r.worst_decrease_factor = j.at("worst_decrease_factor").get<double>();
  r.evaluations = j.at("evaluations").get<std::size_t>();
  r.jitter_restarts = j.at("jitter_restarts").get<int>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

Json to_json(const RunReport& r) {
  Json solves = Json::array();
  Json solve_seconds = Json::array();
  for (const auto& s : r.solves) {
    solves.push_back(to_json(s));
    solve_seconds.push_back(s.wall_seconds);
  }
  Json j;
  j["schema"] = 1;
  j["command"] = r.command;
  j["exit_code"] = r.exit_code;
  j["error"] = r.error;
  j["config"] = r.config;
  j["input"] = {{"vertices", r.input.vertices},
                {"triangles", r.input.triangles},
                {"bounds", r.input.bounds.valid() ? Json{vec_json(r.input.bounds.lo), vec_json(r.input.bounds.hi)} : Json()},
                {"total_mass", r.input.total_mass},
                {"sites", r.input.sites}};
  j["solves"] = solves;
  j["results"] = r.results;
  j["outputs"] = r.outputs;
  j["warnings"] = r.warnings;
  j["timing"] = {{"wall_seconds", r.wall_seconds}, {"solve_seconds", solve_seconds}};
  return j;
}

RunReport run_report_from_json(const Json& j) {
  if (j.at("schema").get<int>() != 1) throw ValidationError("unsupported report schema");
  RunReport r;
  r.command = j.at("command").get<std::string>();
  r.exit_code = j.at("exit_code").get<int>();
  r.error = j.at("error").get<std::string>();
  r.config = j.at("config");
  const auto& in = j.at("input");
  r.input.vertices = in.at("vertices").get<std::size_t>();
  r.input.triangles = in.at("triangles").get<std::size_t>();
  if (!in.at("bounds").is_null()) {
    r.input.bounds.lo = vec_from(in.at("bounds").at(0));
    r.input.bounds.hi = vec_from(in.at("bounds").at(1));
  }
  r.input.total_mass = in.at("total_mass").get<double>();
  r.input.sites = in.at("sites").get<std::size_t>();
  const auto& seconds = j.at("timing").at("solve_seconds");
  for (std::size_t k = 0; k < j.at("solves").size(); ++k) {
    r.solves.push_back(solve_report_from_json(j.at("solves").at(k)));
    r.solves.back().wall_seconds = seconds.at(k).get<double>();
  }
  r.results = j.at("results");
  r.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  r.wall_seconds = j.at("timing").at("wall_seconds").get<double>();
  return r;
}

void write_report(const RunReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << to_json(report).dump(2) << '\n';
}

RunReport read_report(const std::string& path) {
  auto in = open_input(path);
  try {
    return run_report_from_json(Json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": malformed report: " + e.what());
  }
}

Json to_json(const RigidTransform& t) {
  return {{"rotation", t.rotation}, {"translation", vec_json(t.translation)}, {"angle", t.angle()}};
}

}  // namespace sdot::io
