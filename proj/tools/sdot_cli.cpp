// Command-line front end: solve, quantize, remesh, register.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <iostream>

#include "sdot/apps.hpp"
#include "sdot/io.hpp"
#include "sdot/log.hpp"
#include "sdot/transport.hpp"

namespace {

using sdot::io::Json;
using sdot::io::RunReport;

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kSolver = 3 };

struct Common {
  std::string mesh;
  std::string density;
  std::string report;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  double eta = 1e-6;
  std::size_t max_iter = 100;
  bool no_jitter = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--mesh", c.mesh, "Triangle mesh (OFF or OBJ)")->required();
  cmd->add_option("--density", c.density, "Per-vertex density CSV");
  cmd->add_option("--seed", c.seed, "Seed for every random choice");
  cmd->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
  cmd->add_option("--eta", c.eta, "Newton stopping tolerance");
  cmd->add_option("--max-iter", c.max_iter, "Newton iteration cap");
  cmd->add_flag("--no-jitter", c.no_jitter, "Fail on degeneracy instead of perturbing the sites");
}

sdot::SolverConfig solver_config(const Common& c) {
  sdot::SolverConfig config;
  config.eta = c.eta;
  config.max_iterations = c.max_iter;
  config.seed = c.seed;
  config.jitter = c.no_jitter ? sdot::JitterPolicy::Off : sdot::JitterPolicy::OnDegeneracy;
  config.diagram.threads = c.threads;
  return config;
}

// Thread count is left out on purpose: reports must not depend on it.
Json config_json(const Common& c) {
  return {{"mesh", c.mesh}, {"density", c.density}, {"seed", c.seed},
          {"eta", c.eta},   {"max_iter", c.max_iter}, {"jitter", !c.no_jitter}};
}

void add_warnings(RunReport& report, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings)
    if (std::find(report.warnings.begin(), report.warnings.end(), w) == report.warnings.end())
      report.warnings.push_back(w);
}

sdot::SimplexSoup load(const Common& c, RunReport& report) {
  std::vector<std::string> warnings;
  auto soup = sdot::io::load_mesh(c.mesh, {c.density, true}, &warnings);
  add_warnings(report, warnings);
  const auto connectivity = sdot::check_strong_connectedness(soup);
  if (!connectivity.connected)
    add_warnings(report, {"support is not strongly connected: " + std::to_string(connectivity.components.size()) +
                          " edge-connected components"});
  report.input = sdot::io::digest(soup);
  return soup;
}

Json vec_json(const sdot::Vec3& v) { return Json::array({v.x, v.y, v.z}); }

void record_solve(RunReport& report, const sdot::SolveReport& solve) {
  report.solves.push_back(solve);
  add_warnings(report, solve.warnings);
}

int run_solve(const Common& c, const std::string& points, const std::string& cells, RunReport& report) {
  report.config = config_json(c);
  report.config["points"] = points;
  const auto soup = load(c, report);
  const auto sites = sdot::io::load_points(points, sdot::total_mass(soup), soup.geometric_tolerance());
  report.input.sites = sites.size();

  const auto config = solver_config(c);
  const auto result = sdot::damped_newton(soup, sites, config);
  record_solve(report, result.report);
  const auto cert = sdot::verify_solution(soup, result.sites, result.weights, config.eta, result.report.epsilon0,
                                          config.diagram);
  const auto summary = sdot::transport_cost(result.diagram, result.sites);
  report.results = {{"residual", cert.residual},
                    {"iterations", result.report.iterations},
                    {"weights", result.weights},
                    {"masses", result.G},
                    {"transport_cost", summary.total_cost},
                    {"certificate",
                     {{"passed", cert.passed},
                      {"min_mass", cert.min_mass},
                      {"epsilon0", cert.epsilon0},
                      {"weight_spread", cert.weight_spread},
                      {"spread_bound", cert.spread_bound}}}};
  if (!cells.empty()) {
    sdot::io::export_cells(result.diagram, cells);
    report.outputs["cells"] = cells;
  }
  std::cout << "converged in " << result.report.iterations << " iterations, residual " << cert.residual
            << ", transport cost " << summary.total_cost << '\n';
  return kOk;
}

int run_quantize(const Common& c, std::size_t n, std::size_t iters, const std::string& out, RunReport& report) {
  report.config = config_json(c);
  report.config["n"] = n;
  report.config["iters"] = iters;
  const auto soup = load(c, report);
  const auto result = sdot::quantize(soup, n, iters, solver_config(c));
  Json history = Json::array();
  for (std::size_t k = 0; k < result.history.size(); ++k) {
    const auto& h = result.history[k];
    history.push_back({{"cost", h.cost},
                       {"residual", h.residual},
                       {"newton_iterations", h.newton_iterations},
                       {"displacement", h.displacement}});
    record_solve(report, result.reports[k]);
  }
  report.results = {{"history", history}, {"initial_cost", result.initial_cost}, {"final_cost", result.final_cost}};
  if (!out.empty()) {
    sdot::io::write_points_xyz(result.sites, out);
    report.outputs["points"] = out;
  }
  std::cout << "quantized " << n << " points, cost " << result.initial_cost << " -> " << result.final_cost << '\n';
  return kOk;
}

int run_remesh(const Common& c, const std::string& out, RunReport& report) {
  report.config = config_json(c);
  const auto soup = load(c, report);
  const auto result = sdot::remesh(soup, solver_config(c));
  record_solve(report, result.solve.report);
  add_warnings(report, result.mesh.warnings);
  report.results = {{"vertices", result.mesh.vertices.size()},
                    {"faces", result.mesh.faces.size()},
                    {"euler_characteristic", result.mesh.euler_characteristic()}};
  if (!out.empty()) {
    sdot::io::write_dual_obj(result.mesh, out);
    report.outputs["dual"] = out;
  }
  std::cout << "dual mesh: " << result.mesh.vertices.size() << " vertices, " << result.mesh.faces.size()
            << " faces, Euler characteristic " << result.mesh.euler_characteristic() << '\n';
  return kOk;
}

int run_register(const Common& c, const std::string& points, std::size_t max_outer, const std::string& out,
                 RunReport& report) {
  report.config = config_json(c);
  report.config["points"] = points;
  report.config["max_outer"] = max_outer;
  const auto soup = load(c, report);
  const auto cloud = sdot::io::load_points(points, sdot::total_mass(soup), soup.geometric_tolerance());
  report.input.sites = cloud.size();
  const auto result = sdot::register_point_cloud(soup, cloud, max_outer, solver_config(c));
  for (const auto& r : result.reports) record_solve(report, r);
  Json transform = sdot::io::to_json(result.transform);
  transform["rms"] = result.rms;
  transform["iterations"] = result.iterations;
  transform["converged"] = result.converged;
  report.results = transform;
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw sdot::Error("cannot write " + out);
    f << transform.dump(2) << '\n';
    report.outputs["transform"] = out;
  }
  std::cout << "registered in " << result.iterations << " iterations, final rms " << result.rms.back()
            << ", rotation angle " << result.transform.angle() << ", translation "
            << vec_json(result.transform.translation).dump() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  if (!std::getenv("SDOT_LOG")) sdot::log::set_level(sdot::log::Level::Info);

  CLI::App app{"Semi-discrete optimal transport on triangulated surfaces"};
  app.require_subcommand(1);

  Common c;
  std::string points, cells, out;
  std::size_t n = 0, iters = 10, max_outer = 10;

  auto* solve = app.add_subcommand("solve", "Solve for the transport weights");
  add_common(solve, c);
  solve->add_option("--points", points, "Target points (XYZ or PLY)")->required();
  solve->add_option("--out", c.report, "JSON report");
  solve->add_option("--export-cells", cells, "OBJ with the Laguerre cells");

  auto* quant = app.add_subcommand("quantize", "Optimal quantization by Lloyd relaxation");
  add_common(quant, c);
  quant->add_option("--n", n, "Number of points")->required();
  quant->add_option("--iters", iters, "Outer iterations");
  quant->add_option("--out", out, "Output points (XYZ)");
  quant->add_option("--report", c.report, "JSON report");

  auto* rem = app.add_subcommand("remesh", "Dual of the transport diagram onto the mesh vertices");
  add_common(rem, c);
  rem->add_option("--out", out, "Dual mesh (OBJ)");
  rem->add_option("--report", c.report, "JSON report");

  auto* reg = app.add_subcommand("register", "OT-ICP rigid registration");
  add_common(reg, c);
  reg->add_option("--points", points, "Point cloud (XYZ or PLY)")->required();
  reg->add_option("--max-outer", max_outer, "Outer iterations");
  reg->add_option("--out", out, "Transform (JSON)");
  reg->add_option("--report", c.report, "JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  RunReport report;
  const auto start = std::chrono::steady_clock::now();
  int code = kOk;
  try {
    if (*solve) {
      report.command = "solve";
      code = run_solve(c, points, cells, report);
    } else if (*quant) {
      report.command = "quantize";
      code = run_quantize(c, n, iters, out, report);
    } else if (*rem) {
      report.command = "remesh";
      code = run_remesh(c, out, report);
    } else {
      report.command = "register";
      code = run_register(c, points, max_outer, out, report);
    }
  } catch (const sdot::SolverError& e) {
    record_solve(report, e.report());
    report.error = std::string("solver failure (") + sdot::to_string(e.kind()) + "): " + e.what();
    code = kSolver;
  } catch (const sdot::DegeneracyError& e) {
    report.error = std::string("degenerate diagram: ") + e.what();
    code = kSolver;
  } catch (const sdot::InitializationError& e) {
    report.error = std::string("initialization failure: ") + e.what();
    code = kSolver;
  } catch (const sdot::RegistrationError& e) {
    report.error = std::string("registration failure: ") + e.what();
    code = kSolver;
  } catch (const sdot::ValidationError& e) {
    report.error = std::string("invalid input: ") + e.what();
    code = kValidation;
  } catch (const sdot::GeometryError& e) {
    report.error = std::string("invalid geometry: ") + e.what();
    code = kValidation;
  } catch (const sdot::Error& e) {
    report.error = e.what();
    code = kSolver;
  }
  report.exit_code = code;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!report.error.empty()) std::cerr << "sdot: " << report.error << '\n';
  for (const auto& w : report.warnings) std::cerr << "sdot: warning: " << w << '\n';
  if (!c.report.empty()) {
    try {
      sdot::io::write_report(report, c.report);
    } catch (const sdot::Error& e) {
      std::cerr << "sdot: " << e.what() << '\n';
      if (code == kOk) code = kSolver;
    }
  }
  return code;
}
