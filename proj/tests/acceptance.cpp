// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "sdot/apps.hpp"
#include "sdot/log.hpp"
#include "sdot/transport.hpp"

using namespace sdot;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

SolverConfig quiet() {
  SolverConfig c;
  c.progress = false;
  return c;
}

struct Converged {
  std::string name;
  SimplexSoup soup;
  SiteSet sites;
  Weights weights;
};

// Every solve of the run feeds the line-search (4) and spread (8) checks.
struct Ledger {
  std::vector<std::pair<std::string, SolveReport>> reports;
  std::vector<Converged> converged;

  SolveResult solve(const std::string& name, const SimplexSoup& soup, const SiteSet& sites,
                    const SolverConfig& config = quiet()) {
    try {
      auto r = damped_newton(soup, sites, config);
      reports.emplace_back(name, r.report);
      if (r.report.converged) converged.push_back({name, soup, r.sites, r.weights});
      return r;
    } catch (const SolverError& e) {
      reports.emplace_back(name, e.report());
      throw;
    }
  }
  void add(const std::string& name, const std::vector<SolveReport>& rs) {
    for (const auto& r : rs) reports.emplace_back(name, r);
  }
};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void fail(const std::string& why) {
    if (pass) detail << why;
    pass = false;
  }
};

// Flat and curved soups with random sites near the surface and random weights
// of the size of the squared inter-site spacing.
struct Instance {
  SimplexSoup soup;
  SiteSet sites;
  Weights weights;
};

SimplexSoup pick_soup(int k) {
  switch (k % 5) {
    case 0: return fixtures::flat_grid(4, 0.3, k + 1);
    case 1: return fixtures::grid(5, [](double x, double y) { return 0.3 * std::sin(3 * x) * std::cos(2 * y); }, 0.2, k);
    case 2: return fixtures::icosphere(1);
    case 3: return fixtures::torus(10, 6);
    default: return fixtures::bumpy_ellipsoid(1);
  }
}

Instance random_instance(std::mt19937_64& rng, int k, std::size_t n) {
  auto soup = pick_soup(k);
  auto pts = fixtures::noisy_samples(soup, n, 0.05 * soup.scale(), rng());
  auto sites = SiteSet::uniform(std::move(pts), total_mass(soup));
  const double spacing = soup.scale() / std::sqrt(double(n));
  auto w = init_weights(soup, sites);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& x : w) x += 0.05 * spacing * spacing * u(rng);
  return {std::move(soup), std::move(sites), std::move(w)};
}

// 1. Mass conservation, shift invariance and Jacobian structure.
Outcome invariants() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> count(2, 50);
  std::uniform_real_distribution<double> shift(-5, 5);
  double worst_mass = 0, worst_shift = 0, worst_sym = 0, worst_row = 0, min_off = 0;
  for (int k = 0; k < 50; ++k) {
    const auto inst = random_instance(rng, k, count(rng));
    const double mu = total_mass(inst.soup);
    const auto d = compute_diagram(inst.soup, inst.sites, inst.weights);
    double sum = 0;
    for (double g : d.masses) sum += g;
    worst_mass = std::max(worst_mass, std::abs(sum - mu) / mu);

    Weights moved = inst.weights;
    const double c = shift(rng);
    for (double& w : moved) w += c;
    const auto e = compute_diagram(inst.soup, inst.sites, moved);
    for (std::size_t i = 0; i < d.masses.size(); ++i)
      worst_shift = std::max(worst_shift, std::abs(d.masses[i] - e.masses[i]));

    // Dense assembly straight from the interface records.
    const std::size_t n = inst.sites.size();
    std::vector<double> h(n * n, 0.0);
    for (const auto& rec : d.interfaces) {
      const double v = rec.integral / (2 * rec.projected_gap);
      h[rec.i * n + rec.j] += v;
      h[rec.j * n + rec.i] += v;
    }
    const auto sparse = assemble_jacobian(d);
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0, scale = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double hij = sparse(i, j);
        worst_sym = std::max(worst_sym, std::abs(hij - sparse(j, i)));
        if (i != j) {
          min_off = std::min(min_off, hij);
          if (std::abs(hij - h[i * n + j]) > 1e-12 * std::max(1.0, std::abs(hij))) o.fail("sparse and dense assembly differ");
        }
        row += hij;
        scale += std::abs(hij);
      }
      if (scale > 0) worst_row = std::max(worst_row, std::abs(row) / scale);
    }
  }
  const double t = seconds_since(start);
  if (worst_mass > 1e-9) o.fail("mass sum off by " + std::to_string(worst_mass));
  if (worst_shift > 1e-12) o.fail("shift changed G by " + std::to_string(worst_shift));
  if (worst_sym > 0) o.fail("asymmetric Jacobian");
  if (min_off < 0) o.fail("negative off-diagonal");
  if (worst_row > 1e-12) o.fail("row sum " + std::to_string(worst_row));
  if (t >= 60) o.fail("too slow");
  o.detail << " 50 instances, mass rel err " << worst_mass << ", shift err " << worst_shift << ", row-sum rel err "
           << worst_row << ", " << t << " s";
  return o;
}

// 2. Jacobian against central differences.
Outcome finite_differences() {
  Outcome o;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> count(3, 20);
  double worst = 0;
  std::size_t checked = 0;
  for (int k = 0; k < 10; ++k) {
    const auto inst = random_instance(rng, k, count(rng));
    const auto h = assemble_jacobian(compute_diagram(inst.soup, inst.sites, inst.weights));
    const double step = 1e-5 * inst.soup.scale() * inst.soup.scale();
    for (std::size_t j = 0; j < inst.sites.size(); ++j) {
      Weights plus = inst.weights, minus = inst.weights;
      plus[j] += step;
      minus[j] -= step;
      const auto gp = evaluate_G(inst.soup, inst.sites, plus).G;
      const auto gm = evaluate_G(inst.soup, inst.sites, minus).G;
      for (std::size_t i = 0; i < inst.sites.size(); ++i) {
        const double exact = h(i, j);
        if (std::abs(exact) <= 1e-6) continue;
        const double rel = std::abs((gp[i] - gm[i]) / (2 * step) - exact) / std::abs(exact);
        worst = std::max(worst, rel);
        ++checked;
      }
    }
  }
  if (worst > 1e-4) o.fail("relative error " + std::to_string(worst));
  o.detail << " 10 instances, " << checked << " entries, worst relative error " << worst;
  return o;
}

// 3. Two sites on the unit square, ν = (0.6, 0.4): ψ₂ - ψ₁ = 0.1.
Outcome analytic(Ledger& ledger) {
  Outcome o;
  const auto start = Clock::now();
  const auto r = ledger.solve("square", fixtures::unit_square(), fixtures::square_sites(0.6, 0.4));
  const double t = seconds_since(start);
  const double gap = r.weights[1] - r.weights[0];
  const double res = r.report.residuals.back();
  if (std::abs(gap - 0.1) > 1e-6) o.fail("weight gap " + std::to_string(gap));
  if (!(res < 1e-6)) o.fail("residual");
  if (r.report.iterations > 10) o.fail("too many iterations");
  if (t >= 1) o.fail("too slow");
  o.detail << " psi2-psi1 = " << gap << ", residual " << res << ", " << r.report.iterations << " iterations, " << t
           << " s";
  return o;
}

// 5. Desk-scale sphere.
Outcome desk_scale(Ledger& ledger) {
  Outcome o;
  const auto sphere = fixtures::icosphere(3);
  const auto sites = SiteSet::uniform(fixtures::noisy_samples(sphere, 100, 0.01 * sphere.scale(), 5), total_mass(sphere));
  auto config = quiet();
  config.diagram.threads = 1;
  const auto start = Clock::now();
  try {
    const auto r = ledger.solve("icosphere", sphere, sites, config);
    const double t = seconds_since(start);
    if (!r.report.converged) o.fail("not converged");
    if (r.report.iterations > 30) o.fail("too many iterations");
    if (t >= 120) o.fail("too slow");
    o.detail << " " << sphere.triangle_count() << " triangles, N = 100, " << r.report.iterations
             << " iterations, residual " << r.report.residuals.back() << ", " << t << " s";
  } catch (const Error& e) {
    o.fail(e.what());
  }
  return o;
}

// 6. ψ⁰ = -d² gives non-empty cells.
Outcome initialization(Ledger& ledger) {
  Outcome o;
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> count(5, 60);
  std::uniform_real_distribution<double> noise(0.0, 0.3);
  std::size_t errors = 0;
  double smallest = HUGE_VAL;
  for (int k = 0; k < 20; ++k) {
    const auto soup = pick_soup(k);
    const auto n = count(rng);
    const auto sites =
        SiteSet::uniform(fixtures::noisy_samples(soup, n, noise(rng) * soup.scale(), rng()), total_mass(soup));
    try {
      const auto w = init_weights(soup, sites);
      const auto g = evaluate_G(soup, sites, w).G;
      for (double m : g) smallest = std::min(smallest, m / total_mass(soup));
      if (*std::min_element(g.begin(), g.end()) <= 0) o.fail("empty cell in configuration " + std::to_string(k));
      // The solves themselves also feed criteria 4 and 8.
      if (k % 4 == 0) ledger.solve("init " + std::to_string(k), soup, sites);
    } catch (const InitializationError& e) {
      ++errors;
      o.fail(e.what());
    }
  }
  o.detail << " 20 configurations, " << errors << " initialization errors, smallest relative cell mass "
           << smallest;
  return o;
}

// 7. Semi-discrete solution against the exact discrete transport of samples.
Outcome oracle(Ledger& ledger) {
  Outcome o;
  struct Micro {
    std::string name;
    SimplexSoup soup;
    std::vector<Vec3> sites;
    std::vector<double> nu;
  };
  const SimplexSoup book({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {{0, 1, 2}, {0, 3, 1}});
  const SimplexSoup pyramid({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0.5, 0.5, 0.6}},
                            {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}});
  const std::vector<Micro> micro{
      {"square", fixtures::unit_square(), {{0.25, 0.5, 0}, {0.75, 0.5, 0}}, {0.6, 0.4}},
      {"sloped density", fixtures::unit_square({1, 3, 3, 1}), {{0.3, 0.2, 0.1}, {0.7, 0.4, 0}, {0.4, 0.8, -0.1}}, {1, 1, 1}},
      {"folded book", book, {{0.3, 0.2, 0}, {0.2, 0.3, 0.4}, {0.6, 0.1, 0.3}}, {1, 2, 1}},
      {"pyramid", pyramid, {{0.2, 0.2, 0.2}, {0.8, 0.3, 0.3}, {0.7, 0.8, 0.2}, {0.2, 0.7, 0.3}}, {1, 1, 1, 1}},
      {"pyramid five", pyramid,
       {{0.2, 0.2, 0.1}, {0.8, 0.3, 0.1}, {0.7, 0.8, 0.1}, {0.2, 0.7, 0.1}, {0.5, 0.5, 0.7}}, {1, 1, 1, 1, 2}},
  };
  double worst_cost = 0, worst_mass = 0;
  for (const auto& m : micro) {
    const double mu = total_mass(m.soup);
    const double nu_total = std::accumulate(m.nu.begin(), m.nu.end(), 0.0);
    std::vector<double> nu;
    for (double v : m.nu) nu.push_back(v * mu / nu_total);
    const SiteSet sites(m.sites, nu);
    try {
      const auto r = ledger.solve("oracle " + m.name, m.soup, sites);
      const auto summary = transport_cost(r.diagram, r.sites);
      const auto exact = lp_oracle(m.soup, sites, 2500 / m.soup.triangle_count());
      const double rel = std::abs(summary.total_cost - exact.cost) / exact.cost;
      worst_cost = std::max(worst_cost, rel);
      for (std::size_t i = 0; i < sites.size(); ++i) worst_mass = std::max(worst_mass, std::abs(exact.masses[i] - r.G[i]));
      if (rel > 0.01) o.fail(m.name + ": cost differs by " + std::to_string(rel));
    } catch (const Error& e) {
      o.fail(m.name + ": " + e.what());
    }
  }
  if (worst_mass > 1e-3) o.fail("mass differs by " + std::to_string(worst_mass));
  o.detail << " 5 instances, worst cost rel err " << worst_cost << ", worst mass err " << worst_mass;
  return o;
}

// 9. Quantization, remeshing and registration.
Outcome applications(Ledger& ledger) {
  Outcome o;
  const auto start = Clock::now();

  const auto sphere = fixtures::icosphere(3);
  const auto q = quantize(sphere, 100, 10, quiet());
  ledger.add("quantize", q.reports);
  for (std::size_t k = 0; k < q.history.size(); ++k) {
    if (!(q.history[k].residual < 1e-6)) o.fail("quantize residual above eta");
    if (k && q.history[k].cost > q.history[k - 1].cost) o.fail("quantize cost increased at round " + std::to_string(k));
  }
  if (q.final_cost > q.initial_cost) o.fail("quantize final cost above initial");

  const auto mesh = fixtures::icosphere(2);
  const auto rm = remesh(mesh, quiet());
  ledger.reports.emplace_back("remesh", rm.solve.report);
  if (rm.solve.report.converged) ledger.converged.push_back({"remesh", mesh, rm.solve.sites, rm.solve.weights});
  std::set<std::pair<std::uint32_t, std::uint32_t>> adjacent;
  for (const auto& rec : rm.solve.diagram.interfaces)
    if (rec.integral > 0) adjacent.insert(std::minmax(rec.i, rec.j));
  for (const auto& f : rm.mesh.faces)
    for (int k = 0; k < 3; ++k)
      if (!adjacent.count(std::minmax(f[k], f[(k + 1) % 3]))) o.fail("dual face without a backing interface");
  if (rm.mesh.euler_characteristic() != 2) o.fail("Euler characteristic " + std::to_string(rm.mesh.euler_characteristic()));

  const auto body = fixtures::bumpy_ellipsoid(2);
  const auto cloud = quantize(body, 40, 40, quiet()).sites;
  const double diam = body.scale();
  const auto motion = RigidTransform::from_axis_angle({1, -2, 0.5}, 0.3, Vec3{0.05, -0.03, 0.04} * diam);
  std::vector<Vec3> moved;
  for (const auto& p : cloud.positions()) moved.push_back(motion(p));
  const auto reg = register_point_cloud(body, cloud.with_positions(moved), 10, quiet());
  ledger.add("register", reg.reports);
  double sq = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) sq += squared_norm(reg.transform(moved[i]) - cloud.position(i));
  const double rms = std::sqrt(sq / double(cloud.size()));
  if (rms > 1e-3 * diam) o.fail("registration rms " + std::to_string(rms / diam) + " diam");
  if (reg.iterations > 10) o.fail("registration iterations");

  o.detail << " quantize cost " << q.initial_cost << " -> " << q.final_cost << " in " << q.history.size()
           << " rounds; dual mesh V=" << rm.mesh.vertices.size() << " F=" << rm.mesh.faces.size()
           << " chi=" << rm.mesh.euler_characteristic() << "; registration rms " << rms / diam << " diam in "
           << reg.iterations << " iterations; " << seconds_since(start) << " s";
  return o;
}

// 10. Vertex contact and three collinear sites with coinciding bisectors.
Outcome pathologies(Ledger& ledger) {
  Outcome o;
  const auto contact = normalize(fixtures::vertex_contact());
  const auto conn = check_strong_connectedness(contact);
  if (conn.connected) o.fail("vertex contact reported connected");
  std::string outcome;
  const auto start = Clock::now();
  try {
    const auto r = ledger.solve("vertex contact", contact, fixtures::vertex_contact_sites(1.0));
    outcome = "converged in " + std::to_string(r.report.iterations) + " iterations";
  } catch (const SolverError& e) {
    if (e.kind() != SolverError::Kind::SingularSystem && e.kind() != SolverError::Kind::LineSearch)
      o.fail(std::string("unexpected failure kind ") + to_string(e.kind()));
    bool warned = false;
    for (const auto& w : e.report().warnings) warned |= w.find("not strongly connected") != std::string::npos;
    if (!warned) o.fail("no connectedness warning");
    outcome = std::string("failed with ") + to_string(e.kind());
  } catch (const Error& e) {
    o.fail(std::string("unexpected error: ") + e.what());
  }
  if (seconds_since(start) > 10) o.fail("vertex contact solve took too long");

  const SiteSet collinear({{0.5, 0, 0}, {-0.5, 0, 0}, {1, 0, 0}}, {1, 1, 1});
  bool flagged = false;
  try {
    compute_diagram(fixtures::unit_square(), collinear, {0, -1.5, 0});
  } catch (const DegeneracyError& e) {
    flagged = e.involves(0, 2);
  }
  if (!flagged) o.fail("collinear example not flagged on (1,3)");
  o.detail << " " << conn.components.size() << " components; solve " << outcome << "; collinear pair (1,3) "
           << (flagged ? "flagged" : "missed");
  return o;
}

// 4. Every accepted step met both line-search conditions.
Outcome line_search(const Ledger& ledger) {
  Outcome o;
  std::size_t steps = 0;
  double worst = 0;
  for (const auto& [name, r] : ledger.reports)
    for (const auto& s : r.steps) {
      ++steps;
      worst = std::max(worst, s.decrease_factor() / s.bound());
      if (!(s.residual_after <= (1.0 - std::ldexp(1.0, -(s.ell + 1))) * s.residual_before))
        o.fail(name + ": residual condition violated");
      if (!(s.min_mass >= r.epsilon0)) o.fail(name + ": mass floor violated");
    }
  o.detail << " " << ledger.reports.size() << " solves, " << steps << " steps, worst decrease/bound " << worst;
  return o;
}

// 8. max |ψ_i - ψ_j| <= diam(K ∪ Y)², the diameter by brute force.
Outcome spread(const Ledger& ledger) {
  Outcome o;
  double worst = 0;
  for (const auto& c : ledger.converged) {
    std::vector<Vec3> pts = c.soup.vertices();
    pts.insert(pts.end(), c.sites.positions().begin(), c.sites.positions().end());
    double d2 = 0;
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b) d2 = std::max(d2, squared_norm(pts[a] - pts[b]));
    const auto [lo, hi] = std::minmax_element(c.weights.begin(), c.weights.end());
    worst = std::max(worst, (*hi - *lo) / d2);
    if (*hi - *lo > d2) o.fail(c.name + ": spread above diam²");
  }
  o.detail << " " << ledger.converged.size() << " converged solves, largest spread/diam² " << worst;
  return o;
}

}  // namespace

int main() {
  sdot::log::set_level(sdot::log::Level::Warn);
  Ledger ledger;
  std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, [] { return invariants(); }},
      {2, [] { return finite_differences(); }},
      {3, [&] { return analytic(ledger); }},
      {5, [&] { return desk_scale(ledger); }},
      {6, [&] { return initialization(ledger); }},
      {7, [&] { return oracle(ledger); }},
      {9, [&] { return applications(ledger); }},
      {10, [&] { return pathologies(ledger); }},
      {4, [&] { return line_search(ledger); }},
      {8, [&] { return spread(ledger); }},
  };
  const char* names[] = {"",
                         "invariant suite",
                         "Jacobian vs finite differences",
                         "analytic micro-solve",
                         "line-search contract",
                         "desk-scale convergence",
                         "initialization guarantee",
                         "LP-oracle equivalence",
                         "weight-spread bound",
                         "applications",
                         "pathology detection"};
  std::map<int, std::string> lines;
  bool all = true;
  for (auto& [id, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    all &= o.pass;
    lines[id] = std::string(o.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + " (" + names[id] +
                "):" + o.detail.str();
    std::fprintf(stderr, "%s\n", lines[id].c_str());
  }
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  return all ? 0 : 1;
}
