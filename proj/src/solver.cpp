#include "sdot/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "sdot/log.hpp"

namespace sdot {

// ---------------------------------------------------------------- SparseJacobian

SparseJacobian::SparseJacobian(std::size_t n, std::vector<JacobianEntry> upper)
    : upper_(std::move(upper)), diagonal_(n, 0.0) {
  std::sort(upper_.begin(), upper_.end(),
            [](const JacobianEntry& l, const JacobianEntry& r) { return std::tie(l.i, l.j) < std::tie(r.i, r.j); });
  for (const auto& e : upper_) {
    if (e.i >= e.j || e.j >= n) throw ValidationError("Jacobian entry outside the strict upper triangle");
    diagonal_[e.i] -= e.value;
    diagonal_[e.j] -= e.value;
  }
}

double SparseJacobian::operator()(std::size_t i, std::size_t j) const {
  if (i == j) return diagonal_[i];
  if (i > j) std::swap(i, j);
  auto it = std::lower_bound(upper_.begin(), upper_.end(), std::make_pair(i, j),
                             [](const JacobianEntry& e, const std::pair<std::size_t, std::size_t>& key) {
                               return std::make_pair<std::size_t, std::size_t>(e.i, e.j) < key;
                             });
  if (it != upper_.end() && it->i == i && it->j == j) return it->value;
  return 0.0;
}

void SparseJacobian::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t k = 0; k < diagonal_.size(); ++k) y[k] = diagonal_[k] * x[k];
  for (const auto& e : upper_) {
    y[e.i] += e.value * x[e.j];
    y[e.j] += e.value * x[e.i];
  }
}

std::vector<double> SparseJacobian::multiply(std::span<const double> x) const {
  std::vector<double> y(size());
  multiply(x, y);
  return y;
}

double SparseJacobian::quadratic_form(std::span<const double> v) const {
  // <Hv, v> = -Σ_{i<j} H_ij (v_i - v_j)², exact sign by construction.
  double s = 0.0;
  for (const auto& e : upper_) s -= e.value * (v[e.i] - v[e.j]) * (v[e.i] - v[e.j]);
  return s;
}

const char* to_string(SolverError::Kind kind) {
  switch (kind) {
    case SolverError::Kind::SingularSystem: return "singular_system";
    case SolverError::Kind::LineSearch: return "line_search";
    case SolverError::Kind::NonConvergence: return "non_convergence";
    case SolverError::Kind::InvalidInput: return "invalid_input";
  }
  return "unknown";
}

double StepRecord::bound() const { return 1.0 - std::ldexp(1.0, -(ell + 1)); }

// ---------------------------------------------------------------- G and DG

Evaluation evaluate_G(const SimplexSoup& soup, const SiteSet& sites, const Weights& weights,
                      const DiagramOptions& options) {
  Evaluation ev{{}, compute_diagram(soup, sites, weights, options)};
  ev.G = ev.diagram.masses;
  return ev;
}

Weights init_weights(const SimplexSoup& soup, const SiteSet& sites, const DiagramOptions& options) {
  const std::size_t n = sites.size();
  Weights psi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = distance_to_soup(sites.position(i), soup);
    psi[i] = -d * d;
  }
  const double floor = 1e-12 * total_mass(soup);
  const double nudge = 1e-6 * soup.scale() * soup.scale();
  std::vector<std::uint32_t> starving;
  for (int round = 0; round <= 10; ++round) {
    const auto diagram = compute_diagram(soup, sites, psi, options);
    starving.clear();
    for (std::uint32_t i = 0; i < n; ++i)
      if (!(diagram.masses[i] > floor)) starving.push_back(i);
    if (starving.empty()) return psi;
    if (round == 10) break;
    log::debug("init_weights: ", starving.size(), " empty cells, lowering their weights");
    for (std::uint32_t i : starving) psi[i] -= nudge;
  }
  std::ostringstream msg;
  msg << "initial weights leave " << starving.size() << " cell(s) without mass, first site " << starving[0];
  throw InitializationError(msg.str(), std::move(starving));
}

SparseJacobian assemble_jacobian(const RestrictedLaguerreDiagram& diagram) {
  return SparseJacobian(diagram.site_count, interface_jacobian_entries(diagram));
}

// ---------------------------------------------------------------- linear solve

namespace {

void project_zero_mean(std::span<double> v) {
  if (v.empty()) return;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (double& x : v) x -= mean;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

std::vector<double> solve_newton_system(const SparseJacobian& h, std::span<const double> r, double tolerance,
                                        LinearSolveStats* stats) {
  const std::size_t n = h.size();
  if (r.size() != n) throw ValidationError("right-hand side size mismatch");
  std::vector<double> x(n, 0.0);
  if (stats) *stats = {};

  // Work with A = -H (positive semi-definite) and b = -r.
  std::vector<double> b(n);
  for (std::size_t k = 0; k < n; ++k) b[k] = -r[k];
  project_zero_mean(b);
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) return x;

  std::vector<double> inv_diag(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double d = -h.diagonal()[k];
    inv_diag[k] = d > 0.0 ? 1.0 / d : 1.0;
  }
  auto apply_a = [&](std::span<const double> in, std::span<double> out) {
    h.multiply(in, out);
    for (double& v : out) v = -v;
  };
  auto precondition = [&](std::span<const double> in, std::span<double> out) {
    for (std::size_t k = 0; k < n; ++k) out[k] = inv_diag[k] * in[k];
    project_zero_mean(out);
  };

  std::vector<double> res = b, z(n), p(n), ap(n);
  precondition(res, z);
  p = z;
  double rz = dot(res, z);
  const std::size_t max_iter = 10 * n;
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    apply_a(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      res[k] -= alpha * ap[k];
    }
    project_zero_mean(x);
    project_zero_mean(res);
    if (std::sqrt(dot(res, res)) <= tolerance * bnorm) {
      // Confirm against the true residual before returning.
      apply_a(x, ap);
      for (std::size_t k = 0; k < n; ++k) res[k] = b[k] - ap[k];
      project_zero_mean(res);
      const double true_rel = std::sqrt(dot(res, res)) / bnorm;
      if (true_rel <= tolerance) {
        if (stats) *stats = {it + 1, true_rel};
        return x;
      }
      precondition(res, z);
      p = z;
      rz = dot(res, z);
      continue;
    }
    precondition(res, z);
    const double rz_next = dot(res, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  std::ostringstream msg;
  msg << "conjugate gradients stalled after " << it << " iterations (relative residual "
      << std::sqrt(dot(res, res)) / bnorm
      << "); the Jacobian is singular on zero-mean vectors, the support is probably not strongly connected";
  throw SolverError(SolverError::Kind::SingularSystem, msg.str());
}

// ---------------------------------------------------------------- Newton

double residual_norm(std::span<const double> g, std::span<const double> nu, ResidualNorm norm) {
  double s = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double d = g[k] - nu[k];
    if (norm == ResidualNorm::Max) s = std::max(s, std::abs(d));
    else s += d * d;
  }
  return norm == ResidualNorm::Max ? s : std::sqrt(s);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string degenerate_pair_hint(const RestrictedLaguerreDiagram& d) {
  const InterfaceRecord* worst = nullptr;
  for (const auto& rec : d.interfaces)
    if (rec.integral > 0.0 && (!worst || rec.projected_gap < worst->projected_gap)) worst = &rec;
  if (!worst) return "no interfaces between cells";
  std::ostringstream os;
  os << "nearest degenerate pair (" << worst->i << ", " << worst->j << ") on triangle " << worst->triangle
     << ", projected gap " << worst->projected_gap;
  return os.str();
}

SiteSet jitter_sites(const SiteSet& sites, double magnitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-magnitude, magnitude);
  std::vector<Vec3> moved = sites.positions();
  for (Vec3& p : moved) {
    const double dx = u(rng), dy = u(rng), dz = u(rng);
    p += Vec3{dx, dy, dz};
  }
  return sites.with_positions(std::move(moved));
}

SolveResult run_newton(const SimplexSoup& soup, const SiteSet& sites, const SolverConfig& config,
                       SolveReport report, Clock::time_point start) {
  const std::size_t n = sites.size();
  const auto& nu = sites.masses();
  Weights psi = init_weights(soup, sites, config.diagram);
  Evaluation ev = evaluate_G(soup, sites, psi, config.diagram);
  ++report.evaluations;

  const double min_g0 = *std::min_element(ev.G.begin(), ev.G.end());
  const double min_nu = *std::min_element(nu.begin(), nu.end());
  const double eps0 = (config.halve_epsilon0 ? 0.5 : 1.0) * std::min(min_g0, min_nu);
  report.epsilon0 = eps0;
  report.eta = config.eta;
  double res = residual_norm(ev.G, nu, config.norm);
  report.residuals = {res};
  if (config.progress) log::info("newton: start, residual ", res, ", eps0 ", eps0);

  auto fail = [&](SolverError::Kind kind, const std::string& what) -> SolverError {
    report.wall_seconds = seconds_since(start);
    report.warnings.push_back(what);
    return SolverError(kind, what, report);
  };

  std::vector<double> rhs(n), trial(n);
  while (res >= config.eta) {
    if (report.iterations >= config.max_iterations) {
      std::ostringstream msg;
      msg << "no convergence after " << report.iterations << " Newton iterations (residual " << res << ")";
      throw fail(SolverError::Kind::NonConvergence, msg.str());
    }
    const SparseJacobian h = assemble_jacobian(ev.diagram);
    for (std::size_t k = 0; k < n; ++k) rhs[k] = nu[k] - ev.G[k];
    LinearSolveStats stats;
    std::vector<double> v;
    try {
      v = solve_newton_system(h, rhs, config.linear_tolerance, &stats);
    } catch (const SolverError& e) {
      throw fail(e.kind(), std::string(e.what()) + "; " + degenerate_pair_hint(ev.diagram));
    }

    bool accepted = false;
    for (int ell = 0; ell <= config.max_line_search; ++ell) {
      const double step = std::ldexp(1.0, -ell);
      for (std::size_t k = 0; k < n; ++k) trial[k] = psi[k] + step * v[k];
      Evaluation cand = evaluate_G(soup, sites, trial, config.diagram);
      ++report.evaluations;
      const double res_t = residual_norm(cand.G, nu, config.norm);
      const double min_t = *std::min_element(cand.G.begin(), cand.G.end());
      StepRecord rec{ell, res, res_t, min_t, stats.iterations};
      if (min_t >= eps0 && res_t <= rec.bound() * res) {
        psi = trial;
        ev = std::move(cand);
        res = res_t;
        report.steps.push_back(rec);
        report.residuals.push_back(res);
        report.worst_decrease_factor = std::max(report.worst_decrease_factor, rec.decrease_factor());
        ++report.iterations;
        accepted = true;
        if (config.progress)
          log::info("newton: iteration ", report.iterations, ", residual ", res, ", ell ", ell);
        break;
      }
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "line search failed at iteration " << report.iterations << " (no step size down to 2^-"
          << config.max_line_search << " kept every cell above eps0 while reducing the residual); "
          << degenerate_pair_hint(ev.diagram);
      throw fail(SolverError::Kind::LineSearch, msg.str());
    }
  }

  report.converged = true;
  report.wall_seconds = seconds_since(start);
  SolveResult result{std::move(psi), sites, std::move(ev.G), std::move(ev.diagram), std::move(report)};
  return result;
}

}  // namespace

SolveResult damped_newton(const SimplexSoup& soup, const SiteSet& sites, const SolverConfig& config) {
  const auto start = Clock::now();
  if (soup.empty()) throw ValidationError("empty soup");
  if (sites.size() == 0) throw ValidationError("no sites");
  if (!(config.eta > 0.0) || config.max_iterations == 0 || config.max_line_search <= 0 ||
      !(config.linear_tolerance > 0.0))
    throw ValidationError("solver configuration values must be positive");
  const double mu = total_mass(soup);
  if (std::abs(sites.total_mass() - mu) > 1e-9 * mu)
    throw ValidationError("target masses sum to " + std::to_string(sites.total_mass()) + " but the soup carries " +
                          std::to_string(mu));

  SolveReport report;
  report.eta = config.eta;
  report.warnings = soup.warnings();
  const auto connectivity = check_strong_connectedness(soup);
  if (!connectivity.connected) {
    const std::string w = "support is not strongly connected: " + std::to_string(connectivity.components.size()) +
                          " edge-connected components";
    log::warn(w);
    report.warnings.push_back(w);
  }

  SiteSet current = sites;
  for (int restart = 0;; ++restart) {
    try {
      return run_newton(soup, current, config, report, start);
    } catch (const DegeneracyError& e) {
      if (config.jitter == JitterPolicy::Off || restart >= config.max_restarts) throw;
      const double magnitude = 1e-6 * soup.scale();
      const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(restart);
      std::ostringstream w;
      w << "jitter applied (restart " << restart + 1 << ", magnitude " << magnitude << ", seed " << seed
        << ") after: " << e.what();
      log::warn(w.str());
      report.warnings.push_back(w.str());
      report.jitter_restarts = restart + 1;
      current = jitter_sites(sites, magnitude, seed);
    }
  }
}

double diameter(const SimplexSoup& soup, std::span<const Vec3> extra) {
  std::vector<Vec3> pts;
  pts.reserve(soup.vertex_count() + extra.size());
  for (const auto& f : soup.triangles())
    for (auto v : f) pts.push_back(soup.vertices()[v]);
  pts.insert(pts.end(), extra.begin(), extra.end());
  std::sort(pts.begin(), pts.end(), [](const Vec3& a, const Vec3& b) {
    return std::tie(a.x, a.y, a.z) < std::tie(b.x, b.y, b.z);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() > 20000) {
    // Too many points for the exact quadratic scan: bounding-box diagonal, an
    // upper bound.
    Aabb box;
    for (const auto& p : pts) box.extend(p);
    return box.diagonal();
  }
  double best = 0.0;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) best = std::max(best, squared_norm(pts[a] - pts[b]));
  return std::sqrt(best);
}

Certificate verify_solution(const SimplexSoup& soup, const SiteSet& sites, const Weights& weights, double eta,
                            double epsilon0, const DiagramOptions& options) {
  Certificate c;
  const auto ev = evaluate_G(soup, sites, weights, options);
  c.eta = eta;
  c.epsilon0 = epsilon0;
  c.residual = residual_norm(ev.G, sites.masses(), ResidualNorm::Euclidean);
  c.min_mass = *std::min_element(ev.G.begin(), ev.G.end());
  const auto [lo, hi] = std::minmax_element(weights.begin(), weights.end());
  c.weight_spread = *hi - *lo;
  const double diam = diameter(soup, sites.positions());
  c.spread_bound = diam * diam;
  c.residual_ok = c.residual < eta;
  c.mass_ok = c.min_mass >= epsilon0;
  c.spread_ok = c.weight_spread <= c.spread_bound;
  c.passed = c.residual_ok && c.mass_ok && c.spread_ok;
  return c;
}

}  // namespace sdot
