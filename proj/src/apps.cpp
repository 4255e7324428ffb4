#include "sdot/apps.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "sdot/log.hpp"

namespace sdot {

// ---------------------------------------------------------------- rigid motions

namespace {

using Mat3 = Eigen::Matrix3d;

Mat3 to_eigen(const std::array<double, 9>& r) {
  Mat3 m;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) m(a, b) = r[3 * a + b];
  return m;
}

std::array<double, 9> from_eigen(const Mat3& m) {
  std::array<double, 9> r{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) r[3 * a + b] = m(a, b);
  return r;
}

Eigen::Vector3d to_eigen(const Vec3& v) { return {v.x, v.y, v.z}; }

}  // namespace

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis, double angle, const Vec3& translation) {
  const double len = norm(axis);
  if (!(len > 0.0)) throw ValidationError("rotation axis must be non-zero");
  const Eigen::AngleAxisd aa(angle, to_eigen(axis / len));
  RigidTransform t;
  t.rotation = from_eigen(aa.toRotationMatrix());
  t.translation = translation;
  return t;
}

Vec3 RigidTransform::rotate(const Vec3& p) const {
  const auto& r = rotation;
  return {r[0] * p.x + r[1] * p.y + r[2] * p.z, r[3] * p.x + r[4] * p.y + r[5] * p.z,
          r[6] * p.x + r[7] * p.y + r[8] * p.z};
}

RigidTransform RigidTransform::compose(const RigidTransform& other) const {
  RigidTransform out;
  out.rotation = from_eigen(to_eigen(rotation) * to_eigen(other.rotation));
  out.translation = rotate(other.translation) + translation;
  return out;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform out;
  out.rotation = from_eigen(to_eigen(rotation).transpose());
  out.translation = -out.rotate(translation);
  return out;
}

double RigidTransform::angle() const {
  const double c = 0.5 * (rotation[0] + rotation[4] + rotation[8] - 1.0);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

double RigidTransform::determinant() const { return to_eigen(rotation).determinant(); }

double RigidTransform::orthogonality_error() const {
  const Mat3 r = to_eigen(rotation);
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

RigidTransform fit_rigid_transform(const std::vector<Vec3>& from, const std::vector<Vec3>& to,
                                   const std::vector<double>& weights) {
  if (from.size() != to.size() || from.empty()) throw ValidationError("rigid fit needs matching non-empty sets");
  if (!weights.empty() && weights.size() != from.size()) throw ValidationError("rigid fit weight count mismatch");
  auto w = [&](std::size_t k) { return weights.empty() ? 1.0 : weights[k]; };
  double wsum = 0.0;
  Vec3 cf, ct;
  for (std::size_t k = 0; k < from.size(); ++k) {
    wsum += w(k);
    cf += w(k) * from[k];
    ct += w(k) * to[k];
  }
  if (!(wsum > 0.0)) throw ValidationError("rigid fit weights must have positive sum");
  cf = cf / wsum;
  ct = ct / wsum;

  Mat3 cov = Mat3::Zero();
  Mat3 spread = Mat3::Zero();
  for (std::size_t k = 0; k < from.size(); ++k) {
    const Eigen::Vector3d p = to_eigen(from[k] - cf), q = to_eigen(to[k] - ct);
    cov += w(k) * q * p.transpose();
    spread += w(k) * q * q.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(spread);
  const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
  if (!(ev(1) > 1e-12 * ev(2))) throw RegistrationError("degenerate cross-covariance: target points are collinear");

  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Mat3 r = svd.matrixU() * d * svd.matrixV().transpose();

  RigidTransform out;
  out.rotation = from_eigen(r);
  out.translation = ct - out.rotate(cf);
  return out;
}

// ---------------------------------------------------------------- quantization

std::vector<Vec3> sample_surface(const SimplexSoup& soup, std::size_t n, std::uint64_t seed) {
  std::vector<double> areas(soup.triangle_count());
  for (std::size_t t = 0; t < areas.size(); ++t) areas[t] = soup.triangle(t).area();
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(areas.begin(), areas.end());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> out;
  out.reserve(n);
  const double tol = 1e3 * soup.geometric_tolerance();
  while (out.size() < n) {
    const Triangle tri = soup.triangle(pick(rng));
    double a = u(rng), b = u(rng);
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    const Vec3 p = tri.a + a * (tri.b - tri.a) + b * (tri.c - tri.a);
    const bool clash = std::any_of(out.begin(), out.end(), [&](const Vec3& q) { return distance(p, q) <= tol; });
    if (!clash) out.push_back(p);
  }
  return out;
}

namespace {

SolverError annotate(const SolverError& e, const std::string& where) {
  return SolverError(e.kind(), where + ": " + e.what(), e.report());
}

}  // namespace

QuantizeResult quantize(const SimplexSoup& soup, std::size_t n, std::size_t outer_iters, const SolverConfig& config) {
  if (n == 0) throw ValidationError("quantize needs at least one point");
  std::vector<Vec3> start;
  if (n == soup.vertex_count()) start = soup.vertices();
  else start = sample_surface(soup, n, config.seed);
  return quantize_from(soup, SiteSet::uniform(std::move(start), total_mass(soup)), outer_iters, config);
}

QuantizeResult quantize_from(const SimplexSoup& soup, const SiteSet& initial, std::size_t outer_iters,
                             const SolverConfig& config) {
  if (outer_iters == 0) throw ValidationError("quantize needs at least one iteration");
  const std::size_t n = initial.size();
  QuantizeResult result;
  result.initial_sites = initial.normalized(total_mass(soup));
  SiteSet current = result.initial_sites;
  for (std::size_t it = 0; it < outer_iters; ++it) {
    SolveResult solved;
    try {
      solved = damped_newton(soup, current, config);
    } catch (const SolverError& e) {
      throw annotate(e, "quantize iteration " + std::to_string(it));
    }
    const auto summary = transport_cost(solved.diagram, solved.sites);
    const auto centroids = cell_centroids(solved.diagram);
    QuantizeRound round;
    round.cost = summary.total_cost;
    round.residual = solved.report.residuals.back();
    round.newton_iterations = solved.report.iterations;
    for (std::size_t i = 0; i < n; ++i)
      round.displacement = std::max(round.displacement, distance(centroids[i], current.position(i)));
    result.history.push_back(round);
    result.reports.push_back(std::move(solved.report));
    log::info("quantize: iteration ", it, ", cost ", round.cost, ", displacement ", round.displacement);
    current = current.with_positions(centroids);
    if (round.displacement < 1e-8 * soup.scale()) break;
  }
  result.sites = current;
  result.initial_cost = result.history.front().cost;
  result.final_cost = result.history.back().cost;
  return result;
}

// ---------------------------------------------------------------- remeshing

long DualMesh::euler_characteristic() const {
  std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (const auto& f : faces)
    for (int k = 0; k < 3; ++k) edges.insert(std::minmax(f[k], f[(k + 1) % 3]));
  return static_cast<long>(vertices.size()) - static_cast<long>(edges.size()) + static_cast<long>(faces.size());
}

namespace {

struct TriplePoint {
  Vec3 position;
  std::array<std::uint32_t, 3> cells;  // counter-clockwise around the point
  std::uint32_t triangle;
};

}  // namespace

DualMesh dual_mesh(const SimplexSoup& soup, const RestrictedLaguerreDiagram& diagram) {
  DualMesh mesh;
  mesh.vertices = cell_centroids(diagram);

  std::set<std::pair<std::uint32_t, std::uint32_t>> adjacent;
  for (const auto& rec : diagram.interfaces)
    if (rec.integral > 0.0) adjacent.insert({rec.i, rec.j});
  auto backed = [&](std::uint32_t a, std::uint32_t b) { return adjacent.count(std::minmax(a, b)) > 0; };

  // A polygon vertex of cell i entered along the bisector with a and left
  // along the bisector with b is where i, a, b meet; walking counter-clockwise
  // around it one meets i, then a, then b.
  const double cluster_tol = 1e-7 * soup.scale();
  std::set<std::array<std::uint32_t, 3>> seen;
  for (std::size_t t = 0; t < diagram.triangle_count; ++t) {
    std::vector<TriplePoint> points;
    for (const auto& piece : diagram.pieces_of_triangle(t)) {
      const auto& poly = piece.polygon;
      const std::size_t m = poly.size();
      for (std::size_t k = 0; k < m; ++k) {
        const EdgeTag in = poly.tags[(k + m - 1) % m], out = poly.tags[k];
        if (!in.is_bisector() || !out.is_bisector() || in.index == out.index) continue;
        points.push_back({poly.vertices[k], {piece.site, in.index, out.index}, static_cast<std::uint32_t>(t)});
      }
    }
    // Group coincident points; more than three cells in a group is a
    // non-generic vertex and gets no face.
    std::vector<int> group(points.size(), -1);
    int groups = 0;
    for (std::size_t p = 0; p < points.size(); ++p) {
      if (group[p] >= 0) continue;
      group[p] = groups;
      for (std::size_t q = p + 1; q < points.size(); ++q)
        if (group[q] < 0 && distance(points[p].position, points[q].position) <= cluster_tol) group[q] = groups;
      ++groups;
    }
    for (int g = 0; g < groups; ++g) {
      std::set<std::uint32_t> cells;
      const TriplePoint* first = nullptr;
      for (std::size_t p = 0; p < points.size(); ++p)
        if (group[p] == g) {
          cells.insert(points[p].cells.begin(), points[p].cells.end());
          if (!first) first = &points[p];
        }
      if (cells.size() > 3) {
        std::ostringstream w;
        w << cells.size() << " cells meet at one point on triangle " << t << "; no dual face emitted there";
        log::warn(w.str());
        mesh.warnings.push_back(w.str());
        continue;
      }
      auto key = first->cells;
      std::sort(key.begin(), key.end());
      if (!seen.insert(key).second) continue;
      const auto [i, a, b] = first->cells;
      if (!backed(i, a) || !backed(a, b) || !backed(i, b)) {
        std::ostringstream w;
        w << "triple point of cells " << i << ", " << a << ", " << b << " lacks a positive interface; face skipped";
        log::warn(w.str());
        mesh.warnings.push_back(w.str());
        continue;
      }
      mesh.faces.push_back(first->cells);
      mesh.provenance.push_back(first->position);
      mesh.provenance_triangle.push_back(first->triangle);
    }
  }
  return mesh;
}

RemeshResult remesh(const SimplexSoup& soup, const SolverConfig& config) {
  std::vector<Vec3> sites = soup.vertices();
  std::sort(sites.begin(), sites.end(),
            [](const Vec3& a, const Vec3& b) { return std::tie(a.x, a.y, a.z) < std::tie(b.x, b.y, b.z); });
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  RemeshResult result;
  result.solve = damped_newton(soup, SiteSet::uniform(std::move(sites), total_mass(soup)), config);
  result.mesh = dual_mesh(soup, result.solve.diagram);
  return result;
}

// ---------------------------------------------------------------- OT-ICP

RegistrationResult register_point_cloud(const SimplexSoup& soup, const SiteSet& cloud, std::size_t max_outer,
                                        const SolverConfig& config) {
  if (max_outer == 0) throw ValidationError("registration needs at least one outer iteration");
  RegistrationResult result;
  SiteSet current = cloud.normalized(total_mass(soup));
  for (std::size_t it = 0; it < max_outer; ++it) {
    SolveResult solved;
    try {
      solved = damped_newton(soup, current, config);
    } catch (const SolverError& e) {
      throw annotate(e, "registration iteration " + std::to_string(it));
    }
    const auto centroids = cell_centroids(solved.diagram);
    double sq = 0.0;
    for (std::size_t i = 0; i < current.size(); ++i) sq += squared_norm(current.position(i) - centroids[i]);
    result.rms.push_back(std::sqrt(sq / static_cast<double>(current.size())));
    result.reports.push_back(std::move(solved.report));

    const RigidTransform step = fit_rigid_transform(current.positions(), centroids, current.masses());
    std::vector<Vec3> moved(current.size());
    for (std::size_t i = 0; i < moved.size(); ++i) moved[i] = step(current.position(i));
    current = current.with_positions(std::move(moved));
    result.transform = step.compose(result.transform);
    result.iterations = it + 1;
    const double change = step.angle() + norm(step.translation) / soup.scale();
    log::info("register: iteration ", it, ", rms ", result.rms.back(), ", change ", change);
    if (change < 1e-6) {
      result.converged = true;
      break;
    }
  }
  result.aligned = current;
  return result;
}

}  // namespace sdot
