#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sdot/solver.hpp"
#include "sdot/transport.hpp"

namespace sdot {

/// x ↦ R x + t, R stored row-major.
struct RigidTransform {
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};
  Vec3 translation;

  static RigidTransform identity() { return {}; }
  /// Rotation by `angle` radians about `axis` (normalized here), then translation.
  static RigidTransform from_axis_angle(const Vec3& axis, double angle, const Vec3& translation = {});

  Vec3 rotate(const Vec3& p) const;
  Vec3 operator()(const Vec3& p) const { return rotate(p) + translation; }
  /// (this ∘ other)(x) = this(other(x)).
  RigidTransform compose(const RigidTransform& other) const;
  RigidTransform inverse() const;
  /// Rotation angle in [0, π].
  double angle() const;
  double determinant() const;
  /// max |RᵀR - I|.
  double orthogonality_error() const;
};

/// Weighted least-squares rigid motion taking `from` onto `to`. Throws
/// RegistrationError when the targets are collinear.
RigidTransform fit_rigid_transform(const std::vector<Vec3>& from, const std::vector<Vec3>& to,
                                   const std::vector<double>& weights = {});

struct QuantizeRound {
  double cost = 0.0;
  double residual = 0.0;
  std::size_t newton_iterations = 0;
  /// Largest site displacement when moving to the centroids.
  double displacement = 0.0;
};

struct QuantizeResult {
  SiteSet sites;
  SiteSet initial_sites;
  std::vector<QuantizeRound> history;
  std::vector<SolveReport> reports;
  double initial_cost = 0.0;
  double final_cost = 0.0;
};

/// Lloyd-type relaxation: solve, move each site to its cell centroid, repeat.
/// The starting points are the soup vertices when n matches their count,
/// otherwise area-weighted random surface samples drawn with config.seed.
QuantizeResult quantize(const SimplexSoup& soup, std::size_t n, std::size_t outer_iters,
                        const SolverConfig& config = {});

/// Same relaxation from given starting sites, masses rescaled to μ(K).
QuantizeResult quantize_from(const SimplexSoup& soup, const SiteSet& initial, std::size_t outer_iters,
                             const SolverConfig& config = {});

/// n distinct area-weighted random points on the soup.
std::vector<Vec3> sample_surface(const SimplexSoup& soup, std::size_t n, std::uint64_t seed);

struct DualMesh {
  std::vector<Vec3> vertices;  // cell centroids
  std::vector<std::array<std::uint32_t, 3>> faces;
  /// Diagram vertex where the three cells of each face meet.
  std::vector<Vec3> provenance;
  std::vector<std::uint32_t> provenance_triangle;
  std::vector<std::string> warnings;

  /// V - E + F with E counted from the faces.
  long euler_characteristic() const;
};

/// Dual of a computed diagram, one face per triple point.
DualMesh dual_mesh(const SimplexSoup& soup, const RestrictedLaguerreDiagram& diagram);

struct RemeshResult {
  DualMesh mesh;
  SolveResult solve;
};

/// Transports μ onto the uniform measure on the soup vertices and returns the
/// dual of the final diagram.
RemeshResult remesh(const SimplexSoup& soup, const SolverConfig& config = {});

struct RegistrationResult {
  RigidTransform transform;  // maps the input cloud onto the surface
  SiteSet aligned;
  /// RMS distance between sites and their cell centroids, per iteration.
  std::vector<double> rms;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<SolveReport> reports;
};

/// OT-ICP: cell centroids replace nearest neighbours as correspondences.
RegistrationResult register_point_cloud(const SimplexSoup& soup, const SiteSet& cloud, std::size_t max_outer,
                                        const SolverConfig& config = {});

}  // namespace sdot
