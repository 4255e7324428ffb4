#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sdot/geometry.hpp"

namespace sdot {

using TriangleIndices = std::array<std::uint32_t, 3>;

/// Bounding-volume hierarchy over the triangles of a soup, answering exact
/// nearest-triangle queries.
class TriangleBvh {
 public:
  struct Hit {
    double distance = HUGE_VAL;
    std::uint32_t triangle = 0;
    Vec3 point;
  };

  TriangleBvh() = default;
  explicit TriangleBvh(std::vector<Triangle> triangles);

  Hit closest(const Vec3& p) const;
  bool empty() const { return triangles_.empty(); }

 private:
  struct Node {
    Aabb box;
    std::uint32_t begin = 0;  // leaf: range in order_
    std::uint32_t end = 0;
    std::uint32_t left = 0;  // inner: child indices, right = left + 1 is not assumed
    std::uint32_t right = 0;
    bool leaf() const { return left == 0 && right == 0; }
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3>& centroids);

  std::vector<Triangle> triangles_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Triangle soup carrying a per-vertex density that is affine on each
/// triangle. Immutable once built; the constructor validates the input.
class SimplexSoup {
 public:
  SimplexSoup() = default;
  /// `density` empty means uniform density 1.
  SimplexSoup(std::vector<Vec3> vertices, std::vector<TriangleIndices> triangles,
              std::vector<double> density = {});

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t triangle_count() const { return triangles_.size(); }
  bool empty() const { return triangles_.empty(); }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<TriangleIndices>& triangles() const { return triangles_; }
  const std::vector<double>& density() const { return density_; }

  Triangle triangle(std::size_t t) const {
    const auto& f = triangles_[t];
    return {vertices_[f[0]], vertices_[f[1]], vertices_[f[2]]};
  }
  const AffineDensity& triangle_density(std::size_t t) const { return densities_[t]; }

  const Aabb& bounds() const { return bounds_; }
  /// Bounding-box diagonal; the length scale for every tolerance.
  double scale() const { return scale_; }
  /// Plane-snapping tolerance, 1e-9 × scale.
  double geometric_tolerance() const { return 1e-9 * scale_; }

  const TriangleBvh& bvh() const { return *bvh_; }
  /// Non-fatal remarks gathered during validation (zero densities...).
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Same geometry, density multiplied by `factor`.
  SimplexSoup with_scaled_density(double factor) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<TriangleIndices> triangles_;
  std::vector<double> density_;
  std::vector<AffineDensity> densities_;
  Aabb bounds_;
  double scale_ = 0.0;
  std::shared_ptr<const TriangleBvh> bvh_;
  std::vector<std::string> warnings_;
};

/// Finitely supported target measure: positions y_i and masses ν_i > 0.
class SiteSet {
 public:
  SiteSet() = default;
  /// Throws ValidationError on non-finite input, non-positive masses, or two
  /// sites closer than `min_separation`.
  SiteSet(std::vector<Vec3> positions, std::vector<double> masses, double min_separation = 0.0);

  /// Equal masses summing to `total`.
  static SiteSet uniform(std::vector<Vec3> positions, double total = 1.0, double min_separation = 0.0);

  std::size_t size() const { return positions_.size(); }
  const std::vector<Vec3>& positions() const { return positions_; }
  const std::vector<double>& masses() const { return masses_; }
  const Vec3& position(std::size_t i) const { return positions_[i]; }
  double mass(std::size_t i) const { return masses_[i]; }
  double total_mass() const;

  /// Masses rescaled so that they sum to `total`.
  SiteSet normalized(double total = 1.0) const;
  /// Same masses, new positions.
  SiteSet with_positions(std::vector<Vec3> positions, double min_separation = 0.0) const;

 private:
  std::vector<Vec3> positions_;
  std::vector<double> masses_;
};

using Weights = std::vector<double>;

double total_mass(const SimplexSoup& soup);

/// Rescales the density so that the total mass is 1.
SimplexSoup normalize(const SimplexSoup& soup);

struct ConnectivityReport {
  bool connected = true;
  /// Triangle indices of each edge-connected component, sorted.
  std::vector<std::vector<std::uint32_t>> components;
};

/// Components of the graph whose nodes are triangles and whose edges join
/// triangles sharing a full edge. Vertices are identified by position, so
/// duplicated vertices (discontinuous densities) still connect.
ConnectivityReport check_strong_connectedness(const SimplexSoup& soup);

/// Euclidean distance from p to the union of the soup triangles.
double distance_to_soup(const Vec3& p, const SimplexSoup& soup);

/// Indices of pairs of sites closer than `tolerance` (i < j).
std::vector<std::array<std::uint32_t, 2>> find_close_pairs(const std::vector<Vec3>& points, double tolerance);

}  // namespace sdot
