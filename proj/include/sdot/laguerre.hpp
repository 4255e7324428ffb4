#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sdot/errors.hpp"
#include "sdot/geometry.hpp"
#include "sdot/measures.hpp"

namespace sdot {

struct DiagramOptions {
  /// Worker threads; 0 means one per hardware core.
  unsigned threads = 0;
  /// With at most this many sites every site is a candidate on every
  /// triangle; above it candidates come from the lifted-site index.
  std::size_t brute_force_limit = 64;
  /// Raise DegeneracyError on non-generic interfaces.
  bool detect_degeneracy = true;
};

/// Half-space where site i beats site j:
/// |x - y_i|² + ψ_i <= |x - y_j|² + ψ_j  <=>  <x, y_j - y_i> <= (|y_j|² - |y_i|² + ψ_j - ψ_i) / 2.
/// Tagged bisector(j). Throws ValidationError when y_i == y_j.
HalfspaceConstraint bisector_constraint(const SiteSet& sites, std::uint32_t i, std::uint32_t j,
                                        const Weights& weights);

/// Laguerre cell of `site` restricted to one triangle.
struct CellPiece {
  std::uint32_t site = 0;
  ConvexPolygon3 polygon;  // polygon.triangle is the triangle index
  double mass = 0.0;
  Vec3 moment;  // ∫ x ρ
  double cost = 0.0;  // ∫ |x - y_site|² ρ
};

/// Common boundary of cells i < j inside one triangle.
struct InterfaceRecord {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  std::uint32_t triangle = 0;
  Vec3 a, b;  // segment endpoints
  double integral = 0.0;  // ∫_[a,b] ρ dH¹
  double projected_gap = 0.0;  // |Π(y_i - y_j)| on the triangle's tangent plane
};

struct RestrictedLaguerreDiagram {
  std::size_t site_count = 0;
  std::size_t triangle_count = 0;
  Weights weights;

  /// Grouped by triangle (ascending), then by site (ascending).
  std::vector<CellPiece> pieces;
  /// pieces of triangle t are [piece_offsets[t], piece_offsets[t + 1]).
  std::vector<std::size_t> piece_offsets;
  /// Ordered by triangle, then by (i, j).
  std::vector<InterfaceRecord> interfaces;

  std::vector<double> masses;  // G_i
  std::vector<Vec3> moments;
  std::vector<double> costs;

  std::span<const CellPiece> pieces_of_triangle(std::size_t t) const {
    return {pieces.data() + piece_offsets[t], pieces.data() + piece_offsets[t + 1]};
  }
  double total_mass() const;
};

RestrictedLaguerreDiagram compute_diagram(const SimplexSoup& soup, const SiteSet& sites, const Weights& weights,
                                          const DiagramOptions& options = {});

struct JacobianEntry {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double value = 0.0;
};

/// Off-diagonal entries ∂G_i/∂ψ_j (i < j), summing integral / (2 |Π(y_i - y_j)|)
/// over the triangles carrying the interface. Sorted by (i, j).
std::vector<JacobianEntry> interface_jacobian_entries(const RestrictedLaguerreDiagram& diagram);

/// Density-weighted centroids of the cells. Throws Error naming the first
/// massless site.
std::vector<Vec3> cell_centroids(const RestrictedLaguerreDiagram& diagram);

/// |x - y_i|² + ψ_i.
inline double power_distance(const Vec3& x, const Vec3& y, double psi) { return squared_norm(x - y) + psi; }

}  // namespace sdot
