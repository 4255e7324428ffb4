#pragma once

// Small 3D kernel: vectors, half-spaces, convex polygons lying in a triangle,
// and exact quadrature of affine (and cubic) integrands over them.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sdot/errors.hpp"

namespace sdot {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr double operator[](int k) const { return k == 0 ? x : (k == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
constexpr double squared_norm(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }
inline bool is_finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

struct Triangle {
  Vec3 a, b, c;

  /// Unnormalized normal, |n| = 2 * area.
  Vec3 normal() const { return cross(b - a, c - a); }
  double area() const { return 0.5 * norm(normal()); }
  Vec3 centroid() const { return (a + b + c) / 3.0; }
  const Vec3& vertex(int k) const { return k == 0 ? a : (k == 1 ? b : c); }
  double longest_edge() const;
};

/// Where a polygon edge came from: a side of the parent triangle (index 0..2,
/// side k joins vertex k to vertex k+1) or the bisector against a site.
enum class ConstraintKind : std::uint8_t { MeshEdge, Bisector };

struct EdgeTag {
  ConstraintKind kind = ConstraintKind::MeshEdge;
  std::uint32_t index = 0;

  static constexpr EdgeTag mesh_edge(std::uint32_t side) { return {ConstraintKind::MeshEdge, side}; }
  static constexpr EdgeTag bisector(std::uint32_t site) { return {ConstraintKind::Bisector, site}; }
  constexpr bool is_bisector() const { return kind == ConstraintKind::Bisector; }

  friend constexpr bool operator==(const EdgeTag&, const EdgeTag&) = default;
};

/// The closed half-space { x : <x, normal> <= offset }.
struct HalfspaceConstraint {
  Vec3 normal;
  double offset = 0.0;
  EdgeTag tag;

  double signed_value(const Vec3& p) const { return dot(p, normal) - offset; }
  /// The complementary closed half-space, same tag.
  HalfspaceConstraint flipped() const { return {-normal, -offset, tag}; }
};

/// Convex polygon embedded in a mesh triangle. `tags[k]` describes the edge
/// from `vertices[k]` to `vertices[k + 1]` (cyclically). Vertices are ordered
/// counter-clockwise around the parent triangle normal.
struct ConvexPolygon3 {
  std::vector<Vec3> vertices;
  std::vector<EdgeTag> tags;
  std::uint32_t triangle = 0;

  bool empty() const { return vertices.size() < 3; }
  std::size_t size() const { return vertices.size(); }
  void clear() {
    vertices.clear();
    tags.clear();
  }

  static ConvexPolygon3 from_triangle(const Triangle& t, std::uint32_t index = 0);
};

/// Density that is affine on a triangle, given by its values at the three
/// vertices. Points off the supporting plane are evaluated at their
/// orthogonal projection.
class AffineDensity {
 public:
  AffineDensity() = default;
  AffineDensity(const Triangle& t, std::array<double, 3> values);

  double operator()(const Vec3& p) const { return base_ + dot(gradient_, p - origin_); }
  const std::array<double, 3>& values() const { return values_; }
  const Vec3& gradient() const { return gradient_; }
  bool is_constant() const { return values_[0] == values_[1] && values_[1] == values_[2]; }

 private:
  std::array<double, 3> values_{1.0, 1.0, 1.0};
  Vec3 origin_;
  Vec3 gradient_;
  double base_ = 1.0;
};

/// poly ∩ h. New edges on the cut plane carry h.tag. Vertices within
/// `snap_tolerance` (a distance) of the plane are treated as lying on it and
/// projected onto it. Results with fewer than three vertices or area at most
/// snap_tolerance² come back empty.
ConvexPolygon3 clip_polygon(const ConvexPolygon3& poly, const HalfspaceConstraint& h,
                            double snap_tolerance = 0.0);

/// In-place variant of clip_polygon reusing `scratch` for storage.
void clip_polygon_in_place(ConvexPolygon3& poly, const HalfspaceConstraint& h, double snap_tolerance,
                           ConvexPolygon3& scratch);

double polygon_area(const ConvexPolygon3& poly);

/// Unit normal of a triangle; throws GeometryError when degenerate.
Vec3 unit_normal(const Triangle& t);

/// Removes from v its component along the triangle normal.
Vec3 tangent_projection(const Vec3& v, const Triangle& t);

/// ∫_poly ρ dH². Fan triangulation, centroid rule on each fan triangle.
double integrate_affine_area(const ConvexPolygon3& poly, const AffineDensity& rho);

/// ∫_poly x ρ(x) dH² (exact for affine ρ).
Vec3 integrate_first_moment(const ConvexPolygon3& poly, const AffineDensity& rho);

/// ∫_[a,b] ρ dH¹ (trapezoid, exact for affine ρ).
double integrate_affine_edge(const Vec3& a, const Vec3& b, const AffineDensity& rho);

/// ∫_poly |x - y|² ρ(x) dH², degree-3 symmetric rule per fan triangle.
double integrate_quadratic_cost(const ConvexPolygon3& poly, const AffineDensity& rho, const Vec3& y);

Vec3 closest_point_on_triangle(const Vec3& p, const Triangle& t);
double point_triangle_distance(const Vec3& p, const Triangle& t);

/// Axis-aligned box.
struct Aabb {
  Vec3 lo{HUGE_VAL, HUGE_VAL, HUGE_VAL};
  Vec3 hi{-HUGE_VAL, -HUGE_VAL, -HUGE_VAL};

  void extend(const Vec3& p);
  void extend(const Aabb& b);
  bool valid() const { return lo.x <= hi.x; }
  Vec3 center() const { return (lo + hi) * 0.5; }
  double diagonal() const { return valid() ? norm(hi - lo) : 0.0; }
  double squared_distance(const Vec3& p) const;
};

}  // namespace sdot
