#include "sdot/geometry.hpp"

#include <algorithm>

#include "sdot/errors.hpp"

namespace sdot {

double Triangle::longest_edge() const {
  return std::sqrt(std::max({squared_norm(b - a), squared_norm(c - b), squared_norm(a - c)}));
}

ConvexPolygon3 ConvexPolygon3::from_triangle(const Triangle& t, std::uint32_t index) {
  ConvexPolygon3 p;
  p.vertices = {t.a, t.b, t.c};
  p.tags = {EdgeTag::mesh_edge(0), EdgeTag::mesh_edge(1), EdgeTag::mesh_edge(2)};
  p.triangle = index;
  return p;
}

AffineDensity::AffineDensity(const Triangle& t, std::array<double, 3> values)
    : values_(values), origin_(t.a), base_(values[0]) {
  const Vec3 e1 = t.b - t.a;
  const Vec3 e2 = t.c - t.a;
  const double g11 = dot(e1, e1), g12 = dot(e1, e2), g22 = dot(e2, e2);
  const double det = g11 * g22 - g12 * g12;
  if (!(det > 0.0)) return;  // degenerate triangle: leave the gradient at zero
  const double d1 = values[1] - values[0];
  const double d2 = values[2] - values[0];
  const double alpha = (g22 * d1 - g12 * d2) / det;
  const double beta = (g11 * d2 - g12 * d1) / det;
  gradient_ = alpha * e1 + beta * e2;
}

void clip_polygon_in_place(ConvexPolygon3& poly, const HalfspaceConstraint& h, double snap_tolerance,
                           ConvexPolygon3& out) {
  const std::size_t n = poly.vertices.size();
  if (n < 3) {
    poly.clear();
    return;
  }
  const double nn = squared_norm(h.normal);
  const double tol = snap_tolerance * std::sqrt(nn);

  // Fast path: polygon entirely inside (no vertex beyond the snapping band).
  bool all_strictly_in = true;
  bool all_out = true;
  for (const Vec3& v : poly.vertices) {
    const double d = h.signed_value(v);
    if (d >= -tol) all_strictly_in = false;
    if (d <= tol) all_out = false;
  }
  if (all_strictly_in) return;
  if (all_out) {
    poly.clear();
    return;
  }

  out.vertices.clear();
  out.tags.clear();
  out.triangle = poly.triangle;

  auto snapped = [&](const Vec3& v, double d) { return v - (d / nn) * h.normal; };

  for (std::size_t k = 0; k < n; ++k) {
    const Vec3& p = poly.vertices[k];
    const Vec3& q = poly.vertices[(k + 1) % n];
    const double dp = h.signed_value(p);
    const double dq = h.signed_value(q);
    const bool p_in = dp <= tol;
    const bool q_in = dq <= tol;
    const bool p_on = std::abs(dp) <= tol;
    const bool q_on = std::abs(dq) <= tol;
    const EdgeTag tag = poly.tags[k];

    if (p_in) {
      const Vec3 pv = p_on ? snapped(p, dp) : p;
      if (q_in) {
        out.vertices.push_back(pv);
        out.tags.push_back(tag);
      } else if (p_on) {
        out.vertices.push_back(pv);
        out.tags.push_back(h.tag);
      } else {
        const double s = dp / (dp - dq);
        out.vertices.push_back(pv);
        out.tags.push_back(tag);
        out.vertices.push_back(p + s * (q - p));
        out.tags.push_back(h.tag);
      }
    } else if (q_in && !q_on) {
      const double s = dp / (dp - dq);
      out.vertices.push_back(p + s * (q - p));
      out.tags.push_back(tag);
    }
  }

  // Collapse consecutive duplicates created by snapping; the surviving vertex
  // keeps the tag of its outgoing edge.
  const double merge2 = snap_tolerance * snap_tolerance;
  const std::size_t m = out.vertices.size();
  std::size_t w = 0;
  for (std::size_t k = 0; k < m; ++k) {
    if (squared_norm(out.vertices[k] - out.vertices[(k + 1) % m]) <= merge2) continue;
    out.vertices[w] = out.vertices[k];
    out.tags[w] = out.tags[k];
    ++w;
  }
  out.vertices.resize(w);
  out.tags.resize(w);

  std::swap(poly.vertices, out.vertices);
  std::swap(poly.tags, out.tags);
  if (poly.vertices.size() < 3 || polygon_area(poly) <= snap_tolerance * snap_tolerance) poly.clear();
}

ConvexPolygon3 clip_polygon(const ConvexPolygon3& poly, const HalfspaceConstraint& h,
                            double snap_tolerance) {
  ConvexPolygon3 result = poly;
  ConvexPolygon3 scratch;
  clip_polygon_in_place(result, h, snap_tolerance, scratch);
  return result;
}

double polygon_area(const ConvexPolygon3& poly) {
  const auto& v = poly.vertices;
  if (v.size() < 3) return 0.0;
  Vec3 s;
  for (std::size_t k = 1; k + 1 < v.size(); ++k) s += cross(v[k] - v[0], v[k + 1] - v[0]);
  return 0.5 * norm(s);
}

Vec3 unit_normal(const Triangle& t) {
  const Vec3 n = t.normal();
  const double len = norm(n);
  const double scale = t.longest_edge();
  if (!(0.5 * len > 1e-9 * scale * scale)) throw GeometryError("degenerate triangle");
  return n / len;
}

Vec3 tangent_projection(const Vec3& v, const Triangle& t) {
  const Vec3 n = unit_normal(t);
  return v - dot(v, n) * n;
}

namespace {

template <typename F>
void for_each_fan_triangle(const ConvexPolygon3& poly, F&& f) {
  const auto& v = poly.vertices;
  for (std::size_t k = 1; k + 1 < v.size(); ++k) {
    const double area = 0.5 * norm(cross(v[k] - v[0], v[k + 1] - v[0]));
    f(v[0], v[k], v[k + 1], area);
  }
}

}  // namespace

double integrate_affine_area(const ConvexPolygon3& poly, const AffineDensity& rho) {
  double sum = 0.0;
  for_each_fan_triangle(poly, [&](const Vec3& a, const Vec3& b, const Vec3& c, double area) {
    sum += area * rho((a + b + c) / 3.0);
  });
  return sum;
}

Vec3 integrate_first_moment(const ConvexPolygon3& poly, const AffineDensity& rho) {
  // For affine f, g on a triangle: ∫ f g = A/12 (Σ f_k g_k + Σ f_k Σ g_k).
  Vec3 sum;
  for_each_fan_triangle(poly, [&](const Vec3& a, const Vec3& b, const Vec3& c, double area) {
    const double ra = rho(a), rb = rho(b), rc = rho(c);
    const Vec3 m = ra * a + rb * b + rc * c + (ra + rb + rc) * (a + b + c);
    sum += (area / 12.0) * m;
  });
  return sum;
}

double integrate_affine_edge(const Vec3& a, const Vec3& b, const AffineDensity& rho) {
  return distance(a, b) * 0.5 * (rho(a) + rho(b));
}

double integrate_quadratic_cost(const ConvexPolygon3& poly, const AffineDensity& rho, const Vec3& y) {
  // Strang-Fix 4-point rule, exact for cubic polynomials.
  constexpr double w_center = -27.0 / 48.0;
  constexpr double w_side = 25.0 / 48.0;
  double sum = 0.0;
  for_each_fan_triangle(poly, [&](const Vec3& a, const Vec3& b, const Vec3& c, double area) {
    auto f = [&](const Vec3& x) { return squared_norm(x - y) * rho(x); };
    const double s = w_center * f((a + b + c) / 3.0) + w_side * (f(0.6 * a + 0.2 * b + 0.2 * c) +
                                                               f(0.2 * a + 0.6 * b + 0.2 * c) +
                                                               f(0.2 * a + 0.2 * b + 0.6 * c));
    sum += area * s;
  });
  return sum;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Triangle& t) {
  // Voronoi-region walk (Ericson, Real-Time Collision Detection 5.1.5).
  const Vec3& a = t.a;
  const Vec3& b = t.b;
  const Vec3& c = t.c;
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + (vb * denom) * ab + (vc * denom) * ac;
}

double point_triangle_distance(const Vec3& p, const Triangle& t) {
  return distance(p, closest_point_on_triangle(p, t));
}

void Aabb::extend(const Vec3& p) {
  lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
  hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
}

void Aabb::extend(const Aabb& b) {
  if (!b.valid()) return;
  extend(b.lo);
  extend(b.hi);
}

double Aabb::squared_distance(const Vec3& p) const {
  double d = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double v = p[k];
    const double l = lo[k], h = hi[k];
    if (v < l) d += (l - v) * (l - v);
    else if (v > h) d += (v - h) * (v - h);
  }
  return d;
}

}  // namespace sdot
