#include "sdot/laguerre.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <optional>
#include <tuple>
#include <sstream>

#include "parallel.hpp"

namespace sdot {

HalfspaceConstraint bisector_constraint(const SiteSet& sites, std::uint32_t i, std::uint32_t j,
                                        const Weights& weights) {
  const Vec3& yi = sites.position(i);
  const Vec3& yj = sites.position(j);
  if (i == j || yi == yj)
    throw ValidationError("bisector of coincident sites " + std::to_string(i) + " and " + std::to_string(j));
  const double offset = 0.5 * (squared_norm(yj) - squared_norm(yi) + (weights[j] - weights[i]));
  return {yj - yi, offset, EdgeTag::bisector(j)};
}

double RestrictedLaguerreDiagram::total_mass() const {
  double s = 0.0;
  for (double m : masses) s += m;
  return s;
}

namespace {

// Power distance |x - y|² + ψ is the squared Euclidean distance between
// (x, 0) and the lifted site (y, sqrt(ψ - ψ_min)), up to the constant ψ_min.
class LiftedSiteIndex {
 public:
  using Point4 = std::array<double, 4>;

  LiftedSiteIndex(const SiteSet& sites, const Weights& weights) {
    const std::size_t n = sites.size();
    psi_min_ = *std::min_element(weights.begin(), weights.end());
    points_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& y = sites.position(i);
      points_[i] = {y.x, y.y, y.z, std::sqrt(std::max(0.0, weights[i] - psi_min_))};
    }
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0u);
    axis_.assign(n, 0);
    build(0, n);
  }

  std::uint32_t nearest(const Point4& q) const {
    std::uint32_t best = order_.empty() ? 0 : order_[0];
    double best2 = HUGE_VAL;
    nearest(0, order_.size(), q, best, best2);
    return best;
  }

  void within(const Point4& q, double radius, std::vector<std::uint32_t>& out) const {
    within(0, order_.size(), q, radius * radius, out);
  }

  const Point4& point(std::uint32_t i) const { return points_[i]; }

  static double squared_distance(const Point4& a, const Point4& b) {
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return s;
  }

 private:
  void build(std::size_t b, std::size_t e) {
    if (e - b <= 1) return;
    std::array<double, 4> lo, hi;
    lo.fill(HUGE_VAL);
    hi.fill(-HUGE_VAL);
    for (std::size_t k = b; k < e; ++k)
      for (int d = 0; d < 4; ++d) {
        lo[d] = std::min(lo[d], points_[order_[k]][d]);
        hi[d] = std::max(hi[d], points_[order_[k]][d]);
      }
    int axis = 0;
    for (int d = 1; d < 4; ++d)
      if (hi[d] - lo[d] > hi[axis] - lo[axis]) axis = d;
    const std::size_t mid = (b + e) / 2;
    std::nth_element(order_.begin() + b, order_.begin() + mid, order_.begin() + e,
                     [&](std::uint32_t l, std::uint32_t r) {
                       if (points_[l][axis] != points_[r][axis]) return points_[l][axis] < points_[r][axis];
                       return l < r;
                     });
    axis_[mid] = static_cast<std::uint8_t>(axis);
    build(b, mid);
    build(mid + 1, e);
  }

  void nearest(std::size_t b, std::size_t e, const Point4& q, std::uint32_t& best, double& best2) const {
    if (b >= e) return;
    const std::size_t mid = (b + e) / 2;
    const std::uint32_t id = order_[mid];
    const double d2 = squared_distance(points_[id], q);
    if (d2 < best2 || (d2 == best2 && id < best)) {
      best2 = d2;
      best = id;
    }
    const int axis = axis_[mid];
    const double diff = q[axis] - points_[id][axis];
    if (diff < 0.0) {
      nearest(b, mid, q, best, best2);
      if (diff * diff <= best2) nearest(mid + 1, e, q, best, best2);
    } else {
      nearest(mid + 1, e, q, best, best2);
      if (diff * diff <= best2) nearest(b, mid, q, best, best2);
    }
  }

  void within(std::size_t b, std::size_t e, const Point4& q, double r2, std::vector<std::uint32_t>& out) const {
    if (b >= e) return;
    const std::size_t mid = (b + e) / 2;
    const std::uint32_t id = order_[mid];
    if (squared_distance(points_[id], q) <= r2) out.push_back(id);
    const int axis = axis_[mid];
    const double diff = q[axis] - points_[id][axis];
    if (diff <= 0.0 || diff * diff <= r2) within(b, mid, q, r2, out);
    if (diff >= 0.0 || diff * diff <= r2) within(mid + 1, e, q, r2, out);
  }

  double psi_min_ = 0.0;
  std::vector<Point4> points_;
  std::vector<std::uint32_t> order_;
  std::vector<std::uint8_t> axis_;
};

struct TriangleOutput {
  std::vector<CellPiece> pieces;
  std::vector<InterfaceRecord> interfaces;
  std::vector<DegeneratePair> degenerate;
};

struct Scratch {
  std::vector<std::uint32_t> candidates;
  std::vector<std::pair<double, std::uint32_t>> keyed;
  std::vector<Vec3> local_sites;
  std::vector<double> local_sq;
  ConvexPolygon3 poly;
  ConvexPolygon3 buffer;
};

class DiagramBuilder {
 public:
  DiagramBuilder(const SimplexSoup& soup, const SiteSet& sites, const Weights& weights,
                 const DiagramOptions& options)
      : soup_(soup), sites_(sites), weights_(weights), options_(options),
        eps_(soup.geometric_tolerance()), eps_proj_(1e-7 * soup.scale()),
        min_edge_(1e3 * soup.geometric_tolerance()) {
    if (sites.size() > options.brute_force_limit) index_.emplace(sites, weights);
  }

  void run(std::uint32_t t, Scratch& s, TriangleOutput& out) const {
    const Triangle global = soup_.triangle(t);
    const Vec3 origin = global.centroid();
    const Triangle tri{global.a - origin, global.b - origin, global.c - origin};
    const Vec3 unit_n = tri.normal() / norm(tri.normal());
    const AffineDensity& rho = soup_.triangle_density(t);

    collect_candidates(tri, origin, s);

    // Local coordinates keep the bisector offsets well conditioned; strongest
    // competitors (lowest power at the centroid) come first so that losing
    // cells empty out after a few clips.
    const std::size_t nc = s.candidates.size();
    s.keyed.resize(nc);
    s.local_sites.resize(nc);
    s.local_sq.resize(nc);
    for (std::size_t k = 0; k < nc; ++k) {
      const std::uint32_t id = s.candidates[k];
      const Vec3 y = sites_.position(id) - origin;
      s.keyed[k] = {squared_norm(y) + weights_[id], id};
    }
    std::sort(s.keyed.begin(), s.keyed.end());
    for (std::size_t k = 0; k < nc; ++k) {
      s.candidates[k] = s.keyed[k].second;
      s.local_sites[k] = sites_.position(s.candidates[k]) - origin;
      s.local_sq[k] = squared_norm(s.local_sites[k]);
    }

    auto bisector = [&](std::size_t a, std::size_t b) {
      const std::uint32_t i = s.candidates[a], j = s.candidates[b];
      return HalfspaceConstraint{s.local_sites[b] - s.local_sites[a],
                                 0.5 * (s.local_sq[b] - s.local_sq[a] + (weights_[j] - weights_[i])),
                                 EdgeTag::bisector(j)};
    };

    for (std::size_t a = 0; a < nc; ++a) {
      const std::uint32_t i = s.candidates[a];
      s.poly = ConvexPolygon3::from_triangle(tri, t);
      for (std::size_t b = 0; b < nc && !s.poly.empty(); ++b) {
        if (b == a) continue;
        const HalfspaceConstraint h = bisector(a, b);
        if (contains_triangle(h, tri)) {
          // The bisector is the triangle's own plane: i and j tie everywhere
          // on it. The lower index keeps the triangle, as in transport_map_eval.
          const std::uint32_t j = s.candidates[b];
          if (options_.detect_degeneracy) out.degenerate.push_back({std::min(i, j), std::max(i, j), t});
          if (i > j) s.poly.clear();
          continue;
        }
        clip_polygon_in_place(s.poly, h, eps_, s.buffer);
      }
      if (s.poly.empty()) continue;

      if (options_.detect_degeneracy) check_coincidences(a, s, bisector, t, out);

      CellPiece piece;
      piece.site = i;
      piece.polygon = s.poly;
      for (Vec3& v : piece.polygon.vertices) v += origin;
      piece.mass = integrate_affine_area(piece.polygon, rho);
      piece.moment = integrate_first_moment(piece.polygon, rho);
      piece.cost = integrate_quadratic_cost(piece.polygon, rho, sites_.position(i));

      const auto& verts = piece.polygon.vertices;
      for (std::size_t k = 0; k < verts.size(); ++k) {
        const EdgeTag tag = piece.polygon.tags[k];
        if (!tag.is_bisector() || tag.index <= i) continue;
        const Vec3& p = verts[k];
        const Vec3& q = verts[(k + 1) % verts.size()];
        if (p == q) continue;
        InterfaceRecord rec;
        rec.i = i;
        rec.j = tag.index;
        rec.triangle = t;
        rec.a = p;
        rec.b = q;
        rec.integral = integrate_affine_edge(p, q, rho);
        const Vec3 d = sites_.position(rec.i) - sites_.position(rec.j);
        rec.projected_gap = norm(d - dot(d, unit_n) * unit_n);
        if (options_.detect_degeneracy && rec.projected_gap <= eps_proj_ && rec.integral > 0.0)
          out.degenerate.push_back({rec.i, rec.j, t});
        out.interfaces.push_back(rec);
      }
      out.pieces.push_back(std::move(piece));
    }

    std::sort(out.pieces.begin(), out.pieces.end(),
              [](const CellPiece& l, const CellPiece& r) { return l.site < r.site; });
    std::sort(out.interfaces.begin(), out.interfaces.end(), [](const InterfaceRecord& l, const InterfaceRecord& r) {
      return std::tie(l.i, l.j) < std::tie(r.i, r.j);
    });
  }

 private:
  bool contains_triangle(const HalfspaceConstraint& h, const Triangle& tri) const {
    const double tol = eps_ * norm(h.normal);
    for (int k = 0; k < 3; ++k)
      if (std::abs(h.signed_value(tri.vertex(k))) > tol) return false;
    return true;
  }

  void collect_candidates(const Triangle& tri, const Vec3& origin, Scratch& s) const {
    s.candidates.clear();
    if (!index_) {
      s.candidates.resize(sites_.size());
      std::iota(s.candidates.begin(), s.candidates.end(), 0u);
      return;
    }
    // Any site j0 bounds min_i pow_i on the triangle by max over the vertices
    // of pow_j0 (convex). A site owning some x must be within that bound of
    // (x, 0) in the lifted space, hence within r + sqrt(bound) of (origin, 0).
    const LiftedSiteIndex::Point4 q{origin.x, origin.y, origin.z, 0.0};
    const std::uint32_t j0 = index_->nearest(q);
    double r = 0.0, upper = 0.0;
    for (int k = 0; k < 3; ++k) {
      const Vec3& v = tri.vertex(k);
      r = std::max(r, norm(v));
      const Vec3 g = v + origin;
      upper = std::max(upper, LiftedSiteIndex::squared_distance({g.x, g.y, g.z, 0.0}, index_->point(j0)));
    }
    const double radius = (r + std::sqrt(upper)) * (1.0 + 1e-12) + eps_;
    index_->within(q, radius, s.candidates);
    std::sort(s.candidates.begin(), s.candidates.end());
  }

  // An interface edge must not lie on a third bisector: three cells would then
  // share a segment and G fails to be differentiable there.
  template <typename Bisector>
  void check_coincidences(std::size_t a, const Scratch& s, const Bisector& bisector, std::uint32_t t,
                          TriangleOutput& out) const {
    const std::uint32_t i = s.candidates[a];
    const auto& verts = s.poly.vertices;
    const std::size_t nc = s.candidates.size();
    for (std::size_t k = 0; k < verts.size(); ++k) {
      const Vec3& p = verts[k];
      const Vec3& q = verts[(k + 1) % verts.size()];
      if (distance(p, q) <= min_edge_) continue;
      const EdgeTag tag = s.poly.tags[k];
      if (!tag.is_bisector()) continue;
      for (std::size_t b = 0; b < nc; ++b) {
        const std::uint32_t m = s.candidates[b];
        if (b == a || tag.index == m) continue;
        const HalfspaceConstraint h = bisector(a, b);
        const double len = norm(h.normal);
        const double tol = 4.0 * eps_ * len;
        if (std::abs(h.signed_value(p)) <= tol && std::abs(h.signed_value(q)) <= tol) {
          out.degenerate.push_back({std::min(i, m), std::max(i, m), t});
          out.degenerate.push_back({std::min(i, tag.index), std::max(i, tag.index), t});
        }
      }
    }
  }

  const SimplexSoup& soup_;
  const SiteSet& sites_;
  const Weights& weights_;
  const DiagramOptions& options_;
  double eps_;
  double eps_proj_;
  double min_edge_;
  std::optional<LiftedSiteIndex> index_;
};

}  // namespace

RestrictedLaguerreDiagram compute_diagram(const SimplexSoup& soup, const SiteSet& sites, const Weights& weights,
                                          const DiagramOptions& options) {
  if (weights.size() != sites.size())
    throw ValidationError("weight vector has " + std::to_string(weights.size()) + " entries for " +
                          std::to_string(sites.size()) + " sites");
  if (sites.size() == 0) throw ValidationError("no sites");
  for (double w : weights)
    if (!std::isfinite(w)) throw ValidationError("non-finite weight");

  const std::size_t nt = soup.triangle_count();
  const DiagramBuilder builder(soup, sites, weights, options);
  std::vector<TriangleOutput> outputs(nt);
  const unsigned threads = detail::resolve_threads(options.threads);
  std::vector<Scratch> scratch(threads);
  detail::parallel_for(nt, threads, [&](std::size_t t, unsigned worker) {
    builder.run(static_cast<std::uint32_t>(t), scratch[worker], outputs[t]);
  });

  RestrictedLaguerreDiagram d;
  d.site_count = sites.size();
  d.triangle_count = nt;
  d.weights = weights;
  d.masses.assign(sites.size(), 0.0);
  d.moments.assign(sites.size(), Vec3{});
  d.costs.assign(sites.size(), 0.0);
  d.piece_offsets.reserve(nt + 1);
  std::vector<DegeneratePair> degenerate;
  for (std::size_t t = 0; t < nt; ++t) {
    d.piece_offsets.push_back(d.pieces.size());
    for (CellPiece& p : outputs[t].pieces) {
      d.masses[p.site] += p.mass;
      d.moments[p.site] += p.moment;
      d.costs[p.site] += p.cost;
      d.pieces.push_back(std::move(p));
    }
    d.interfaces.insert(d.interfaces.end(), outputs[t].interfaces.begin(), outputs[t].interfaces.end());
    degenerate.insert(degenerate.end(), outputs[t].degenerate.begin(), outputs[t].degenerate.end());
  }
  d.piece_offsets.push_back(d.pieces.size());

  if (!degenerate.empty()) {
    std::sort(degenerate.begin(), degenerate.end(), [](const DegeneratePair& l, const DegeneratePair& r) {
      return std::tie(l.triangle, l.i, l.j) < std::tie(r.triangle, r.i, r.j);
    });
    degenerate.erase(std::unique(degenerate.begin(), degenerate.end()), degenerate.end());
    std::ostringstream msg;
    msg << "non-generic Laguerre diagram: sites (" << degenerate[0].i << ", " << degenerate[0].j
        << ") on triangle " << degenerate[0].triangle;
    if (degenerate.size() > 1) msg << " and " << degenerate.size() - 1 << " more";
    throw DegeneracyError(msg.str(), std::move(degenerate));
  }
  return d;
}

std::vector<JacobianEntry> interface_jacobian_entries(const RestrictedLaguerreDiagram& diagram) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> sums;
  for (const InterfaceRecord& rec : diagram.interfaces) {
    if (rec.integral <= 0.0) continue;
    sums[{rec.i, rec.j}] += rec.integral / (2.0 * rec.projected_gap);
  }
  std::vector<JacobianEntry> entries;
  entries.reserve(sums.size());
  for (const auto& [key, value] : sums) entries.push_back({key.first, key.second, value});
  return entries;
}

std::vector<Vec3> cell_centroids(const RestrictedLaguerreDiagram& diagram) {
  std::vector<Vec3> c(diagram.site_count);
  for (std::size_t i = 0; i < diagram.site_count; ++i) {
    if (!(diagram.masses[i] > 0.0)) throw Error("cell " + std::to_string(i) + " has no mass");
    c[i] = diagram.moments[i] / diagram.masses[i];
  }
  return c;
}

}  // namespace sdot
