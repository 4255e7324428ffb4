#include "sdot/measures.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "sdot/errors.hpp"

namespace sdot {

// ---------------------------------------------------------------- TriangleBvh

namespace {
constexpr std::uint32_t kLeafSize = 4;
}

TriangleBvh::TriangleBvh(std::vector<Triangle> triangles) : triangles_(std::move(triangles)) {
  if (triangles_.empty()) return;
  order_.resize(triangles_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  std::vector<Vec3> centroids(triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) centroids[t] = triangles_[t].centroid();
  nodes_.reserve(2 * triangles_.size() / kLeafSize + 2);
  build(0, static_cast<std::uint32_t>(triangles_.size()), centroids);
}

std::uint32_t TriangleBvh::build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3>& centroids) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box, cbox;
  for (std::uint32_t k = begin; k < end; ++k) {
    const Triangle& t = triangles_[order_[k]];
    box.extend(t.a);
    box.extend(t.b);
    box.extend(t.c);
    cbox.extend(centroids[order_[k]]);
  }
  nodes_[index].box = box;
  if (end - begin <= kLeafSize) {
    nodes_[index].begin = begin;
    nodes_[index].end = end;
    return index;
  }
  const Vec3 extent = cbox.hi - cbox.lo;
  int axis = 0;
  if (extent.y > extent[axis]) axis = 1;
  if (extent.z > extent[axis]) axis = 2;
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t l, std::uint32_t r) { return centroids[l][axis] < centroids[r][axis]; });
  const std::uint32_t left = build(begin, mid, centroids);
  const std::uint32_t right = build(mid, end, centroids);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

TriangleBvh::Hit TriangleBvh::closest(const Vec3& p) const {
  Hit best;
  if (nodes_.empty()) return best;
  double best2 = HUGE_VAL;
  std::vector<std::uint32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.box.squared_distance(p) > best2) continue;
    if (node.leaf()) {
      for (std::uint32_t k = node.begin; k < node.end; ++k) {
        const std::uint32_t t = order_[k];
        const Vec3 q = closest_point_on_triangle(p, triangles_[t]);
        const double d2 = squared_norm(q - p);
        if (d2 < best2 || (d2 == best2 && t < best.triangle)) {
          best2 = d2;
          best.triangle = t;
          best.point = q;
        }
      }
      continue;
    }
    // Visit the nearer child first.
    const double dl = nodes_[node.left].box.squared_distance(p);
    const double dr = nodes_[node.right].box.squared_distance(p);
    if (dl < dr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  best.distance = std::sqrt(best2);
  return best;
}

// ---------------------------------------------------------------- SimplexSoup

SimplexSoup::SimplexSoup(std::vector<Vec3> vertices, std::vector<TriangleIndices> triangles,
                         std::vector<double> density)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), density_(std::move(density)) {
  if (density_.empty()) density_.assign(vertices_.size(), 1.0);
  if (density_.size() != vertices_.size())
    throw ValidationError("density has " + std::to_string(density_.size()) + " values for " +
                          std::to_string(vertices_.size()) + " vertices");
  for (std::size_t v = 0; v < vertices_.size(); ++v) {
    if (!is_finite(vertices_[v])) throw ValidationError("vertex " + std::to_string(v) + " is not finite");
    if (!std::isfinite(density_[v]) || density_[v] < 0.0)
      throw ValidationError("density at vertex " + std::to_string(v) + " is negative or not finite");
  }
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    for (std::uint32_t idx : triangles_[t])
      if (idx >= vertices_.size())
        throw ValidationError("triangle " + std::to_string(t) + " references vertex " + std::to_string(idx) +
                              " out of range");
    for (std::uint32_t idx : triangles_[t]) bounds_.extend(vertices_[idx]);
  }
  scale_ = bounds_.diagonal();

  std::vector<Triangle> geometry(triangles_.size());
  densities_.resize(triangles_.size());
  const double min_area = 1e-9 * scale_ * scale_;
  bool zero_density = false;
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    geometry[t] = triangle(t);
    if (!(geometry[t].area() > min_area))
      throw ValidationError("triangle " + std::to_string(t) + " is degenerate");
    const auto& f = triangles_[t];
    const std::array<double, 3> values{density_[f[0]], density_[f[1]], density_[f[2]]};
    if (values[0] == 0.0 || values[1] == 0.0 || values[2] == 0.0) zero_density = true;
    densities_[t] = AffineDensity(geometry[t], values);
  }
  if (zero_density) warnings_.emplace_back("density vanishes at some vertices; the measure is not regular there");
  bvh_ = std::make_shared<const TriangleBvh>(std::move(geometry));
}

SimplexSoup SimplexSoup::with_scaled_density(double factor) const {
  std::vector<double> d = density_;
  for (double& v : d) v *= factor;
  return SimplexSoup(vertices_, triangles_, std::move(d));
}

double total_mass(const SimplexSoup& soup) {
  double sum = 0.0;
  for (std::size_t t = 0; t < soup.triangle_count(); ++t) {
    const Triangle tri = soup.triangle(t);
    sum += integrate_affine_area(ConvexPolygon3::from_triangle(tri), soup.triangle_density(t));
  }
  return sum;
}

SimplexSoup normalize(const SimplexSoup& soup) {
  const double mass = total_mass(soup);
  if (!(mass > 0.0)) throw ValidationError("the soup carries no mass");
  if (mass == 1.0) return soup;
  return soup.with_scaled_density(1.0 / mass);
}

// ---------------------------------------------------------------- connectivity

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::uint32_t> parent_;
};

struct PositionLess {
  bool operator()(const Vec3& l, const Vec3& r) const {
    if (l.x != r.x) return l.x < r.x;
    if (l.y != r.y) return l.y < r.y;
    return l.z < r.z;
  }
};

}  // namespace

ConnectivityReport check_strong_connectedness(const SimplexSoup& soup) {
  ConnectivityReport report;
  const std::size_t nt = soup.triangle_count();
  if (nt == 0) return report;

  // Weld vertices by exact position.
  std::map<Vec3, std::uint32_t, PositionLess> ids;
  std::vector<std::uint32_t> welded(soup.vertex_count());
  for (std::size_t v = 0; v < soup.vertex_count(); ++v)
    welded[v] = ids.emplace(soup.vertices()[v], static_cast<std::uint32_t>(ids.size())).first->second;

  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> first_owner;
  DisjointSets sets(nt);
  for (std::uint32_t t = 0; t < nt; ++t) {
    const auto& f = soup.triangles()[t];
    for (int k = 0; k < 3; ++k) {
      std::uint32_t a = welded[f[k]], b = welded[f[(k + 1) % 3]];
      if (a > b) std::swap(a, b);
      auto [it, inserted] = first_owner.emplace(std::make_pair(a, b), t);
      if (!inserted) sets.unite(it->second, t);
    }
  }

  std::map<std::uint32_t, std::vector<std::uint32_t>> groups;
  for (std::uint32_t t = 0; t < nt; ++t) groups[sets.find(t)].push_back(t);
  for (auto& [root, members] : groups) report.components.push_back(std::move(members));
  report.connected = report.components.size() == 1;
  return report;
}

double distance_to_soup(const Vec3& p, const SimplexSoup& soup) {
  if (soup.empty()) throw ValidationError("distance to an empty soup");
  return soup.bvh().closest(p).distance;
}

// ---------------------------------------------------------------- SiteSet

std::vector<std::array<std::uint32_t, 2>> find_close_pairs(const std::vector<Vec3>& points, double tolerance) {
  std::vector<std::uint32_t> order(points.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return PositionLess{}(points[a], points[b]);
  });
  std::vector<std::array<std::uint32_t, 2>> pairs;
  const double tol2 = tolerance * tolerance;
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (std::size_t l = k + 1; l < order.size(); ++l) {
      const Vec3& a = points[order[k]];
      const Vec3& b = points[order[l]];
      if (b.x - a.x > tolerance) break;
      if (squared_norm(a - b) <= tol2) {
        pairs.push_back({std::min(order[k], order[l]), std::max(order[k], order[l])});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

SiteSet::SiteSet(std::vector<Vec3> positions, std::vector<double> masses, double min_separation)
    : positions_(std::move(positions)), masses_(std::move(masses)) {
  if (positions_.size() != masses_.size())
    throw ValidationError("site count and mass count differ");
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (!is_finite(positions_[i])) throw ValidationError("site " + std::to_string(i) + " is not finite");
    if (!std::isfinite(masses_[i]) || !(masses_[i] > 0.0))
      throw ValidationError("site " + std::to_string(i) + " has a non-positive mass");
  }
  const auto close = find_close_pairs(positions_, min_separation);
  if (!close.empty()) {
    std::ostringstream msg;
    msg << "duplicate sites:";
    for (std::size_t k = 0; k < close.size() && k < 10; ++k) msg << " (" << close[k][0] << "," << close[k][1] << ")";
    if (close.size() > 10) msg << " ...";
    throw ValidationError(msg.str());
  }
}

SiteSet SiteSet::uniform(std::vector<Vec3> positions, double total, double min_separation) {
  const std::size_t n = positions.size();
  std::vector<double> masses(n, n ? total / static_cast<double>(n) : 0.0);
  return SiteSet(std::move(positions), std::move(masses), min_separation);
}

double SiteSet::total_mass() const {
  double s = 0.0;
  for (double m : masses_) s += m;
  return s;
}

SiteSet SiteSet::normalized(double total) const {
  SiteSet out = *this;
  const double s = total_mass();
  for (double& m : out.masses_) m *= total / s;
  return out;
}

SiteSet SiteSet::with_positions(std::vector<Vec3> positions, double min_separation) const {
  return SiteSet(std::move(positions), masses_, min_separation);
}

}  // namespace sdot
