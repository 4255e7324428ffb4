#pragma once

// Meshes and random instances shared by the test binaries.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "sdot/apps.hpp"
#include "sdot/measures.hpp"
#include "sdot/solver.hpp"

namespace fixtures {

using sdot::SimplexSoup;
using sdot::SiteSet;
using sdot::TriangleIndices;
using sdot::Vec3;

inline SimplexSoup unit_square(std::vector<double> density = {}) {
  return SimplexSoup({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {{0, 1, 2}, {0, 2, 3}}, std::move(density));
}

/// The two-site square used throughout: sites (0.25, 0.5, 0) and (0.75, 0.5, 0).
inline SiteSet square_sites(double nu1 = 0.5, double nu2 = 0.5) {
  return SiteSet({{0.25, 0.5, 0}, {0.75, 0.5, 0}}, {nu1, nu2});
}

/// n×n grid of the unit square, z lifted by `height(x, y)`.
template <typename Height>
SimplexSoup grid(int n, Height height, double jitter = 0.0, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-jitter, jitter);
  std::vector<Vec3> v;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      double x = double(i) / n, y = double(j) / n;
      if (i > 0 && i < n) x += u(rng) / n;
      if (j > 0 && j < n) y += u(rng) / n;
      v.push_back({x, y, height(x, y)});
    }
  std::vector<TriangleIndices> t;
  auto id = [n](int i, int j) { return static_cast<std::uint32_t>(j * (n + 1) + i); };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      t.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      t.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return SimplexSoup(std::move(v), std::move(t));
}

inline SimplexSoup flat_grid(int n, double jitter = 0.0, std::uint64_t seed = 1) {
  return grid(n, [](double, double) { return 0.0; }, jitter, seed);
}

/// Icosahedron refined `level` times, vertices pushed onto the sphere.
inline SimplexSoup icosphere(int level, double radius = 1.0) {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v{{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
                      {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
  std::vector<TriangleIndices> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]) * 0.5);
      return mid[key] = static_cast<std::uint32_t>(v.size() - 1);
    };
    std::vector<TriangleIndices> next;
    for (const auto& t : f) {
      const auto a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  for (auto& x : v) x = x * (radius / sdot::norm(x));
  return SimplexSoup(std::move(v), std::move(f));
}

inline SimplexSoup torus(int nu, int nv, double big = 1.0, double small = 0.35) {
  std::vector<Vec3> v;
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nu; ++i) {
      const double a = 2 * M_PI * i / nu, b = 2 * M_PI * j / nv;
      v.push_back({(big + small * std::cos(b)) * std::cos(a), (big + small * std::cos(b)) * std::sin(a),
                   small * std::sin(b)});
    }
  std::vector<TriangleIndices> f;
  auto id = [&](int i, int j) { return static_cast<std::uint32_t>((j % nv) * nu + (i % nu)); };
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nu; ++i) {
      f.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      f.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return SimplexSoup(std::move(v), std::move(f));
}

/// Ellipsoid with two unequal bumps: no rigid symmetries.
inline SimplexSoup bumpy_ellipsoid(int level) {
  const auto sphere = icosphere(level);
  const Vec3 bump = Vec3{1, 1, 1} / std::sqrt(3.0);
  const Vec3 bump2 = Vec3{-1, 0.3, -0.5} / sdot::norm(Vec3{-1, 0.3, -0.5});
  std::vector<Vec3> v;
  for (const auto& p : sphere.vertices()) {
    const double r = 1.0 + 0.8 * std::exp(-sdot::squared_norm(p - bump) / 0.15) +
                     0.4 * std::exp(-sdot::squared_norm(p - bump2) / 0.1);
    v.push_back({1.6 * r * p.x, r * p.y, 0.5 * r * p.z});
  }
  return SimplexSoup(std::move(v), sphere.triangles());
}

/// Two triangles touching at a single vertex, areas 0.5 and 2.
inline SimplexSoup vertex_contact() {
  return SimplexSoup({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {-2, 0, 0}, {0, -2, 0}}, {{0, 1, 2}, {0, 4, 3}});
}

/// Sites well above the two contact triangles; their bisector meets the
/// soup only at the shared vertex.
inline SiteSet vertex_contact_sites(double total) {
  return SiteSet::uniform({{0.25, 0.25, 3.0}, {-0.25, -0.25, 3.0}}, total);
}

/// Points sampled on the soup plus Gaussian noise of standard deviation sigma.
inline std::vector<Vec3> noisy_samples(const SimplexSoup& soup, std::size_t n, double sigma, std::uint64_t seed) {
  auto pts = sdot::sample_surface(soup, n, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> g(0.0, sigma);
  for (auto& p : pts) p += Vec3{g(rng), g(rng), g(rng)};
  return pts;
}

inline std::vector<double> random_weights(std::size_t n, double magnitude, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-magnitude, magnitude);
  std::vector<double> w(n);
  for (auto& x : w) x = u(rng);
  return w;
}

/// Mass of each site's cell by brute-force argmin over the centroids of an
/// m×m barycentric subdivision of every triangle.
inline std::vector<double> sampled_masses(const SimplexSoup& soup, const SiteSet& sites,
                                          const std::vector<double>& w, int m) {
  std::vector<double> out(sites.size(), 0.0);
  for (std::size_t t = 0; t < soup.triangle_count(); ++t) {
    const auto tri = soup.triangle(t);
    const auto& rho = soup.triangle_density(t);
    const double a = tri.area() / (double(m) * m);
    auto add = [&](double s, double r) {
      const Vec3 x = tri.a + (s / m) * (tri.b - tri.a) + (r / m) * (tri.c - tri.a);
      std::size_t best = 0;
      double bv = 1e300;
      for (std::size_t i = 0; i < sites.size(); ++i) {
        const double v = sdot::squared_norm(x - sites.position(i)) + w[i];
        if (v < bv) bv = v, best = i;
      }
      out[best] += rho(x) * a;
    };
    for (int i = 0; i < m; ++i)
      for (int j = 0; i + j < m; ++j) {
        add(i + 1.0 / 3, j + 1.0 / 3);
        if (i + j + 2 <= m) add(i + 2.0 / 3, j + 2.0 / 3);
      }
  }
  return out;
}

}  // namespace fixtures
