#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "sdot/transport.hpp"

using namespace sdot;

namespace {

SolverConfig quiet() {
  SolverConfig c;
  c.progress = false;
  return c;
}

// Exhaustive optimum for a handful of unit samples: every assignment with the
// prescribed counts, cheapest one wins.
double brute_force_assignment(const std::vector<Vec3>& samples, const std::vector<Vec3>& targets,
                              std::vector<int> counts) {
  double best = 1e300;
  std::vector<int> pick(samples.size(), 0);
  auto rec = [&](auto&& self, std::size_t s, double acc) -> void {
    if (acc >= best) return;
    if (s == samples.size()) {
      best = acc;
      return;
    }
    for (std::size_t k = 0; k < targets.size(); ++k) {
      if (counts[k] == 0) continue;
      --counts[k];
      self(self, s + 1, acc + squared_norm(samples[s] - targets[k]));
      ++counts[k];
    }
  };
  rec(rec, 0, 0.0);
  return best;
}

}  // namespace

TEST_CASE("transport map") {
  const auto sites = fixtures::square_sites();
  CHECK(transport_map_eval(sites.position(1), sites, {0, 0}) == 1);
  CHECK(transport_map_eval({0.59, 0.5, 0}, sites, {0, 0.1}) == 0);
  CHECK(transport_map_eval({0.61, 0.5, 0}, sites, {0, 0.1}) == 1);
  CHECK(transport_map_eval({0.5, 0.3, 0}, sites, {0, 0}) == 0);
}

TEST_CASE("transport map agrees with the cell decomposition") {
  std::mt19937_64 rng(2);
  const auto sphere = fixtures::icosphere(2);
  const auto sites = SiteSet::uniform(fixtures::noisy_samples(sphere, 30, 0.05, 4), total_mass(sphere));
  const auto w = fixtures::random_weights(30, 0.05, rng);
  const auto d = compute_diagram(sphere, sites, w);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (const auto& piece : d.pieces) {
    // Random strict convex combination of the polygon vertices.
    Vec3 x;
    double total = 0.0;
    for (const auto& v : piece.polygon.vertices) {
      const double c = u(rng);
      x += c * v;
      total += c;
    }
    x = x / total;
    CHECK(transport_map_eval(x, sites, w) == piece.site);
  }
}

TEST_CASE("transport cost") {
  const auto sq = fixtures::unit_square();
  const SiteSet one({{0.5, 0.5, 0}}, {1});
  const auto s1 = transport_cost(compute_diagram(sq, one, {0}), one);
  CHECK(s1.total_cost == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(s1.residual == doctest::Approx(0.0));

  const auto sites = fixtures::square_sites(0.6, 0.4);
  const auto d = compute_diagram(sq, sites, {0, 0.1});
  const auto s = transport_cost(d, sites);
  CHECK(s.masses[0] == doctest::Approx(d.masses[0]).epsilon(1e-12));
  // [0, 0.6] × [0, 1] about (0.25, 0.5) plus [0.6, 1] × [0, 1] about (0.75, 0.5).
  const double exact = (0.35 * 0.35 * 0.35 + 0.25 * 0.25 * 0.25) / 3 + 0.6 / 12 +
                       (0.25 * 0.25 * 0.25 + 0.15 * 0.15 * 0.15) / 3 + 0.4 / 12;
  CHECK(s.total_cost == doctest::Approx(exact).epsilon(1e-12));
  CHECK(s.total_cost >= 0.0);
  const auto shifted = transport_cost(compute_diagram(sq, sites, {5, 5.1}), sites);
  CHECK(shifted.total_cost == doctest::Approx(s.total_cost).epsilon(1e-12));
}

TEST_CASE("oracle on tiny instances matches exhaustive search") {
  // One triangle split 2×2 gives four equal point masses; two or three
  // targets with integer capacities.
  const SimplexSoup tri({{0, 0, 0}, {2, 0, 0}, {0, 2, 0}}, {{0, 1, 2}});
  std::vector<Vec3> samples;
  for (auto [u, v] : std::vector<std::pair<double, double>>{{1. / 3, 1. / 3}, {1. / 3, 4. / 3}, {4. / 3, 1. / 3}, {2. / 3, 2. / 3}})
    samples.push_back({u, v, 0});
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::vector<Vec3> targets{{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}};
    const std::vector<int> counts{1 + trial % 2, 1, 2 - trial % 2};
    const SiteSet sites(targets, {double(counts[0]) / 2, double(counts[1]) / 2, double(counts[2]) / 2});
    const auto oracle = lp_oracle(tri, sites, 4);
    CHECK(oracle.samples == 4);
    CHECK(oracle.cost == doctest::Approx(brute_force_assignment(samples, targets, counts) / 2).epsilon(1e-12));
    for (int k = 0; k < 3; ++k) CHECK(oracle.masses[k] == doctest::Approx(counts[k] / 2.0));
  }
}

TEST_CASE("oracle basics") {
  const auto sq = fixtures::unit_square();
  const SiteSet one({{0.5, 0.5, 0}}, {1});
  const auto o1 = lp_oracle(sq, one, 400);
  CHECK(o1.masses[0] == doctest::Approx(1.0));
  CHECK(o1.cost == doctest::Approx(1.0 / 6.0).epsilon(1e-3));

  const auto half = lp_oracle(sq, fixtures::square_sites(), 400);
  CHECK(half.masses[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(half.masses[1] == doctest::Approx(0.5).epsilon(1e-9));

  CHECK_THROWS_AS(lp_oracle(sq, SiteSet({{0, 0, 0}}, {2.0}), 100), ValidationError);
  CHECK_THROWS_AS(lp_oracle(sq, one, 10000), ValidationError);
}

TEST_CASE("oracle agrees with the semi-discrete solution") {
  const auto sq = fixtures::unit_square();
  const auto sites = fixtures::square_sites(0.6, 0.4);
  const auto solved = damped_newton(sq, sites, quiet());
  const auto summary = transport_cost(solved.diagram, solved.sites);
  const auto oracle = lp_oracle(sq, sites, 1250);  // 35² samples per triangle
  CHECK(std::abs(summary.total_cost - oracle.cost) <= 0.01 * oracle.cost);
  CHECK(summary.total_cost <= oracle.cost * 1.01);
  for (int k = 0; k < 2; ++k) CHECK(std::abs(oracle.masses[k] - solved.G[k]) <= 1e-3);
}

TEST_CASE("oracle on a symmetric soup with tied samples") {
  // Mirror-symmetric pyramid: many samples have exactly tied exchange costs.
  const SimplexSoup pyramid({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0.5, 0.5, 0.6}},
                            {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}});
  const auto sites = SiteSet::uniform({{0.2, 0.2, 0.2}, {0.8, 0.3, 0.3}, {0.7, 0.8, 0.2}, {0.2, 0.7, 0.3}},
                                      total_mass(pyramid));
  const auto oracle = lp_oracle(pyramid, sites, 625);
  const auto solved = damped_newton(pyramid, sites, quiet());
  CHECK(std::abs(transport_cost(solved.diagram, solved.sites).total_cost - oracle.cost) <= 0.01 * oracle.cost);
  for (std::size_t k = 0; k < 4; ++k) CHECK(oracle.masses[k] == doctest::Approx(sites.mass(k)).epsilon(1e-9));
}
