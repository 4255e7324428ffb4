#pragma once

#include <cstdint>
#include <vector>

#include "sdot/laguerre.hpp"
#include "sdot/measures.hpp"

namespace sdot {

struct TransportSummary {
  std::vector<double> masses;
  /// ∫_{Lag_i} |x - y_i|² ρ per site.
  std::vector<double> costs;
  double total_cost = 0.0;
  /// Euclidean |G(ψ) - ν|.
  double residual = 0.0;
};

/// T_ψ(x) = argmin_i |x - y_i|² + ψ_i; ties go to the lowest index.
std::uint32_t transport_map_eval(const Vec3& x, const SiteSet& sites, const Weights& weights);

TransportSummary transport_cost(const RestrictedLaguerreDiagram& diagram, const SiteSet& sites);

struct OracleResult {
  double cost = 0.0;
  std::vector<double> masses;
  std::size_t samples = 0;
};

/// Exact discrete transport from a sampled μ to the sites. Each triangle is
/// split into n² congruent sub-triangles, n = floor(sqrt(samples_per_triangle));
/// every sub-triangle becomes a point mass at its centroid. The discrete
/// problem is solved by successive shortest paths, which is exact.
/// Requires at most 10 sites and 5000 samples.
OracleResult lp_oracle(const SimplexSoup& soup, const SiteSet& sites, std::size_t samples_per_triangle);

}  // namespace sdot
