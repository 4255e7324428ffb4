#include "sdot/transport.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <utility>

namespace sdot {

std::uint32_t transport_map_eval(const Vec3& x, const SiteSet& sites, const Weights& weights) {
  std::uint32_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::uint32_t i = 0; i < sites.size(); ++i) {
    const double v = power_distance(x, sites.position(i), weights[i]);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

TransportSummary transport_cost(const RestrictedLaguerreDiagram& diagram, const SiteSet& sites) {
  TransportSummary s;
  s.masses.assign(diagram.site_count, 0.0);
  s.costs.assign(diagram.site_count, 0.0);
  for (const auto& piece : diagram.pieces) {
    s.masses[piece.site] += piece.mass;
    s.costs[piece.site] += piece.cost;
  }
  double r2 = 0.0;
  for (std::size_t i = 0; i < diagram.site_count; ++i) {
    s.total_cost += s.costs[i];
    const double d = s.masses[i] - sites.mass(i);
    r2 += d * d;
  }
  s.residual = std::sqrt(r2);
  return s;
}

namespace {

struct Sample {
  Vec3 position;
  double mass;
};

std::vector<Sample> barycentric_samples(const SimplexSoup& soup, std::size_t per_triangle) {
  const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(per_triangle))));
  const double inv = 1.0 / static_cast<double>(n);
  std::vector<Sample> out;
  out.reserve(soup.triangle_count() * n * n);
  for (std::size_t t = 0; t < soup.triangle_count(); ++t) {
    const Triangle tri = soup.triangle(t);
    const auto& rho = soup.triangle_density(t);
    const double sub_area = tri.area() * inv * inv;
    auto emit = [&](double u, double v) {
      const Vec3 p = tri.a + u * (tri.b - tri.a) + v * (tri.c - tri.a);
      const double m = rho(p) * sub_area;
      if (m > 0.0) out.push_back({p, m});
    };
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; i + j < n; ++j) {
        emit((i + 1.0 / 3.0) * inv, (j + 1.0 / 3.0) * inv);
        if (i + j + 2 <= n) emit((i + 2.0 / 3.0) * inv, (j + 2.0 / 3.0) * inv);
      }
  }
  return out;
}

// Incremental min-cost flow. Samples are inserted one at a time and routed
// along shortest paths of the residual network; since a new sample only has
// outgoing arcs, the no-negative-cycle invariant survives every insertion and
// the final flow is optimal. Paths between targets are summarized by exchange
// arcs k -> k' costing min over samples s carrying flow to k of c(s,k') - c(s,k).
class TransportFlow {
 public:
  TransportFlow(std::vector<Sample> samples, std::vector<Vec3> targets, std::vector<double> capacity)
      : samples_(std::move(samples)),
        targets_(std::move(targets)),
        capacity_(std::move(capacity)),
        m_(samples_.size()),
        n_(targets_.size()),
        cost_(m_ * n_),
        flow_(m_ * n_, 0.0),
        used_(n_, 0.0),
        exchange_(n_ * n_) {
    double total = 0.0;
    for (std::size_t s = 0; s < m_; ++s) {
      total += samples_[s].mass;
      for (std::size_t k = 0; k < n_; ++k) cost_[s * n_ + k] = squared_norm(samples_[s].position - targets_[k]);
    }
    tiny_ = 1e-13 * total / static_cast<double>(std::max<std::size_t>(m_, 1));
    slack_ = 1e-12 * (cost_.empty() ? 0.0 : *std::max_element(cost_.begin(), cost_.end()));
  }

  void solve() {
    for (std::uint32_t s = 0; s < m_; ++s) route(s);
  }

  double cost() const {
    double c = 0.0;
    for (std::size_t e = 0; e < flow_.size(); ++e) c += flow_[e] * cost_[e];
    return c;
  }
  const std::vector<double>& used() const { return used_; }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  double& flow(std::size_t s, std::size_t k) { return flow_[s * n_ + k]; }
  double c(std::size_t s, std::size_t k) const { return cost_[s * n_ + k]; }

  void set_flow(std::uint32_t s, std::uint32_t k, double value) {
    if (value <= tiny_) value = 0.0;
    const bool was = flow(s, k) > 0.0, now = value > 0.0;
    flow(s, k) = value;
    if (was != now) index(s, k, now);
  }

  void index(std::uint32_t s, std::uint32_t k, bool insert) {
    for (std::uint32_t k2 = 0; k2 < n_; ++k2) {
      if (k2 == k) continue;
      auto& set = exchange_[k * n_ + k2];
      const std::pair<double, std::uint32_t> key{c(s, k2) - c(s, k), s};
      if (insert) set.insert(key);
      else set.erase(key);
    }
  }

  void route(std::uint32_t s) {
    double remaining = samples_[s].mass;
    std::vector<double> dist(n_ * n_);
    std::vector<std::uint32_t> next(n_ * n_);
    while (remaining > tiny_) {
      for (std::uint32_t a = 0; a < n_; ++a)
        for (std::uint32_t b = 0; b < n_; ++b) {
          const auto& set = exchange_[a * n_ + b];
          dist[a * n_ + b] = a == b ? 0.0 : (set.empty() ? kInf : set.begin()->first);
          next[a * n_ + b] = (a == b || !set.empty()) ? b : kNone;
        }
      // Ties between samples make zero-cost cycles that rounding can turn
      // slightly negative; only clear improvements are taken.
      for (std::uint32_t m = 0; m < n_; ++m)
        for (std::uint32_t a = 0; a < n_; ++a)
          for (std::uint32_t b = 0; b < n_; ++b) {
            if (a == b) continue;
            const double via = dist[a * n_ + m] + dist[m * n_ + b];
            if (via < dist[a * n_ + b] - slack_) {
              dist[a * n_ + b] = via;
              next[a * n_ + b] = next[a * n_ + m];
            }
          }

      double best = kInf;
      std::uint32_t from = kNone, to = kNone;
      for (std::uint32_t b = 0; b < n_; ++b) {
        if (capacity_[b] - used_[b] <= tiny_) continue;
        for (std::uint32_t a = 0; a < n_; ++a) {
          const double d = c(s, a) + dist[a * n_ + b];
          if (d < best) {
            best = d;
            from = a;
            to = b;
          }
        }
      }
      if (from == kNone) break;

      // Hops of the exchange path, each realized by the cheapest sample.
      std::vector<std::pair<std::uint32_t, std::uint32_t>> hops;  // (target, via sample)
      double delta = std::min(remaining, capacity_[to] - used_[to]);
      for (std::uint32_t a = from; a != to;) {
        if (hops.size() >= n_) throw Error("lp_oracle: cyclic exchange path");
        const std::uint32_t b = next[a * n_ + to];
        const std::uint32_t via = exchange_[a * n_ + b].begin()->second;
        hops.emplace_back(a, via);
        delta = std::min(delta, flow(via, a));
        a = b;
      }
      // The routed sample is indexed only once it is placed, so it never
      // carries its own exchange (which would just mimic a direct arc).
      flow(s, from) += delta;
      for (std::size_t h = 0; h < hops.size(); ++h) {
        const auto [a, via] = hops[h];
        const std::uint32_t b = h + 1 < hops.size() ? hops[h + 1].first : to;
        set_flow(via, a, flow(via, a) - delta);
        set_flow(via, b, flow(via, b) + delta);
      }
      used_[to] += delta;
      remaining -= delta;
    }
    for (std::uint32_t k = 0; k < n_; ++k) {
      if (flow(s, k) <= tiny_) flow(s, k) = 0.0;
      if (flow(s, k) > 0.0) index(s, k, true);
    }
  }

  std::vector<Sample> samples_;
  std::vector<Vec3> targets_;
  std::vector<double> capacity_;
  std::size_t m_, n_;
  std::vector<double> cost_;
  std::vector<double> flow_;
  std::vector<double> used_;
  std::vector<std::set<std::pair<double, std::uint32_t>>> exchange_;
  double tiny_ = 0.0;
  double slack_ = 0.0;
};

}  // namespace

OracleResult lp_oracle(const SimplexSoup& soup, const SiteSet& sites, std::size_t samples_per_triangle) {
  if (sites.size() == 0 || sites.size() > 10) throw ValidationError("lp_oracle supports 1 to 10 sites");
  if (samples_per_triangle == 0) throw ValidationError("lp_oracle needs at least one sample per triangle");
  const double mu = total_mass(soup);
  if (std::abs(sites.total_mass() - mu) > 1e-9 * mu)
    throw ValidationError("lp_oracle: target masses do not sum to the soup mass");

  auto samples = barycentric_samples(soup, samples_per_triangle);
  if (samples.size() > 5000) throw ValidationError("lp_oracle supports at most 5000 samples");
  double sampled = 0.0;
  for (const auto& s : samples) sampled += s.mass;
  // The centroid rule is exact for affine densities, so this rescale only
  // absorbs rounding.
  std::vector<double> capacity = sites.masses();
  for (double& v : capacity) v *= sampled / sites.total_mass();

  OracleResult result;
  result.samples = samples.size();
  TransportFlow flow(std::move(samples), sites.positions(), std::move(capacity));
  flow.solve();
  result.cost = flow.cost();
  result.masses = flow.used();
  return result;
}

}  // namespace sdot
