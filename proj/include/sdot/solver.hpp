#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sdot/laguerre.hpp"
#include "sdot/measures.hpp"

namespace sdot {

/// Symmetric N×N Jacobian of G. Off-diagonal entries (i < j) are stored
/// once; the diagonal is the negated off-diagonal row sum, so H·1 = 0 and H is
/// negative semi-definite.
class SparseJacobian {
 public:
  SparseJacobian() = default;
  SparseJacobian(std::size_t n, std::vector<JacobianEntry> upper);

  std::size_t size() const { return diagonal_.size(); }
  const std::vector<JacobianEntry>& entries() const { return upper_; }
  const std::vector<double>& diagonal() const { return diagonal_; }

  /// Entry (i, j); zero when absent.
  double operator()(std::size_t i, std::size_t j) const;

  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;
  double quadratic_form(std::span<const double> v) const;

 private:
  std::vector<JacobianEntry> upper_;
  std::vector<double> diagonal_;
};

enum class ResidualNorm { Euclidean, Max };
enum class JitterPolicy { Off, OnDegeneracy };

struct SolverConfig {
  double eta = 1e-6;
  std::size_t max_iterations = 100;
  int max_line_search = 40;
  double linear_tolerance = 1e-10;
  JitterPolicy jitter = JitterPolicy::OnDegeneracy;
  int max_restarts = 3;
  /// ε₀ = ½·min(min_i G_i(ψ⁰), min_i ν_i) when true, without the ½ otherwise.
  bool halve_epsilon0 = true;
  ResidualNorm norm = ResidualNorm::Euclidean;
  std::uint64_t seed = 0;
  /// Print one progress line per Newton step at info level.
  bool progress = true;
  DiagramOptions diagram;
};

/// One accepted damped Newton step.
struct StepRecord {
  int ell = 0;
  double residual_before = 0.0;
  double residual_after = 0.0;
  double min_mass = 0.0;
  std::size_t cg_iterations = 0;

  /// Upper bound the step had to meet: 1 - 2^-(ℓ+1).
  double bound() const;
  double decrease_factor() const { return residual_after / residual_before; }
};

struct SolveReport {
  std::size_t iterations = 0;
  /// |G(ψ^k) - ν| for k = 0..iterations.
  std::vector<double> residuals;
  std::vector<StepRecord> steps;
  double epsilon0 = 0.0;
  double eta = 0.0;
  /// Largest observed per-step decrease factor (the empirical 1 - τ*/2).
  double worst_decrease_factor = 0.0;
  std::size_t evaluations = 0;
  int jitter_restarts = 0;
  bool converged = false;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
};

class SolverError : public Error {
 public:
  enum class Kind { SingularSystem, LineSearch, NonConvergence, InvalidInput };

  SolverError(Kind kind, const std::string& what, SolveReport report = {})
      : Error(what), kind_(kind), report_(std::move(report)) {}

  Kind kind() const { return kind_; }
  const SolveReport& report() const { return report_; }

 private:
  Kind kind_;
  SolveReport report_;
};

const char* to_string(SolverError::Kind kind);

struct Evaluation {
  std::vector<double> G;
  RestrictedLaguerreDiagram diagram;
};

/// G_i(ψ) = μ(Lag_i(ψ)) together with the diagram it came from.
Evaluation evaluate_G(const SimplexSoup& soup, const SiteSet& sites, const Weights& weights,
                      const DiagramOptions& options = {});

/// ψ⁰_i = -d(y_i, K)², then up to ten rounds lowering the weights of cells
/// whose mass is at most 1e-12·μ(K). Throws InitializationError.
Weights init_weights(const SimplexSoup& soup, const SiteSet& sites, const DiagramOptions& options = {});

SparseJacobian assemble_jacobian(const RestrictedLaguerreDiagram& diagram);

struct LinearSolveStats {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

/// Solves H v = r for v with zero mean by Jacobi-preconditioned conjugate
/// gradients on -H, projecting onto {Σ v_i = 0} after every step. Throws
/// SolverError(SingularSystem) when CG breaks down or needs more than 10·N
/// iterations.
std::vector<double> solve_newton_system(const SparseJacobian& h, std::span<const double> r,
                                        double tolerance = 1e-10, LinearSolveStats* stats = nullptr);

struct SolveResult {
  Weights weights;
  /// Sites actually solved for (jittered when a restart happened).
  SiteSet sites;
  std::vector<double> G;
  RestrictedLaguerreDiagram diagram;
  SolveReport report;
};

/// Damped Newton iteration for G(ψ) = ν, with ν the site masses (which must
/// sum to μ(K)).
SolveResult damped_newton(const SimplexSoup& soup, const SiteSet& sites, const SolverConfig& config = {});

struct Certificate {
  bool passed = false;
  double residual = 0.0;
  double eta = 0.0;
  double min_mass = 0.0;
  double epsilon0 = 0.0;
  double weight_spread = 0.0;
  double spread_bound = 0.0;  // diam(K ∪ Y)²
  bool residual_ok = false;
  bool mass_ok = false;
  bool spread_ok = false;
};

/// Recomputes G from scratch and checks residual, mass floor and the weight
/// spread bound.
Certificate verify_solution(const SimplexSoup& soup, const SiteSet& sites, const Weights& weights, double eta,
                            double epsilon0, const DiagramOptions& options = {});

double residual_norm(std::span<const double> g, std::span<const double> nu, ResidualNorm norm);

/// Diameter of the soup vertices together with the extra points.
double diameter(const SimplexSoup& soup, std::span<const Vec3> extra);

}  // namespace sdot
