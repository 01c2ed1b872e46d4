#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include "nclens/ensemble.hpp"

namespace nclens {

/// Smooth objective over the probability simplex {w >= 0, sum(w) = 1}.
///
/// `hessian` is optional; when absent the solver differentiates `gradient`
/// numerically.
struct SolverProblem {
  std::size_t dim = 0;
  std::function<double(const Vector&)> objective;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;
};

/// Snapshot passed to SolverOptions::on_iterate after every accepted step.
struct IterateInfo {
  int outer = 0;
  int inner = 0;
  double mu = 0.0;
  double barrier_value = 0.0;
  const Vector* w = nullptr;
};

struct SolverOptions {
  double mu_initial = 0.1;
  double mu_shrink = 0.1;
  double kkt_tolerance = 1e-8;
  int max_outer_iterations = 30;
  int max_inner_iterations = 200;
  double armijo_c = 1e-4;
  /// Fraction-to-the-boundary parameter: w_j never drops below (1 - tau) of its previous value in one step.
  double boundary_fraction = 0.995;
  std::function<void(const IterateInfo&)> on_iterate;

  /// Throws ContractViolation on out-of-range settings.
  void validate() const;
};

struct SolverResult {
  Vector w;
  double objective_value = 0.0;
  bool converged = false;
  int outer_iterations = 0;
  int inner_iterations = 0;
  /// Scaled first-order residual max(stationarity, mu) at the returned point.
  double kkt_residual = 0.0;
  /// Smallest coordinate seen over all iterates; > 0 means every iterate was strictly interior.
  double min_iterate_entry = 0.0;
};

/// Log-barrier interior-point method on the simplex.
///
/// For a decreasing sequence of barrier weights mu, minimises
/// F(w) - mu * sum(log w_j) subject to sum(w) = 1 with Newton steps on the
/// equality-constrained KKT system, a fraction-to-the-boundary step cap and
/// Armijo backtracking. Starts from `start` (strictly interior) or the
/// barycenter. Throws NumericalFailure when the objective or gradient is
/// non-finite at an interior point.
SolverResult solve(const SolverProblem& problem, const SolverOptions& options = {},
                   const std::optional<Vector>& start = std::nullopt);

/// Largest relative gap between the analytic directional derivative and a
/// central finite difference, over the tangent directions e_j - 1/m.
double check_gradient(const SolverProblem& problem, const Vector& at, double step);

}  // namespace nclens
