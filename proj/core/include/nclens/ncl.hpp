#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nclens/ensemble.hpp"
#include "nclens/simplex_solver.hpp"

namespace nclens {

/// Parameters of the automatic penalty-strength search.
struct LambdaSearch {
  double initial_lambda = 0.1;
  double initial_step = 0.1;
  double step_floor = 0.001;
  /// Candidates on each side of the current centre: lambda* +- i*step for i = 1..span.
  int span = 10;
  /// Evaluate the candidates of one round concurrently.
  bool parallel = true;
};

struct NclConfig {
  double lambda = 0.0;
  /// Per-model regularisation strengths; empty means all zero.
  Vector alpha;
  LambdaSearch search;
  SolverOptions solver;
  /// Weights above this count as "selected".
  double support_epsilon = 1e-4;

  /// alpha_j = 0.05 for every model.
  static NclConfig regularized(std::size_t m, double strength = 0.05);

  /// Throws ContractViolation if lambda, alpha or search settings are out of range.
  void validate(std::size_t m) const;
  /// alpha expanded to length m (zeros when unset).
  Vector alpha_for(std::size_t m) const;
};

/// One evaluated lambda during search_lambda.
struct LambdaCandidate {
  double lambda = 0.0;
  double validation_error = 0.0;
  bool converged = false;
  bool failed = false;
  std::string failure;
};

struct NclFit {
  WeightVector weights = WeightVector::uniform(1);
  double lambda_star = 0.0;
  double validation_error = 0.0;
  ErrorTriple validation_errors;
  std::vector<std::size_t> support;
  std::vector<std::string> model_names;
  bool converged = false;
  double objective_value = 0.0;
  double kkt_residual = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  /// Number of solver runs performed (search_lambda counts each non-memoised candidate).
  int solver_invocations = 0;
  /// Candidates evaluated by search_lambda, in evaluation order.
  std::vector<LambdaCandidate> trace;
};

/// NCL objective with optional ridge term:
/// sum_j w_j (zeta_j - lambda/n * ||f_j - f_h||^2) + sum_j alpha_j w_j^2.
double ncl_objective(const PredictionMatrix& preds, const Vector& w, double lambda, const Vector& alpha);
/// Exact gradient of ncl_objective for any w (not only on the simplex).
Vector ncl_gradient(const PredictionMatrix& preds, const Vector& w, double lambda, const Vector& alpha);
/// Exact Hessian of ncl_objective.
Matrix ncl_hessian(const PredictionMatrix& preds, const Vector& w, double lambda, const Vector& alpha);

/// Solver problem for the NCL objective on `preds`.
SolverProblem make_ncl_problem(const PredictionMatrix& preds, double lambda, const Vector& alpha);

/// Minimise the NCL objective at `config.lambda` on validation predictions.
NclFit fit_weights(const PredictionMatrix& preds_val, const NclConfig& config);

/// Coarse-to-fine search for the penalty strength minimising the validation
/// combined error. Weights are fitted on `preds_val`; when `preds_score` is
/// given, candidates are scored on it instead (its columns must match).
NclFit search_lambda(const PredictionMatrix& preds_val, const NclConfig& config,
                     const std::optional<PredictionMatrix>& preds_score = std::nullopt);

struct Prediction {
  Vector values;
  ErrorTriple errors;
};

/// Apply fitted weights to test predictions (columns must match the fit).
Prediction predict(const NclFit& fit, const PredictionMatrix& preds_test);

/// `{weights, lambda_star, validation_error, support, converged}` as JSON text.
std::string ncl_fit_json(const NclFit& fit);

/// Round to the search resolution (three decimals).
double round_lambda(double lambda);

}  // namespace nclens
