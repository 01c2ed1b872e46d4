#include "nclens/ncl.hpp"

#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <map>
#include <memory>

#include <json.hpp>

#include "nclens/errors.hpp"

namespace nclens {

namespace {

void check_shapes(const PredictionMatrix& preds, const Vector& w, const Vector& alpha) {
  if (static_cast<std::size_t>(w.size()) != preds.models()) {
    throw ContractViolation("weight vector length does not match number of models");
  }
  if (alpha.size() != 0 && alpha.size() != w.size()) {
    throw ContractViolation("alpha length does not match number of models");
  }
}

double alpha_term(const Vector& w, const Vector& alpha) {
  return alpha.size() == 0 ? 0.0 : alpha.dot(w.cwiseProduct(w));
}

// Same objective on targets and predictions shifted by mean(y). On the simplex
// the objective is unchanged; the shift keeps the Gram matrix well scaled.
PredictionMatrix centered(const PredictionMatrix& preds) {
  const double shift = preds.y_true().mean();
  Matrix values = preds.values().array() - shift;
  Vector y = preds.y_true().array() - shift;
  return {std::move(values), std::move(y), preds.model_names()};
}

std::int64_t memo_key(double lambda) { return std::llround(lambda * 1e6); }

}  // namespace

NclConfig NclConfig::regularized(std::size_t m, double strength) {
  NclConfig c;
  c.alpha = Vector::Constant(static_cast<Eigen::Index>(m), strength);
  return c;
}

void NclConfig::validate(std::size_t m) const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractViolation("lambda must lie in [0, 1]");
  if (alpha.size() != 0) {
    if (static_cast<std::size_t>(alpha.size()) != m) throw ContractViolation("alpha length does not match number of models");
    if (!alpha.allFinite() || alpha.minCoeff() < 0.0) throw ContractViolation("alpha entries must be nonnegative");
  }
  if (!(search.step_floor > 0.0)) throw ContractViolation("search step_floor must be positive");
  if (!(search.initial_step > 0.0)) throw ContractViolation("search initial_step must be positive");
  if (!(search.initial_lambda >= 0.0 && search.initial_lambda <= 1.0)) {
    throw ContractViolation("search initial_lambda must lie in [0, 1]");
  }
  if (search.span < 1) throw ContractViolation("search span must be positive");
  if (!(support_epsilon >= 0.0)) throw ContractViolation("support_epsilon must be nonnegative");
  solver.validate();
}

Vector NclConfig::alpha_for(std::size_t m) const {
  return alpha.size() == 0 ? Vector::Zero(static_cast<Eigen::Index>(m)) : alpha;
}

double round_lambda(double lambda) { return std::round(lambda * 1000.0) / 1000.0; }

double ncl_objective(const PredictionMatrix& preds, const Vector& w, double lambda, const Vector& alpha) {
  check_shapes(preds, w, alpha);
  const auto n = static_cast<double>(preds.samples());
  const Vector fh = preds.values() * w;
  const Vector zeta = member_mse(preds);
  const Vector spread = (preds.values().colwise() - fh).colwise().squaredNorm().transpose() / n;
  return w.dot(zeta - lambda * spread) + alpha_term(w, alpha);
}

Vector ncl_gradient(const PredictionMatrix& preds, const Vector& w, double lambda, const Vector& alpha) {
  check_shapes(preds, w, alpha);
  const auto n = static_cast<double>(preds.samples());
  const Matrix& p = preds.values();
  const Vector fh = p * w;
  const double s = w.sum();
  // d/dw_k of sum_j w_j ||p_j - P w||^2 = ||p_k - f_h||^2 - 2 (1 - s) p_k . f_h
  const Vector spread = (p.colwise() - fh).colwise().squaredNorm().transpose();
  const Vector cross = p.transpose() * fh;
  Vector g = member_mse(preds) - (lambda / n) * (spread - 2.0 * (1.0 - s) * cross);
  if (alpha.size() != 0) g += 2.0 * alpha.cwiseProduct(w);
  return g;
}

Matrix ncl_hessian(const PredictionMatrix& preds, const Vector& w, double lambda, const Vector& alpha) {
  check_shapes(preds, w, alpha);
  const auto n = static_cast<double>(preds.samples());
  const Matrix& p = preds.values();
  const Matrix gram = p.transpose() * p;
  const Vector u = gram * w;
  const double s = w.sum();
  const auto m = w.size();
  const Vector ones = Vector::Ones(m);
  Matrix h = -(lambda / n) * (2.0 * (u * ones.transpose() + ones * u.transpose()) - (4.0 - 2.0 * s) * gram);
  if (alpha.size() != 0) h.diagonal() += 2.0 * alpha;
  return h;
}

SolverProblem make_ncl_problem(const PredictionMatrix& preds, double lambda, const Vector& alpha) {
  auto data = std::make_shared<const PredictionMatrix>(centered(preds));
  SolverProblem problem;
  problem.dim = preds.models();
  problem.objective = [data, lambda, alpha](const Vector& w) { return ncl_objective(*data, w, lambda, alpha); };
  problem.gradient = [data, lambda, alpha](const Vector& w) { return ncl_gradient(*data, w, lambda, alpha); };
  problem.hessian = [data, lambda, alpha](const Vector& w) { return ncl_hessian(*data, w, lambda, alpha); };
  return problem;
}

NclFit fit_weights(const PredictionMatrix& preds_val, const NclConfig& config) {
  const std::size_t m = preds_val.models();
  config.validate(m);
  const Vector alpha = config.alpha_for(m);
  const SolverResult sr = solve(make_ncl_problem(preds_val, config.lambda, alpha), config.solver);

  NclFit fit;
  fit.weights = WeightVector::normalized(sr.w);
  fit.lambda_star = config.lambda;
  fit.model_names = preds_val.model_names();
  fit.validation_errors = error_triple(combine(preds_val, fit.weights), preds_val.y_true());
  fit.validation_error = combined_error(fit.validation_errors);
  for (std::size_t j = 0; j < m; ++j) {
    if (fit.weights[j] > config.support_epsilon) fit.support.push_back(j);
  }
  fit.converged = sr.converged;
  fit.objective_value = ncl_objective(preds_val, fit.weights.values(), config.lambda, alpha);
  fit.kkt_residual = sr.kkt_residual;
  fit.outer_iterations = sr.outer_iterations;
  fit.inner_iterations = sr.inner_iterations;
  fit.solver_invocations = 1;
  return fit;
}

NclFit search_lambda(const PredictionMatrix& preds_val, const NclConfig& config,
                     const std::optional<PredictionMatrix>& preds_score) {
  config.validate(preds_val.models());
  if (preds_score && preds_score->model_names() != preds_val.model_names()) {
    throw ContractViolation("scoring matrix columns do not match the fitting matrix");
  }
  const PredictionMatrix& scoring = preds_score ? *preds_score : preds_val;

  struct Evaluated {
    LambdaCandidate candidate;
    std::optional<NclFit> fit;
  };
  const auto evaluate = [&](double lambda) {
    Evaluated e;
    e.candidate.lambda = lambda;
    try {
      NclConfig c = config;
      c.lambda = lambda;
      NclFit fit = fit_weights(preds_val, c);
      if (preds_score) {
        fit.validation_errors = error_triple(combine(scoring, fit.weights), scoring.y_true());
        fit.validation_error = combined_error(fit.validation_errors);
      }
      e.candidate.validation_error = fit.validation_error;
      e.candidate.converged = fit.converged;
      e.fit = std::move(fit);
    } catch (const std::exception& ex) {
      e.candidate.failed = true;
      e.candidate.failure = ex.what();
      e.candidate.validation_error = std::numeric_limits<double>::infinity();
    }
    return e;
  };

  std::map<std::int64_t, Evaluated> memo;
  std::vector<LambdaCandidate> trace;
  int invocations = 0;

  double center = round_lambda(config.search.initial_lambda);
  double best_error = std::numeric_limits<double>::infinity();
  std::optional<NclFit> best;
  double step = config.search.initial_step;
  const double floor = config.search.step_floor * (1.0 - 1e-9);

  while (step >= floor) {
    std::map<std::int64_t, double> candidates;  // ordered by lambda
    for (int i = 0; i <= config.search.span; ++i) {
      for (const double raw : {center + i * step, center - i * step}) {
        const double lambda = round_lambda(raw);
        if (lambda < 0.0 || lambda > 1.0 || lambda == center) continue;
        candidates.emplace(memo_key(lambda), lambda);
      }
    }

    std::vector<std::pair<std::int64_t, std::future<Evaluated>>> pending;
    for (const auto& [key, lambda] : candidates) {
      if (memo.contains(key)) continue;
      const auto policy = config.search.parallel ? std::launch::async : std::launch::deferred;
      pending.emplace_back(key, std::async(policy, evaluate, lambda));
    }
    for (auto& [key, fut] : pending) {
      memo.emplace(key, fut.get());
      ++invocations;
    }

    for (const auto& [key, lambda] : candidates) {
      const Evaluated& e = memo.at(key);
      trace.push_back(e.candidate);
      if (e.candidate.failed) continue;
      const double err = e.candidate.validation_error;
      const bool better = err < best_error || (err == best_error && best && lambda < best->lambda_star);
      if (better) {
        best_error = err;
        best = *e.fit;
        center = lambda;
      }
    }
    step /= 10.0;
  }

  if (!best) throw NumericalFailure("lambda search failed: every candidate fit raised an error");
  NclFit out = std::move(*best);
  out.lambda_star = round_lambda(out.lambda_star);
  out.solver_invocations = invocations;
  out.trace = std::move(trace);
  return out;
}

Prediction predict(const NclFit& fit, const PredictionMatrix& preds_test) {
  if (!fit.model_names.empty() && fit.model_names != preds_test.model_names()) {
    throw ContractViolation("test matrix columns do not match the fitted models");
  }
  Prediction p;
  p.values = combine(preds_test, fit.weights);
  p.errors = error_triple(p.values, preds_test.y_true());
  return p;
}

std::string ncl_fit_json(const NclFit& fit) {
  nlohmann::ordered_json j;
  const Vector& w = fit.weights.values();
  j["weights"] = std::vector<double>(w.data(), w.data() + w.size());
  j["lambda_star"] = fit.lambda_star;
  j["validation_error"] = fit.validation_error;
  j["support"] = fit.support;
  j["converged"] = fit.converged;
  return j.dump();
}

}  // namespace nclens
