#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "nclens/ensemble.hpp"
#include "nclens/regression_tree.hpp"

namespace nclens {

enum class WeighterKind { BEM, BEM_NCL, GEM, LR, MDT, EIW, EEW };

std::string weighter_name(WeighterKind kind);

/// Which per-model validation error drives EIW and EEW.
enum class ErrorMetric { RMSE, MAE, MAPE, Combined };

ErrorMetric parse_error_metric(const std::string& name);
std::string error_metric_name(ErrorMetric metric);

/// Per-column validation error under `metric`.
Vector per_model_errors(const PredictionMatrix& preds, ErrorMetric metric);

/// Uniform weights 1/m.
WeightVector bem(std::size_t m);

/// Uniform over `support`, zero elsewhere. Throws on an empty or out-of-range support.
WeightVector bem_ncl(std::span<const std::size_t> support, std::size_t m);

/// Generalised ensemble weights: row sums of the inverse error covariance,
/// normalised to unit sum. Entries may be negative.
struct GemWeights {
  Vector weights;
  bool ridge_applied = false;
  bool fell_back_to_bem = false;
};

GemWeights gem(const PredictionMatrix& preds_val);

/// Least-squares stacking with intercept; coefficients are unconstrained.
struct LinearStack {
  Vector coefficients;
  double intercept = 0.0;
  bool ridge_applied = false;

  Vector predict(const PredictionMatrix& preds) const { return combine_affine(preds, coefficients, intercept); }
};

LinearStack lr_stack(const PredictionMatrix& preds_val);

/// Meta decision tree: a regression tree on the sub-model predictions.
struct MetaTree {
  RegressionTree tree;
  Vector test_predictions;
};

MetaTree mdt(const PredictionMatrix& preds_val, const PredictionMatrix& preds_test, TreeOptions options = {});

/// Error-inverse weights (1/e_j) / sum_k (1/e_k). Throws unless every error is positive.
WeightVector eiw(const Vector& errors);

/// Error-exponential weights exp(-e_j) / sum_k exp(-e_k), shifted by min(e) for stability.
WeightVector eew(const Vector& errors);

}  // namespace nclens
