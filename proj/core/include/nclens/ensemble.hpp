#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nclens {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Predictions of m sub-models on n samples, with the aligned ground truth.
///
/// Rows are samples, columns are sub-models. The constructor rejects empty
/// shapes, non-finite entries, misaligned targets and duplicate model names.
class PredictionMatrix {
 public:
  PredictionMatrix(Matrix values, Vector y_true, std::vector<std::string> model_names);

  const Matrix& values() const noexcept { return values_; }
  const Vector& y_true() const noexcept { return y_true_; }
  const std::vector<std::string>& model_names() const noexcept { return names_; }

  std::size_t samples() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t models() const noexcept { return static_cast<std::size_t>(values_.cols()); }

  /// Column j as a view.
  auto column(std::size_t j) const { return values_.col(static_cast<Eigen::Index>(j)); }

  /// Keep rows in [begin, end).
  PredictionMatrix row_slice(std::size_t begin, std::size_t end) const;
  /// Keep only the listed columns, in the given order.
  PredictionMatrix select_columns(std::span<const std::size_t> columns) const;

 private:
  Matrix values_;
  Vector y_true_;
  std::vector<std::string> names_;
};

/// A point on the probability simplex: every entry in [0, 1], entries sum to 1.
class WeightVector {
 public:
  static constexpr double kSumTolerance = 1e-9;

  /// Validates; throws ContractViolation if `w` is not on the simplex.
  explicit WeightVector(Vector w);

  /// Clamps tiny negative roundoff to zero and rescales to unit sum before validating.
  static WeightVector normalized(Vector w);
  static WeightVector uniform(std::size_t m);
  static WeightVector one_hot(std::size_t m, std::size_t j);

  const Vector& values() const noexcept { return w_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(w_.size()); }
  double operator[](std::size_t j) const { return w_(static_cast<Eigen::Index>(j)); }

 private:
  Vector w_;
};

/// RMSE, MAE and MAPE of a prediction vector.
///
/// MAPE is a raw ratio (not multiplied by 100). Samples whose target is
/// (numerically) zero are left out of the MAPE mean and counted in
/// `mape_skipped`; if every target is zero `mape_defined` is false.
struct ErrorTriple {
  double rmse = 0.0;
  double mae = 0.0;
  double mape = 0.0;
  bool mape_defined = true;
  std::size_t mape_skipped = 0;
};

/// Targets with |y| below this are excluded from MAPE.
inline constexpr double kMapeZeroThreshold = 1e-12;

/// Ambiguity and bias/variance/covariance diagnostics.
///
/// ambiguity_decomposition() fills the MSE fields; bvc_decomposition() fills
/// the B/V/C fields. `bias_term` holds the squared bias averaged over samples.
struct DecompositionReport {
  double ensemble_mse = 0.0;
  double weighted_member_mse = 0.0;
  double ambiguity = 0.0;
  double bias_term = 0.0;
  double variance_term = 0.0;
  double covariance_term = 0.0;
  double reconstructed_mse = 0.0;
  double empirical_mse = 0.0;
};

/// Row-wise weighted sum of the prediction columns.
Vector combine(const PredictionMatrix& preds, const WeightVector& w);
/// Affine combination with arbitrary coefficients (used by stacking baselines).
Vector combine_affine(const PredictionMatrix& preds, const Vector& coefficients, double intercept = 0.0);

ErrorTriple error_triple(const Vector& pred, const Vector& y);

/// Mean of RMSE, MAE and MAPE; mean of RMSE and MAE alone when MAPE is undefined.
double combined_error(const ErrorTriple& e);

double mean_squared_error(const Vector& pred, const Vector& y);
/// Per-column MSE against y_true.
Vector member_mse(const PredictionMatrix& preds);

DecompositionReport ambiguity_decomposition(const PredictionMatrix& preds, const WeightVector& w);

/// Bias/variance/covariance of the simple-average ensemble over repeated trials.
///
/// Expectations are sample means over trials (no Bessel correction), taken per
/// sample and then averaged over samples. Throws if fewer than two trials or
/// fewer than two models are supplied.
DecompositionReport bvc_decomposition(std::span<const PredictionMatrix> trials, const Vector& y_hat);

/// Population Pearson correlation; 0 when either input is constant.
double pearson(const Vector& a, const Vector& b);

/// Median absolute pairwise Pearson correlation between columns (lower = more diverse).
double diversity_score(const PredictionMatrix& preds);

}  // namespace nclens
