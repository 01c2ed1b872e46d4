#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "nclens/dataset.hpp"
#include "nclens/ensemble.hpp"

namespace nclens {

enum class Family { OLS, Ridge, PolynomialOLS, KNN, RegressionTree, BoostedStumps };

std::string family_name(Family family);
/// Accepts the names produced by family_name(); throws ContractViolation otherwise.
Family parse_family(const std::string& name);

using Params = std::map<std::string, double>;

/// A model family and its hyperparameter grid.
///
/// Grid points are enumerated in lexicographic key order with the last key
/// varying fastest. An empty grid has exactly one point (no parameters).
struct RegressorSpec {
  Family family = Family::OLS;
  std::map<std::string, std::vector<double>> grid;

  void validate() const;
  std::vector<Params> grid_points() const;
  /// Column label, e.g. `knn(k=5)`. Never contains a comma.
  std::string label(const Params& params) const;
};

/// The six-family pool used by the synthetic benchmark suite.
std::vector<RegressorSpec> default_pool();

class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual void fit(const Matrix& features, const Vector& target) = 0;
  virtual Vector predict(const Matrix& features) const = 0;
};

/// Missing parameters take family defaults; unknown parameter names are rejected.
std::unique_ptr<Regressor> make_regressor(Family family, const Params& params);

/// Fit on `train` and predict `eval_rows`.
Vector fit_predict(const RegressorSpec& spec, const Params& params, const Dataset& train, const Matrix& eval_rows);

/// Row indices of k folds after a seeded shuffle; fold sizes differ by at most one.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed);

struct CvResult {
  Params best_params;
  double mean_validation_error = 0.0;
  Vector per_fold_errors;
  /// Mean fold RMSE of every grid point, in grid order.
  std::vector<double> grid_errors;
};

/// Exhaustive grid search scored by mean fold RMSE; ties go to the earlier grid point.
CvResult grid_search_cv(const RegressorSpec& spec, const Dataset& train, std::size_t k = 5, std::uint64_t seed = 0);

struct SplitRatios {
  double train = 0.5;
  double validation = 0.1;

  void validate() const;
};

/// Test rows keep their features and targets apart so stage-1 code can only
/// pass features into prediction.
struct DataSplit {
  Dataset train;
  Dataset validation;
  Matrix test_features;
  Vector test_target;
};

/// Seeded shuffle, then train / validation / remainder-as-test.
DataSplit split_dataset(const Dataset& data, const SplitRatios& ratios, std::uint64_t seed);

struct PredictionMatrices {
  PredictionMatrix validation;
  PredictionMatrix test;
  std::vector<CvResult> cv;
};

/// Grid-search each spec on the training split, refit the winner on the
/// whole training split and predict validation and test rows.
PredictionMatrices build_prediction_matrix(const std::vector<RegressorSpec>& specs, const DataSplit& split,
                                           std::size_t folds = 5, std::uint64_t seed = 0);

enum class SynthKind { Linear, Piecewise, Friedman1, Sinusoidal };

std::string synth_kind_name(SynthKind kind);
SynthKind parse_synth_kind(const std::string& name);

/// Reproducible synthetic regression data; features are U(0,1), noise N(0, noise_sd^2).
///
///  - linear:     y = 1 + 2x1 - x2 + 0.5x3 + 3x4 - 1.5x5
///  - piecewise:  y = 4[x1 > 0.5] + 2x2 + 3[x3 > 0.25]   (x4 is noise)
///  - friedman1:  y = 10 sin(pi x1 x2) + 20(x3 - 0.5)^2 + 10x4 + 5x5   (x6, x7 are noise)
///  - sinusoidal: y = 2 sin(2 pi x1) + cos(pi x2) + x3
Dataset synth_dataset(SynthKind kind, std::size_t n, double noise_sd, std::uint64_t seed);

}  // namespace nclens
