#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nclens/baselines.hpp"
#include "nclens/ensemble.hpp"
#include "nclens/model_zoo.hpp"
#include "nclens/ncl.hpp"
#include "nclens/stats.hpp"

namespace nclens {

enum class Method { NCL, NCL_R, BEM, BEM_NCL, GEM, LR, MDT, EIW, EEW };

std::string method_name(Method method);
/// Case-insensitive; accepts e.g. `ncl`, `ncl-r`, `bem-ncl`.
Method parse_method(const std::string& name);
std::vector<Method> parse_methods(const std::string& comma_separated);
std::vector<Method> all_methods();

/// Stage-2 inputs supplied directly.
struct MatrixInput {
  PredictionMatrix validation;
  PredictionMatrix test;
};

/// Raw dataset; stage 1 builds the prediction matrices.
struct DatasetInput {
  Dataset data;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::variant<DatasetInput, MatrixInput> input;
  SplitRatios split;
  std::uint64_t seed = 42;
  std::size_t folds = 5;
  std::vector<RegressorSpec> pool = default_pool();
  std::vector<Method> methods = all_methods();
  /// `ncl.lambda` is used when auto_lambda is false; `ncl.alpha` is ignored (NCL-R sets its own).
  NclConfig ncl;
  bool auto_lambda = true;
  double regularization_strength = 0.05;
  ErrorMetric weighting_metric = ErrorMetric::RMSE;
  TreeOptions mdt_tree;
  /// When > 0, this fraction of validation rows (the tail) scores lambda candidates
  /// and the rest fits weights.
  double lambda_holdout = 0.0;
  /// Empty: nothing is written.
  std::filesystem::path output_dir;
};

struct Improvement {
  double rmse = 0.0;
  double mae = 0.0;
  double mape = 0.0;
};

struct MethodReport {
  Method method = Method::BEM;
  bool ok = false;
  std::string error;
  /// Simplex weights or, for GEM/LR, affine coefficients. Empty for MDT.
  Vector weights;
  std::optional<double> intercept;
  std::optional<RegressionTree> tree;
  ErrorTriple validation;
  ErrorTriple test;
  std::optional<double> lambda_star;
  std::vector<std::size_t> support;
  bool converged = true;
  int solver_invocations = 0;
  Improvement improvement_vs_bem;
  Vector test_predictions;
  std::vector<std::string> notes;
};

struct FitReport {
  std::string name;
  std::vector<std::string> model_names;
  std::size_t validation_rows = 0;
  std::size_t test_rows = 0;
  double diversity = 0.0;
  std::vector<MethodReport> methods;
  std::vector<std::string> warnings;

  const MethodReport* find(Method m) const;
  bool all_ok() const;
};

/// 100 * (baseline - value) / baseline; positive means `value` is better.
double improvement_percent(double baseline, double value);

/// Stage-1 output for a dataset config (identity for matrix inputs).
MatrixInput prepare_matrices(const ExperimentConfig& config);

/// Stage 2 on already-built matrices.
FitReport combine_methods(const ExperimentConfig& config, const PredictionMatrix& validation, const PredictionMatrix& test);

/// Full run: stage 1 if needed, stage 2, and persistence to config.output_dir.
FitReport run_experiment(const ExperimentConfig& config);

std::string report_json(const FitReport& report);
void write_report(const std::filesystem::path& dir, const FitReport& report, const PredictionMatrix& validation,
                  const PredictionMatrix& test);

/// 64-bit FNV-1a of the text, as 16 hex digits.
std::string fingerprint(const std::string& text);

struct SweepRow {
  double lambda = 0.0;
  bool ok = false;
  ErrorTriple validation;
  ErrorTriple test;
  Vector weights;
};

/// fit_weights at each lambda; failed fits are kept with ok = false.
std::vector<SweepRow> lambda_sweep(const PredictionMatrix& validation, const PredictionMatrix& test,
                                   const std::vector<double>& grid, const NclConfig& ncl = {});
/// `start:stop:step` inclusive of stop (within half a step).
std::vector<double> parse_grid(const std::string& spec);
/// Columns: lambda,val_rmse,val_mae,val_mape,test_rmse,test_mae,test_mape. Failed rows are omitted.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

struct CompareMetric {
  std::string metric;
  stats::RankTable table;
  stats::FriedmanResult friedman;
  double critical_difference = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> significant_pairs;
};

struct CompareResult {
  std::vector<std::string> datasets;
  std::vector<std::string> methods;
  std::vector<std::string> excluded;
  std::vector<CompareMetric> metrics;
  std::vector<FitReport> reports;
};

struct CompareConfig {
  std::vector<Method> methods = all_methods();
  double alpha = 0.05;
  /// Worker threads for datasets; 0 picks the hardware concurrency.
  unsigned threads = 0;
  std::filesystem::path output_dir;
};

/// Run every config, rank test errors per metric, and apply Friedman/Nemenyi.
CompareResult batch_compare(const std::vector<ExperimentConfig>& experiments, const CompareConfig& config);

/// Twenty-ish synthetic datasets cycling through every generator and noise level.
std::vector<ExperimentConfig> synthetic_suite(std::size_t count, std::uint64_t seed, std::size_t rows = 600);

/// Seed override from the NCLENS_SEED environment variable, if set and valid.
std::optional<std::uint64_t> seed_from_environment();

}  // namespace nclens
