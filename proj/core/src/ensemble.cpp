#include "nclens/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "nclens/errors.hpp"

namespace nclens {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ContractViolation(what);
}

bool is_constant(const Vector& v) {
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) != v(0)) return false;
  }
  return true;
}

}  // namespace

PredictionMatrix::PredictionMatrix(Matrix values, Vector y_true, std::vector<std::string> model_names)
    : values_(std::move(values)), y_true_(std::move(y_true)), names_(std::move(model_names)) {
  require(values_.rows() >= 1 && values_.cols() >= 1, "prediction matrix must have n >= 1 rows and m >= 1 columns");
  require(y_true_.size() == values_.rows(), "y_true length does not match prediction rows");
  require(names_.size() == static_cast<std::size_t>(values_.cols()), "model_names length does not match prediction columns");
  require(values_.allFinite(), "prediction matrix contains NaN or Inf");
  require(y_true_.allFinite(), "y_true contains NaN or Inf");
  std::unordered_set<std::string> seen;
  for (const auto& name : names_) {
    require(seen.insert(name).second, "model names must be unique");
  }
}

PredictionMatrix PredictionMatrix::row_slice(std::size_t begin, std::size_t end) const {
  require(begin < end && end <= samples(), "row slice out of range");
  const auto b = static_cast<Eigen::Index>(begin);
  const auto len = static_cast<Eigen::Index>(end - begin);
  return {values_.middleRows(b, len), y_true_.segment(b, len), names_};
}

PredictionMatrix PredictionMatrix::select_columns(std::span<const std::size_t> columns) const {
  require(!columns.empty(), "column selection is empty");
  Matrix out(values_.rows(), static_cast<Eigen::Index>(columns.size()));
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (std::size_t k = 0; k < columns.size(); ++k) {
    require(columns[k] < models(), "column index out of range");
    out.col(static_cast<Eigen::Index>(k)) = column(columns[k]);
    names.push_back(names_[columns[k]]);
  }
  return {std::move(out), y_true_, std::move(names)};
}

WeightVector::WeightVector(Vector w) : w_(std::move(w)) {
  require(w_.size() >= 1, "weight vector is empty");
  require(w_.allFinite(), "weight vector contains NaN or Inf");
  require(w_.minCoeff() >= 0.0 && w_.maxCoeff() <= 1.0, "weights must lie in [0, 1]");
  require(std::abs(w_.sum() - 1.0) <= kSumTolerance, "weights must sum to 1");
}

WeightVector WeightVector::normalized(Vector w) {
  require(w.size() >= 1 && w.allFinite(), "cannot normalize an empty or non-finite weight vector");
  w = w.cwiseMax(0.0);
  const double total = w.sum();
  require(total > 0.0, "cannot normalize a weight vector with no positive mass");
  w /= total;
  return WeightVector(std::move(w));
}

WeightVector WeightVector::uniform(std::size_t m) {
  require(m >= 1, "uniform weights need m >= 1");
  return WeightVector(Vector::Constant(static_cast<Eigen::Index>(m), 1.0 / static_cast<double>(m)));
}

WeightVector WeightVector::one_hot(std::size_t m, std::size_t j) {
  require(j < m, "one-hot index out of range");
  Vector w = Vector::Zero(static_cast<Eigen::Index>(m));
  w(static_cast<Eigen::Index>(j)) = 1.0;
  return WeightVector(std::move(w));
}

Vector combine(const PredictionMatrix& preds, const WeightVector& w) {
  require(w.size() == preds.models(), "weight vector length does not match number of models");
  return preds.values() * w.values();
}

Vector combine_affine(const PredictionMatrix& preds, const Vector& coefficients, double intercept) {
  require(static_cast<std::size_t>(coefficients.size()) == preds.models(),
          "coefficient vector length does not match number of models");
  Vector out = preds.values() * coefficients;
  out.array() += intercept;
  return out;
}

ErrorTriple error_triple(const Vector& pred, const Vector& y) {
  require(pred.size() == y.size(), "prediction and target lengths differ");
  require(pred.size() >= 1, "error metrics need at least one sample");
  const Vector diff = pred - y;
  const auto n = static_cast<double>(y.size());

  ErrorTriple e;
  e.rmse = std::sqrt(diff.squaredNorm() / n);
  e.mae = diff.cwiseAbs().sum() / n;

  double ape = 0.0;
  std::size_t used = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (std::abs(y(i)) < kMapeZeroThreshold) {
      ++e.mape_skipped;
      continue;
    }
    ape += std::abs(diff(i) / y(i));
    ++used;
  }
  e.mape_defined = used > 0;
  e.mape = e.mape_defined ? ape / static_cast<double>(used) : 0.0;
  return e;
}

double combined_error(const ErrorTriple& e) {
  if (!e.mape_defined) return (e.rmse + e.mae) / 2.0;
  return (e.rmse + e.mae + e.mape) / 3.0;
}

double mean_squared_error(const Vector& pred, const Vector& y) {
  require(pred.size() == y.size() && y.size() >= 1, "prediction and target lengths differ");
  return (pred - y).squaredNorm() / static_cast<double>(y.size());
}

Vector member_mse(const PredictionMatrix& preds) {
  const auto n = static_cast<double>(preds.samples());
  return (preds.values().colwise() - preds.y_true()).colwise().squaredNorm().transpose() / n;
}

DecompositionReport ambiguity_decomposition(const PredictionMatrix& preds, const WeightVector& w) {
  const Vector fh = combine(preds, w);
  const Vector zeta = member_mse(preds);
  const auto n = static_cast<double>(preds.samples());

  DecompositionReport r;
  r.weighted_member_mse = w.values().dot(zeta);
  const Vector spread = (preds.values().colwise() - fh).colwise().squaredNorm().transpose() / n;
  r.ambiguity = w.values().dot(spread);
  r.ensemble_mse = r.weighted_member_mse - r.ambiguity;
  r.empirical_mse = mean_squared_error(fh, preds.y_true());
  r.reconstructed_mse = r.ensemble_mse;
  return r;
}

DecompositionReport bvc_decomposition(std::span<const PredictionMatrix> trials, const Vector& y_hat) {
  require(trials.size() >= 2, "bias-variance-covariance decomposition needs at least two trials");
  const std::size_t n = trials.front().samples();
  const std::size_t m = trials.front().models();
  if (m < 2) throw ContractViolation("covariance term is undefined for fewer than two models");
  require(static_cast<std::size_t>(y_hat.size()) == n, "y_hat length does not match trial rows");
  for (const auto& t : trials) {
    require(t.samples() == n && t.models() == m, "all trials must share the same shape");
  }

  const auto nt = static_cast<double>(trials.size());
  const auto md = static_cast<double>(m);
  const auto ni = static_cast<Eigen::Index>(n);
  const auto mi = static_cast<Eigen::Index>(m);

  Matrix mean = Matrix::Zero(ni, mi);
  for (const auto& t : trials) mean += t.values();
  mean /= nt;

  DecompositionReport r;
  double bias_sq = 0.0;
  double variance = 0.0;
  double covariance = 0.0;
  double empirical = 0.0;
  for (Eigen::Index i = 0; i < ni; ++i) {
    const double bias = (mean.row(i).array() - y_hat(i)).sum() / md;
    bias_sq += bias * bias;

    Matrix cov = Matrix::Zero(mi, mi);
    for (const auto& t : trials) {
      const Eigen::RowVectorXd dev = t.values().row(i) - mean.row(i);
      cov.noalias() += dev.transpose() * dev;
      const double fh = t.values().row(i).sum() / md;
      empirical += (fh - y_hat(i)) * (fh - y_hat(i));
    }
    cov /= nt;
    const double trace = cov.trace();
    variance += trace / md;
    covariance += (cov.sum() - trace) / (md * (md - 1.0));
  }
  const auto nd = static_cast<double>(n);
  r.bias_term = bias_sq / nd;
  r.variance_term = variance / nd;
  r.covariance_term = covariance / nd;
  r.reconstructed_mse = r.bias_term + r.variance_term / md + (1.0 - 1.0 / md) * r.covariance_term;
  r.empirical_mse = empirical / (nd * nt);
  r.ensemble_mse = r.empirical_mse;
  return r;
}

double pearson(const Vector& a, const Vector& b) {
  require(a.size() == b.size() && a.size() >= 1, "pearson inputs must have equal nonzero length");
  if (is_constant(a) || is_constant(b)) return 0.0;
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
  if (denom == 0.0) return 0.0;
  return std::clamp(da.dot(db) / denom, -1.0, 1.0);
}

double diversity_score(const PredictionMatrix& preds) {
  const std::size_t m = preds.models();
  require(m >= 2, "diversity needs at least two models");
  std::vector<double> corr;
  corr.reserve(m * (m - 1) / 2);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = j + 1; k < m; ++k) {
      corr.push_back(std::abs(pearson(preds.column(j), preds.column(k))));
    }
  }
  std::sort(corr.begin(), corr.end());
  const std::size_t half = corr.size() / 2;
  if (corr.size() % 2 == 1) return corr[half];
  return 0.5 * (corr[half - 1] + corr[half]);
}

}  // namespace nclens
