#include "nclens/baselines.hpp"

#include <cmath>
#include <iostream>
#include <set>

#include "nclens/errors.hpp"

namespace nclens {

namespace {

// Smallest acceptable eigenvalue ratio before a covariance counts as singular.
constexpr double kSingularRatio = 1e-12;

bool is_singular(const Matrix& c) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(c, Eigen::EigenvaluesOnly);
  const Vector ev = eig.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  return !(top > 0.0) || ev.minCoeff() <= kSingularRatio * top;
}

Vector normalized_row_sums(const Matrix& c) {
  const Matrix inv = c.ldlt().solve(Matrix::Identity(c.rows(), c.cols()));
  const Vector rows = inv.rowwise().sum();
  return rows / rows.sum();
}

}  // namespace

std::string weighter_name(WeighterKind kind) {
  switch (kind) {
    case WeighterKind::BEM: return "BEM";
    case WeighterKind::BEM_NCL: return "BEM-NCL";
    case WeighterKind::GEM: return "GEM";
    case WeighterKind::LR: return "LR";
    case WeighterKind::MDT: return "MDT";
    case WeighterKind::EIW: return "EIW";
    case WeighterKind::EEW: return "EEW";
  }
  throw ContractViolation("unknown weighter");
}

ErrorMetric parse_error_metric(const std::string& name) {
  if (name == "rmse") return ErrorMetric::RMSE;
  if (name == "mae") return ErrorMetric::MAE;
  if (name == "mape") return ErrorMetric::MAPE;
  if (name == "combined") return ErrorMetric::Combined;
  throw ContractViolation("unknown error metric '" + name + "'");
}

std::string error_metric_name(ErrorMetric metric) {
  switch (metric) {
    case ErrorMetric::RMSE: return "rmse";
    case ErrorMetric::MAE: return "mae";
    case ErrorMetric::MAPE: return "mape";
    case ErrorMetric::Combined: return "combined";
  }
  throw ContractViolation("unknown error metric");
}

Vector per_model_errors(const PredictionMatrix& preds, ErrorMetric metric) {
  Vector out(static_cast<Eigen::Index>(preds.models()));
  for (std::size_t j = 0; j < preds.models(); ++j) {
    const ErrorTriple e = error_triple(preds.column(j), preds.y_true());
    double v = 0.0;
    switch (metric) {
      case ErrorMetric::RMSE: v = e.rmse; break;
      case ErrorMetric::MAE: v = e.mae; break;
      case ErrorMetric::MAPE:
        if (!e.mape_defined) throw ContractViolation("MAPE is undefined: every target is zero");
        v = e.mape;
        break;
      case ErrorMetric::Combined: v = combined_error(e); break;
    }
    out(static_cast<Eigen::Index>(j)) = v;
  }
  return out;
}

WeightVector bem(std::size_t m) { return WeightVector::uniform(m); }

WeightVector bem_ncl(std::span<const std::size_t> support, std::size_t m) {
  if (support.empty()) throw ContractViolation("BEM-NCL needs a nonempty support");
  const std::set<std::size_t> unique(support.begin(), support.end());
  Vector w = Vector::Zero(static_cast<Eigen::Index>(m));
  for (const auto j : unique) {
    if (j >= m) throw ContractViolation("support index out of range");
    w(static_cast<Eigen::Index>(j)) = 1.0 / static_cast<double>(unique.size());
  }
  return WeightVector(std::move(w));
}

GemWeights gem(const PredictionMatrix& preds_val) {
  const auto m = static_cast<Eigen::Index>(preds_val.models());
  GemWeights out;
  if (m == 1) {
    out.weights = Vector::Ones(1);
    return out;
  }
  const Matrix err = (-preds_val.values()).colwise() + preds_val.y_true();
  Matrix c = err.transpose() * err / static_cast<double>(preds_val.samples());

  if (is_singular(c)) {
    out.ridge_applied = true;
    c.diagonal().array() += 1e-8 * c.trace() / static_cast<double>(m);
    if (is_singular(c)) {
      std::cerr << "warning: GEM error covariance is singular after ridge; falling back to BEM\n";
      out.fell_back_to_bem = true;
      out.weights = Vector::Constant(m, 1.0 / static_cast<double>(m));
      return out;
    }
  }
  out.weights = normalized_row_sums(c);
  if (!out.weights.allFinite()) {
    out.fell_back_to_bem = true;
    out.weights = Vector::Constant(m, 1.0 / static_cast<double>(m));
  }
  return out;
}

LinearStack lr_stack(const PredictionMatrix& preds_val) {
  const auto n = static_cast<Eigen::Index>(preds_val.samples());
  const auto m = static_cast<Eigen::Index>(preds_val.models());
  if (n < m) throw ContractViolation("LR stacking needs at least as many samples as models");
  Matrix x(n, m + 1);
  x.col(0).setOnes();
  x.rightCols(m) = preds_val.values();
  const Vector& y = preds_val.y_true();

  LinearStack out;
  Vector beta;
  const Eigen::ColPivHouseholderQR<Matrix> qr(x);
  if (qr.rank() == x.cols()) {
    beta = qr.solve(y);
  } else {
    out.ridge_applied = true;
    Matrix normal = x.transpose() * x;
    normal.diagonal().array() += 1e-10 * x.squaredNorm();
    beta = normal.ldlt().solve(x.transpose() * y);
  }
  out.intercept = beta(0);
  out.coefficients = beta.tail(m);
  return out;
}

MetaTree mdt(const PredictionMatrix& preds_val, const PredictionMatrix& preds_test, TreeOptions options) {
  if (preds_val.models() != preds_test.models()) throw ContractViolation("MDT validation and test columns differ");
  MetaTree out{RegressionTree(options), {}};
  out.tree.fit(preds_val.values(), preds_val.y_true());
  out.test_predictions = out.tree.predict(preds_test.values());
  return out;
}

WeightVector eiw(const Vector& errors) {
  if (errors.size() < 1) throw ContractViolation("EIW needs at least one error");
  if (!errors.allFinite() || errors.minCoeff() <= 0.0) throw ContractViolation("EIW needs strictly positive errors");
  const Vector inv = errors.cwiseInverse();
  return WeightVector::normalized(inv / inv.sum());
}

WeightVector eew(const Vector& errors) {
  if (errors.size() < 1) throw ContractViolation("EEW needs at least one error");
  if (!errors.allFinite()) throw ContractViolation("EEW needs finite errors");
  const Vector e = (-(errors.array() - errors.minCoeff())).exp();
  return WeightVector::normalized(e / e.sum());
}

}  // namespace nclens
