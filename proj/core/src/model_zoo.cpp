#include "nclens/model_zoo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "nclens/csv_io.hpp"
#include "nclens/errors.hpp"
#include "nclens/regression_tree.hpp"

namespace nclens {

namespace {

Vector solve_least_squares(const Matrix& a, const Vector& b) {
  const Eigen::ColPivHouseholderQR<Matrix> qr(a);
  if (qr.rank() == a.cols()) return qr.solve(b);
  Matrix normal = a.transpose() * a;
  const double jitter = 1e-10 * std::max(1.0, normal.trace() / static_cast<double>(a.cols()));
  normal.diagonal().array() += jitter;
  return normal.ldlt().solve(a.transpose() * b);
}

Matrix with_intercept(const Matrix& x) {
  Matrix out(x.rows(), x.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(x.cols()) = x;
  return out;
}

double param_or(const Params& p, const std::string& key, double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

void check_params(const Params& p, std::initializer_list<const char*> allowed, const std::string& family) {
  for (const auto& [key, value] : p) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ContractViolation("unknown parameter '" + key + "' for family " + family);
    }
    if (!std::isfinite(value)) throw ContractViolation("parameter '" + key + "' must be finite");
  }
}

int as_int(double v, const char* what, int min_value) {
  const double r = std::round(v);
  if (r != v || r < min_value) {
    throw ContractViolation(std::string(what) + " must be an integer >= " + std::to_string(min_value));
  }
  return static_cast<int>(r);
}

class LinearModel : public Regressor {
 public:
  void fit(const Matrix& x, const Vector& y) override { coef_ = solve_least_squares(with_intercept(x), y); }
  Vector predict(const Matrix& x) const override { return with_intercept(x) * coef_; }

 private:
  Vector coef_;
};

class RidgeModel : public Regressor {
 public:
  explicit RidgeModel(double alpha) : alpha_(alpha) {
    if (!(alpha >= 0.0)) throw ContractViolation("ridge alpha must be nonnegative");
  }
  void fit(const Matrix& x, const Vector& y) override {
    mean_ = x.colwise().mean();
    const Matrix xc = x.rowwise() - mean_;
    const double ybar = y.mean();
    Matrix normal = xc.transpose() * xc;
    normal.diagonal().array() += alpha_;
    if (alpha_ == 0.0) normal.diagonal().array() += 1e-10 * std::max(1.0, normal.trace());
    beta_ = normal.ldlt().solve(xc.transpose() * (y.array() - ybar).matrix());
    intercept_ = ybar;
  }
  Vector predict(const Matrix& x) const override {
    Vector out = (x.rowwise() - mean_) * beta_;
    out.array() += intercept_;
    return out;
  }

 private:
  double alpha_;
  Eigen::RowVectorXd mean_;
  Vector beta_;
  double intercept_ = 0.0;
};

// Min-max scaled per-feature powers 1..degree plus pairwise products, then OLS.
class PolynomialModel : public Regressor {
 public:
  explicit PolynomialModel(int degree) : degree_(degree) {}
  void fit(const Matrix& x, const Vector& y) override {
    lo_ = x.colwise().minCoeff();
    Eigen::RowVectorXd range = x.colwise().maxCoeff() - lo_;
    range_ = range.unaryExpr([](double r) { return r > 0.0 ? r : 1.0; });
    linear_.fit(expand(x), y);
  }
  Vector predict(const Matrix& x) const override { return linear_.predict(expand(x)); }

 private:
  Matrix expand(const Matrix& x) const {
    const Matrix z = (x.rowwise() - lo_).array().rowwise() / range_.array();
    const auto d = z.cols();
    const Eigen::Index pairs = degree_ >= 2 ? d * (d - 1) / 2 : 0;
    Matrix out(z.rows(), d * degree_ + pairs);
    Eigen::Index c = 0;
    for (Eigen::Index f = 0; f < d; ++f) {
      Vector power = z.col(f);
      for (int p = 1; p <= degree_; ++p) {
        out.col(c++) = power;
        power = power.cwiseProduct(z.col(f));
      }
    }
    if (degree_ >= 2) {
      for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = a + 1; b < d; ++b) out.col(c++) = z.col(a).cwiseProduct(z.col(b));
      }
    }
    return out;
  }

  int degree_;
  Eigen::RowVectorXd lo_;
  Eigen::RowVectorXd range_;
  LinearModel linear_;
};

// Brute-force k nearest neighbours on standardised features; distance ties go to the lower row index.
class KnnModel : public Regressor {
 public:
  explicit KnnModel(int k) : k_(k) {}
  void fit(const Matrix& x, const Vector& y) override {
    mean_ = x.colwise().mean();
    Eigen::RowVectorXd sd = ((x.rowwise() - mean_).array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt();
    scale_ = sd.unaryExpr([](double s) { return s > 0.0 ? s : 1.0; });
    train_ = standardize(x);
    y_ = y;
  }
  Vector predict(const Matrix& x) const override {
    const Matrix q = standardize(x);
    const auto n = static_cast<std::size_t>(train_.rows());
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), n);
    Vector out(q.rows());
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      for (std::size_t r = 0; r < n; ++r) {
        dist[r] = {(train_.row(static_cast<Eigen::Index>(r)) - q.row(i)).squaredNorm(), r};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      double sum = 0.0;
      for (std::size_t t = 0; t < k; ++t) sum += y_(static_cast<Eigen::Index>(dist[t].second));
      out(i) = sum / static_cast<double>(k);
    }
    return out;
  }

 private:
  Matrix standardize(const Matrix& x) const { return (x.rowwise() - mean_).array().rowwise() / scale_.array(); }

  int k_;
  Eigen::RowVectorXd mean_;
  Eigen::RowVectorXd scale_;
  Matrix train_;
  Vector y_;
};

class TreeModel : public Regressor {
 public:
  explicit TreeModel(TreeOptions options) : tree_(options) {}
  void fit(const Matrix& x, const Vector& y) override { tree_.fit(x, y); }
  Vector predict(const Matrix& x) const override { return tree_.predict(x); }

 private:
  RegressionTree tree_;
};

// Least-squares gradient boosting over shallow trees.
class BoostedModel : public Regressor {
 public:
  BoostedModel(int rounds, double learning_rate, int depth) : rounds_(rounds), rate_(learning_rate), depth_(depth) {
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ContractViolation("learning_rate must lie in (0, 1]");
  }
  void fit(const Matrix& x, const Vector& y) override {
    base_ = y.mean();
    trees_.clear();
    Vector fitted = Vector::Constant(y.size(), base_);
    for (int t = 0; t < rounds_; ++t) {
      RegressionTree tree(TreeOptions{depth_, 2, 1});
      tree.fit(x, y - fitted);
      fitted += rate_ * tree.predict(x);
      trees_.push_back(std::move(tree));
    }
  }
  Vector predict(const Matrix& x) const override {
    Vector out = Vector::Constant(x.rows(), base_);
    for (const auto& tree : trees_) out += rate_ * tree.predict(x);
    return out;
  }

 private:
  int rounds_;
  double rate_;
  int depth_;
  double base_ = 0.0;
  std::vector<RegressionTree> trees_;
};

double rmse(const Vector& pred, const Vector& y) { return std::sqrt(mean_squared_error(pred, y)); }

}  // namespace

std::string family_name(Family family) {
  switch (family) {
    case Family::OLS: return "ols";
    case Family::Ridge: return "ridge";
    case Family::PolynomialOLS: return "poly";
    case Family::KNN: return "knn";
    case Family::RegressionTree: return "tree";
    case Family::BoostedStumps: return "boost";
  }
  throw ContractViolation("unknown model family");
}

Family parse_family(const std::string& name) {
  for (const auto f : {Family::OLS, Family::Ridge, Family::PolynomialOLS, Family::KNN, Family::RegressionTree,
                       Family::BoostedStumps}) {
    if (family_name(f) == name) return f;
  }
  throw ContractViolation("unknown model family '" + name + "'");
}

void RegressorSpec::validate() const {
  for (const auto& [key, values] : grid) {
    if (values.empty()) throw ContractViolation("grid for '" + key + "' is empty");
    for (const double v : values) {
      if (!std::isfinite(v)) throw ContractViolation("grid for '" + key + "' contains a non-finite value");
    }
  }
}

std::vector<Params> RegressorSpec::grid_points() const {
  validate();
  std::vector<Params> points{Params{}};
  for (const auto& [key, values] : grid) {
    std::vector<Params> next;
    next.reserve(points.size() * values.size());
    for (const auto& p : points) {
      for (const double v : values) {
        Params q = p;
        q[key] = v;
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

std::string RegressorSpec::label(const Params& params) const {
  std::string out = family_name(family);
  if (params.empty()) return out;
  out += '(';
  bool first = true;
  for (const auto& [key, value] : params) {
    if (!first) out += ';';
    first = false;
    out += key + '=' + io::format_double(value);
  }
  out += ')';
  return out;
}

std::vector<RegressorSpec> default_pool() {
  return {
      {Family::OLS, {}},
      {Family::Ridge, {{"alpha", {0.1, 1.0, 10.0}}}},
      {Family::PolynomialOLS, {{"degree", {2.0, 3.0}}}},
      {Family::KNN, {{"k", {3.0, 5.0, 10.0, 20.0}}}},
      {Family::RegressionTree, {{"max_depth", {3.0, 5.0, 8.0}}, {"min_samples_split", {2.0, 10.0}}}},
      {Family::BoostedStumps, {{"learning_rate", {0.1, 0.3}}, {"n_estimators", {50.0, 150.0}}}},
  };
}

std::unique_ptr<Regressor> make_regressor(Family family, const Params& params) {
  const std::string name = family_name(family);
  switch (family) {
    case Family::OLS:
      check_params(params, {}, name);
      return std::make_unique<LinearModel>();
    case Family::Ridge:
      check_params(params, {"alpha"}, name);
      return std::make_unique<RidgeModel>(param_or(params, "alpha", 1.0));
    case Family::PolynomialOLS:
      check_params(params, {"degree"}, name);
      return std::make_unique<PolynomialModel>(as_int(param_or(params, "degree", 2.0), "degree", 1));
    case Family::KNN:
      check_params(params, {"k"}, name);
      return std::make_unique<KnnModel>(as_int(param_or(params, "k", 5.0), "k", 1));
    case Family::RegressionTree: {
      check_params(params, {"max_depth", "min_samples_split", "min_samples_leaf"}, name);
      TreeOptions o;
      o.max_depth = as_int(param_or(params, "max_depth", 4.0), "max_depth", -1);
      o.min_samples_split = as_int(param_or(params, "min_samples_split", 2.0), "min_samples_split", 2);
      o.min_samples_leaf = as_int(param_or(params, "min_samples_leaf", 1.0), "min_samples_leaf", 1);
      return std::make_unique<TreeModel>(o);
    }
    case Family::BoostedStumps:
      check_params(params, {"n_estimators", "learning_rate", "max_depth"}, name);
      return std::make_unique<BoostedModel>(as_int(param_or(params, "n_estimators", 100.0), "n_estimators", 1),
                                            param_or(params, "learning_rate", 0.1),
                                            as_int(param_or(params, "max_depth", 1.0), "max_depth", 0));
  }
  throw ContractViolation("unknown model family");
}

Vector fit_predict(const RegressorSpec& spec, const Params& params, const Dataset& train, const Matrix& eval_rows) {
  if (train.rows() < 1) throw ContractViolation("training set is empty");
  if (eval_rows.cols() != train.features.cols()) throw ContractViolation("evaluation rows have a different feature count");
  if (!train.features.allFinite() || !train.target.allFinite() || !eval_rows.allFinite()) {
    throw ContractViolation("features and targets must be finite");
  }
  auto model = make_regressor(spec.family, params);
  model->fit(train.features, train.target);
  return model->predict(eval_rows);
}

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || n < k) throw ContractViolation("k-fold split needs 2 <= k <= n");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(f * n / k),
                    perm.begin() + static_cast<std::ptrdiff_t>((f + 1) * n / k));
  }
  return folds;
}

CvResult grid_search_cv(const RegressorSpec& spec, const Dataset& train, std::size_t k, std::uint64_t seed) {
  const auto folds = kfold_indices(train.rows(), k, seed);
  const auto points = spec.grid_points();

  // Fold datasets are shared by every grid point.
  std::vector<Dataset> fit_sets;
  std::vector<Dataset> held_out;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> rest;
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) rest.insert(rest.end(), folds[g].begin(), folds[g].end());
    }
    fit_sets.push_back(train.subset(rest));
    held_out.push_back(train.subset(folds[f]));
  }

  CvResult result;
  result.mean_validation_error = std::numeric_limits<double>::infinity();
  for (const auto& params : points) {
    Vector errors(static_cast<Eigen::Index>(k));
    for (std::size_t f = 0; f < k; ++f) {
      const Vector pred = fit_predict(spec, params, fit_sets[f], held_out[f].features);
      errors(static_cast<Eigen::Index>(f)) = rmse(pred, held_out[f].target);
    }
    const double mean = errors.mean();
    result.grid_errors.push_back(mean);
    if (mean < result.mean_validation_error) {
      result.mean_validation_error = mean;
      result.best_params = params;
      result.per_fold_errors = errors;
    }
  }
  if (result.per_fold_errors.size() == 0) throw NumericalFailure("grid search produced no finite fold error");
  return result;
}

void SplitRatios::validate() const {
  if (!(train > 0.0 && validation > 0.0 && train + validation < 1.0)) {
    throw ContractViolation("split ratios must be positive and leave room for a test split");
  }
}

DataSplit split_dataset(const Dataset& data, const SplitRatios& ratios, std::uint64_t seed) {
  ratios.validate();
  const std::size_t n = data.rows();
  const auto n_train = static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(ratios.validation * static_cast<double>(n)));
  if (n_train < 1 || n_val < 1 || n_train + n_val >= n) throw ContractViolation("dataset too small for the split ratios");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  const auto take = [&](std::size_t from, std::size_t to) {
    return data.subset(std::vector<std::size_t>(perm.begin() + static_cast<std::ptrdiff_t>(from),
                                                perm.begin() + static_cast<std::ptrdiff_t>(to)));
  };
  DataSplit split;
  split.train = take(0, n_train);
  split.validation = take(n_train, n_train + n_val);
  Dataset test = take(n_train + n_val, n);
  split.test_features = std::move(test.features);
  split.test_target = std::move(test.target);
  return split;
}

PredictionMatrices build_prediction_matrix(const std::vector<RegressorSpec>& specs, const DataSplit& split,
                                           std::size_t folds, std::uint64_t seed) {
  if (specs.empty()) throw ContractViolation("model pool is empty");
  const auto d = split.train.features.cols();
  if (split.validation.features.cols() != d || split.test_features.cols() != d) {
    throw ContractViolation("train, validation and test splits have different feature counts");
  }
  const auto m = static_cast<Eigen::Index>(specs.size());
  Matrix val(split.validation.features.rows(), m);
  Matrix test(split.test_features.rows(), m);
  std::vector<std::string> names;
  std::set<std::string> used;
  std::vector<CvResult> cv;

  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& spec = specs[static_cast<std::size_t>(j)];
    CvResult r = grid_search_cv(spec, split.train, folds, seed);
    auto model = make_regressor(spec.family, r.best_params);
    model->fit(split.train.features, split.train.target);
    val.col(j) = model->predict(split.validation.features);
    test.col(j) = model->predict(split.test_features);

    std::string name = spec.label(r.best_params);
    for (int suffix = 2; used.contains(name); ++suffix) name = spec.label(r.best_params) + "#" + std::to_string(suffix);
    used.insert(name);
    names.push_back(std::move(name));
    cv.push_back(std::move(r));
  }
  return {PredictionMatrix(std::move(val), split.validation.target, names),
          PredictionMatrix(std::move(test), split.test_target, names), std::move(cv)};
}

std::string synth_kind_name(SynthKind kind) {
  switch (kind) {
    case SynthKind::Linear: return "linear";
    case SynthKind::Piecewise: return "piecewise";
    case SynthKind::Friedman1: return "friedman1";
    case SynthKind::Sinusoidal: return "sinusoidal";
  }
  throw ContractViolation("unknown synthetic kind");
}

SynthKind parse_synth_kind(const std::string& name) {
  for (const auto k : {SynthKind::Linear, SynthKind::Piecewise, SynthKind::Friedman1, SynthKind::Sinusoidal}) {
    if (synth_kind_name(k) == name) return k;
  }
  throw ContractViolation("unknown synthetic kind '" + name + "'");
}

Dataset synth_dataset(SynthKind kind, std::size_t n, double noise_sd, std::uint64_t seed) {
  if (n < 20) throw ContractViolation("synthetic datasets need n >= 20");
  if (!(noise_sd >= 0.0)) throw ContractViolation("noise_sd must be nonnegative");
  const Eigen::Index d = [&] {
    switch (kind) {
      case SynthKind::Linear: return 5;
      case SynthKind::Piecewise: return 4;
      case SynthKind::Friedman1: return 7;
      case SynthKind::Sinusoidal: return 3;
    }
    return 0;
  }();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  constexpr double pi = std::numbers::pi;

  Dataset data;
  data.features.resize(static_cast<Eigen::Index>(n), d);
  data.target.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index f = 0; f < d; ++f) data.feature_names.push_back("x" + std::to_string(f + 1));

  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    for (Eigen::Index f = 0; f < d; ++f) data.features(i, f) = unif(rng);
    const auto x = data.features.row(i);
    double y = 0.0;
    switch (kind) {
      case SynthKind::Linear:
        y = 1.0 + 2.0 * x(0) - x(1) + 0.5 * x(2) + 3.0 * x(3) - 1.5 * x(4);
        break;
      case SynthKind::Piecewise:
        y = (x(0) > 0.5 ? 4.0 : 0.0) + 2.0 * x(1) + (x(2) > 0.25 ? 3.0 : 0.0);
        break;
      case SynthKind::Friedman1:
        y = 10.0 * std::sin(pi * x(0) * x(1)) + 20.0 * (x(2) - 0.5) * (x(2) - 0.5) + 10.0 * x(3) + 5.0 * x(4);
        break;
      case SynthKind::Sinusoidal:
        y = 2.0 * std::sin(2.0 * pi * x(0)) + std::cos(pi * x(1)) + x(2);
        break;
    }
    const double eps = noise(rng);
    data.target(i) = y + noise_sd * eps;
  }
  return data;
}

}  // namespace nclens
