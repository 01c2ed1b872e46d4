#include "nclens/regression_tree.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "nclens/errors.hpp"

namespace nclens {

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = -1.0;
  std::size_t left_count = 0;
};

}  // namespace

void RegressionTree::fit(const Matrix& features, const Vector& target) {
  if (features.rows() < 1 || features.rows() != target.size()) {
    throw ContractViolation("tree fit needs a nonempty feature matrix aligned with the target");
  }
  if (options_.min_samples_leaf < 1 || options_.min_samples_split < 2) {
    throw ContractViolation("tree needs min_samples_leaf >= 1 and min_samples_split >= 2");
  }
  nodes_.clear();
  n_features_ = features.cols();
  std::vector<std::size_t> rows(static_cast<std::size_t>(features.rows()));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  grow(features, target, rows, 0);
}

int RegressionTree::grow(const Matrix& x, const Vector& y, std::vector<std::size_t>& rows, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();

  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto r : rows) {
    const double v = y(static_cast<Eigen::Index>(r));
    sum += v;
    sum_sq += v * v;
  }
  const auto count = rows.size();
  const double mean = sum / static_cast<double>(count);
  nodes_[id].value = mean;
  nodes_[id].samples = count;

  double node_sse = 0.0;
  for (const auto r : rows) {
    const double d = y(static_cast<Eigen::Index>(r)) - mean;
    node_sse += d * d;
  }

  const bool depth_left = options_.max_depth < 0 || depth < options_.max_depth;
  if (!depth_left || count < static_cast<std::size_t>(options_.min_samples_split) || node_sse <= 0.0) {
    return id;
  }

  const auto min_leaf = static_cast<std::size_t>(options_.min_samples_leaf);
  Split best;
  std::vector<std::size_t> order = rows;
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return x(static_cast<Eigen::Index>(a), f) < x(static_cast<Eigen::Index>(b), f);
    });
    double left_sum = 0.0;
    for (std::size_t k = 0; k + 1 < count; ++k) {
      left_sum += y(static_cast<Eigen::Index>(order[k]));
      const double here = x(static_cast<Eigen::Index>(order[k]), f);
      const double next = x(static_cast<Eigen::Index>(order[k + 1]), f);
      if (!(here < next)) continue;
      const std::size_t nl = k + 1;
      const std::size_t nr = count - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      const double right_sum = sum - left_sum;
      // SSE reduction = sum_l^2/n_l + sum_r^2/n_r - sum^2/n
      const double gain = left_sum * left_sum / static_cast<double>(nl) +
                          right_sum * right_sum / static_cast<double>(nr) - sum * sum / static_cast<double>(count);
      if (gain > best.gain) {
        best = {static_cast<int>(f), here + 0.5 * (next - here), gain, nl};
        if (!(best.threshold < next) || best.threshold < here) best.threshold = here;
      }
    }
  }
  if (best.feature < 0) return id;

  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
  for (const auto r : rows) {
    (x(static_cast<Eigen::Index>(r), best.feature) <= best.threshold ? left : right).push_back(r);
  }
  if (left.empty() || right.empty()) return id;
  rows.clear();
  rows.shrink_to_fit();

  nodes_[id].feature = best.feature;
  nodes_[id].threshold = best.threshold;
  const int l = grow(x, y, left, depth + 1);
  nodes_[id].left = l;
  const int r = grow(x, y, right, depth + 1);
  nodes_[id].right = r;
  return id;
}

double RegressionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  if (nodes_.empty()) throw ContractViolation("tree has not been fitted");
  if (row.size() != n_features_) throw ContractViolation("feature count does not match the fitted tree");
  int id = 0;
  while (!nodes_[static_cast<std::size_t>(id)].is_leaf()) {
    const auto& node = nodes_[static_cast<std::size_t>(id)];
    id = row(node.feature) <= node.threshold ? node.left : node.right;
  }
  return nodes_[static_cast<std::size_t>(id)].value;
}

Vector RegressionTree::predict(const Matrix& features) const {
  Vector out(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i) out(i) = predict_row(features.row(i));
  return out;
}

int RegressionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::function<int(int)> walk = [&](int id) -> int {
    const auto& node = nodes_[static_cast<std::size_t>(id)];
    if (node.is_leaf()) return 0;
    return 1 + std::max(walk(node.left), walk(node.right));
  };
  return walk(0);
}

}  // namespace nclens
