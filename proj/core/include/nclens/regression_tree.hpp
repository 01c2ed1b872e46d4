#pragma once

#include <cstddef>
#include <vector>

#include "nclens/ensemble.hpp"

namespace nclens {

struct TreeOptions {
  /// Depth limit; negative means unlimited. Depth 0 is a single leaf.
  int max_depth = 4;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
};

/// CART regression tree with squared-error splits.
///
/// Nodes are stored flat; node 0 is the root. Split rule: go left when
/// x[feature] <= threshold. Thresholds are midpoints between adjacent
/// distinct feature values, so no leaf is ever empty.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    std::size_t samples = 0;

    bool is_leaf() const noexcept { return feature < 0; }
  };

  RegressionTree() = default;
  explicit RegressionTree(TreeOptions options) : options_(options) {}

  void fit(const Matrix& features, const Vector& target);
  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  Vector predict(const Matrix& features) const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const TreeOptions& options() const noexcept { return options_; }
  int depth() const;

 private:
  int grow(const Matrix& x, const Vector& y, std::vector<std::size_t>& rows, int depth);

  TreeOptions options_;
  std::vector<Node> nodes_;
  Eigen::Index n_features_ = 0;
};

}  // namespace nclens
