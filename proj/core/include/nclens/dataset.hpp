#pragma once

#include <string>
#include <vector>

#include "nclens/ensemble.hpp"

namespace nclens {

/// Numeric feature matrix with a regression target.
struct Dataset {
  Matrix features;
  Vector target;
  std::vector<std::string> feature_names;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(features.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(features.cols()); }

  /// Rows selected by index, in the given order.
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

}  // namespace nclens
