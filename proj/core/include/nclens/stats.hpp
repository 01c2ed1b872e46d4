#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nclens/ensemble.hpp"

namespace nclens::stats {

/// Datasets x methods error table with per-row ranks (1 = lowest error,
/// ties share the average rank) and per-method mean ranks.
struct RankTable {
  Matrix errors;
  Matrix ranks;
  Vector mean_ranks;

  std::size_t datasets() const noexcept { return static_cast<std::size_t>(errors.rows()); }
  std::size_t methods() const noexcept { return static_cast<std::size_t>(errors.cols()); }
};

RankTable rank_table(const Matrix& errors);

struct FriedmanResult {
  double chi_square = 0.0;
  double p_value = 1.0;
  int degrees_of_freedom = 0;
};

/// Friedman chi-square on mean ranks; p from the chi-square tail with K-1 degrees of freedom.
FriedmanResult friedman_statistic(const RankTable& table);

/// Regularised lower / upper incomplete gamma functions P(a, x) and Q(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double dof);

/// Studentized-range critical value q_alpha / sqrt(2) for K methods (2..20), alpha in {0.05, 0.10}.
double nemenyi_q(std::size_t k, double alpha);

/// Nemenyi critical difference q_alpha * sqrt(K(K+1) / (6D)).
double nemenyi_cd(std::size_t k, std::size_t d, double alpha = 0.05);

/// Method pairs (a < b) whose mean-rank gap exceeds `cd`.
std::vector<std::pair<std::size_t, std::size_t>> significance_pairs(const RankTable& table, double cd);

/// CSV rows `method,mean_rank,interval_low,interval_high` where the interval is mean_rank +- cd/2.
void write_cd_diagram(std::ostream& out, const RankTable& table, const std::vector<std::string>& methods, double cd);

}  // namespace nclens::stats
