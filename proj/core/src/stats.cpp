#include "nclens/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "nclens/csv_io.hpp"
#include "nclens/errors.hpp"

namespace nclens::stats {

namespace {

// Critical values of the Nemenyi test: studentized range quantiles for
// infinitely many degrees of freedom divided by sqrt(2), three decimals.
// K = 2..10 are the widely published values; K = 11..20 extend the same quantity.
constexpr std::array<double, 19> kQ005 = {1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164, 3.219,
                                          3.268, 3.313, 3.354, 3.391, 3.426, 3.458, 3.489, 3.517, 3.544};
constexpr std::array<double, 19> kQ010 = {1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920, 2.978,
                                          3.030, 3.077, 3.120, 3.159, 3.196, 3.230, 3.261, 3.291, 3.319};

constexpr int kMaxIterations = 500;
constexpr double kEps = 1e-15;

double series_p(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < kMaxIterations; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
double continued_fraction_q(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

RankTable rank_table(const Matrix& errors) {
  if (errors.rows() < 1 || errors.cols() < 1) throw ContractViolation("rank table needs at least one dataset and one method");
  if (!errors.allFinite()) throw ContractViolation("rank table errors must be finite");
  const auto d = errors.rows();
  const auto k = errors.cols();
  RankTable t{errors, Matrix(d, k), Vector()};
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  for (Eigen::Index r = 0; r < d; ++r) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return errors(r, a) < errors(r, b); });
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t j = i;
      while (j + 1 < order.size() && errors(r, order[j + 1]) == errors(r, order[i])) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t q = i; q <= j; ++q) t.ranks(r, order[q]) = avg;
      i = j + 1;
    }
  }
  t.mean_ranks = t.ranks.colwise().mean().transpose();
  return t;
}

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw ContractViolation("incomplete gamma needs a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  return x < a + 1.0 ? series_p(a, x) : 1.0 - continued_fraction_q(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw ContractViolation("incomplete gamma needs a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  return x < a + 1.0 ? 1.0 - series_p(a, x) : continued_fraction_q(a, x);
}

double chi_square_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * dof, 0.5 * x);
}

FriedmanResult friedman_statistic(const RankTable& table) {
  const auto d = static_cast<double>(table.datasets());
  const auto k = static_cast<double>(table.methods());
  if (table.datasets() < 2 || table.methods() < 2) throw ContractViolation("Friedman test needs D >= 2 and K >= 2");
  FriedmanResult r;
  r.degrees_of_freedom = static_cast<int>(table.methods()) - 1;
  const double spread = table.mean_ranks.squaredNorm() - k * (k + 1.0) * (k + 1.0) / 4.0;
  r.chi_square = std::max(0.0, 12.0 * d / (k * (k + 1.0)) * spread);
  r.p_value = chi_square_sf(r.chi_square, r.degrees_of_freedom);
  return r;
}

double nemenyi_q(std::size_t k, double alpha) {
  if (k < 2 || k > 20) throw ContractViolation("Nemenyi table covers 2 <= K <= 20");
  if (std::abs(alpha - 0.05) < 1e-12) return kQ005[k - 2];
  if (std::abs(alpha - 0.10) < 1e-12) return kQ010[k - 2];
  throw ContractViolation("Nemenyi table covers alpha = 0.05 or 0.10 only");
}

double nemenyi_cd(std::size_t k, std::size_t d, double alpha) {
  if (d < 1) throw ContractViolation("Nemenyi critical difference needs D >= 1");
  const auto kd = static_cast<double>(k);
  return nemenyi_q(k, alpha) * std::sqrt(kd * (kd + 1.0) / (6.0 * static_cast<double>(d)));
}

std::vector<std::pair<std::size_t, std::size_t>> significance_pairs(const RankTable& table, double cd) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < table.methods(); ++a) {
    for (std::size_t b = a + 1; b < table.methods(); ++b) {
      const double gap = std::abs(table.mean_ranks(static_cast<Eigen::Index>(a)) - table.mean_ranks(static_cast<Eigen::Index>(b)));
      if (gap > cd) out.emplace_back(a, b);
    }
  }
  return out;
}

void write_cd_diagram(std::ostream& out, const RankTable& table, const std::vector<std::string>& methods, double cd) {
  if (methods.size() != table.methods()) throw ContractViolation("method names do not match the rank table");
  out << "method,mean_rank,interval_low,interval_high\n";
  for (std::size_t j = 0; j < methods.size(); ++j) {
    const double r = table.mean_ranks(static_cast<Eigen::Index>(j));
    out << methods[j] << ',' << io::format_double(r) << ',' << io::format_double(r - cd / 2.0) << ','
        << io::format_double(r + cd / 2.0) << '\n';
  }
}

}  // namespace nclens::stats
