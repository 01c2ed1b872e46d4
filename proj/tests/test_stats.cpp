#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "nclens/errors.hpp"
#include "nclens/stats.hpp"
#include "oracles.hpp"

using namespace nclens;
using namespace nclens::stats;

namespace {

Matrix random_table(std::mt19937_64& rng, int d, int k, bool with_ties) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix e(d, k);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < k; ++c) e(r, c) = with_ties ? std::floor(4.0 * u(rng)) : u(rng);
  return e;
}

}  // namespace

TEST_CASE("ranks with ties") {
  Matrix e(2, 4);
  e << 0.3, 0.1, 0.3, 0.5,
       2.0, 2.0, 2.0, 2.0;
  const auto t = rank_table(e);
  CHECK(t.ranks(0, 0) == 2.5);
  CHECK(t.ranks(0, 1) == 1.0);
  CHECK(t.ranks(0, 2) == 2.5);
  CHECK(t.ranks(0, 3) == 4.0);
  for (int c = 0; c < 4; ++c) CHECK(t.ranks(1, c) == 2.5);
  CHECK(t.mean_ranks(3) == 3.25);
}

TEST_CASE("rank rows sum to K(K+1)/2 and match the counting oracle") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const int k = 2 + static_cast<int>(rng() % 9);
    const auto e = random_table(rng, 6, k, rep % 2 == 0);
    const auto t = rank_table(e);
    for (int r = 0; r < 6; ++r) {
      CHECK(t.ranks.row(r).sum() == doctest::Approx(k * (k + 1) / 2.0));
      std::vector<double> row;
      for (int c = 0; c < k; ++c) row.push_back(e(r, c));
      const auto expect = oracle::count_ranks(row);
      for (int c = 0; c < k; ++c) CHECK(t.ranks(r, c) == expect[static_cast<std::size_t>(c)]);
    }
  }
}

TEST_CASE("ranking is invariant to monotone row transforms") {
  std::mt19937_64 rng(2);
  const auto e = random_table(rng, 8, 5, false);
  Matrix f = e;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 5; ++c) f(r, c) = std::exp(3.0 * e(r, c)) + r;
  CHECK(rank_table(e).ranks == rank_table(f).ranks);
}

TEST_CASE("duplicated method columns tie") {
  std::mt19937_64 rng(3);
  const auto e = random_table(rng, 7, 3, false);
  Matrix d(7, 4);
  d << e, e.col(1);
  const auto t = rank_table(d);
  for (int r = 0; r < 7; ++r) CHECK(t.ranks(r, 1) == t.ranks(r, 3));
  CHECK(t.mean_ranks(1) == t.mean_ranks(3));
}

TEST_CASE("two methods, one always better") {
  Matrix e(5, 2);
  e << 1, 2, 0.1, 0.2, 3, 4, 5, 9, 0, 1;
  const auto t = rank_table(e);
  CHECK(t.mean_ranks(0) == 1.0);
  CHECK(t.mean_ranks(1) == 2.0);
}

TEST_CASE("friedman: all tied is exactly zero") {
  const auto t = rank_table(Matrix::Constant(6, 5, 0.42));
  const auto f = friedman_statistic(t);
  CHECK(f.chi_square == 0.0);
  CHECK(f.p_value == 1.0);
  CHECK(f.degrees_of_freedom == 4);
}

TEST_CASE("friedman matches the rank-sum formula") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 2 + static_cast<int>(rng() % 20);
    const int k = 2 + static_cast<int>(rng() % 10);
    const auto e = random_table(rng, d, k, rep % 3 == 0);
    const double expect = std::max(0.0, oracle::friedman_rank_sums(e));
    CHECK(std::abs(friedman_statistic(rank_table(e)).chi_square - expect) <= 1e-10);
  }
}

TEST_CASE("friedman is invariant to relabelling methods") {
  std::mt19937_64 rng(5);
  const auto e = random_table(rng, 10, 5, false);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
  perm.indices() << 4, 2, 0, 1, 3;
  const Matrix p = e * perm;
  CHECK(friedman_statistic(rank_table(e)).chi_square ==
        doctest::Approx(friedman_statistic(rank_table(p)).chi_square).epsilon(1e-14));
}

TEST_CASE("K = 2 reduces to the sign statistic over every win/loss pattern") {
  for (int d = 2; d <= 8; ++d) {
    for (int mask = 0; mask < (1 << d); ++mask) {
      Matrix e(d, 2);
      int wins = 0;
      for (int r = 0; r < d; ++r) {
        const bool first_wins = (mask >> r) & 1;
        wins += first_wins;
        e(r, 0) = first_wins ? 0.0 : 1.0;
        e(r, 1) = first_wins ? 1.0 : 0.0;
      }
      const double sign = std::pow(2.0 * wins - d, 2) / d;
      const double chi = friedman_statistic(rank_table(e)).chi_square;
      CHECK(std::abs(chi - sign) <= 1e-12);
      CHECK(std::abs(chi - oracle::friedman_rank_sums(e)) <= 1e-10);
    }
  }
}

TEST_CASE("friedman needs two datasets and two methods") {
  CHECK_THROWS_AS(friedman_statistic(rank_table(Matrix::Zero(1, 3))), ContractViolation);
  CHECK_THROWS_AS(friedman_statistic(rank_table(Matrix::Zero(3, 1))), ContractViolation);
  CHECK_THROWS_AS(rank_table(Matrix(0, 0)), ContractViolation);
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 0) = NAN;
  CHECK_THROWS_AS(rank_table(bad), ContractViolation);
}

TEST_CASE("chi-square tail against closed forms") {
  for (double x : {0.01, 0.5, 1.0, 2.5, 3.841458820694124, 7.0, 15.0, 40.0}) {
    CHECK(chi_square_sf(x, 1) == doctest::Approx(std::erfc(std::sqrt(x / 2.0))).epsilon(1e-12));
    CHECK(chi_square_sf(x, 2) == doctest::Approx(std::exp(-x / 2.0)).epsilon(1e-12));
    CHECK(chi_square_sf(x, 4) == doctest::Approx(std::exp(-x / 2.0) * (1.0 + x / 2.0)).epsilon(1e-12));
    CHECK(gamma_p(2.5, x) + gamma_q(2.5, x) == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(chi_square_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(chi_square_sf(0.0, 3) == 1.0);
  CHECK(gamma_p(1.0, 0.0) == 0.0);
  CHECK_THROWS_AS(gamma_p(0.0, 1.0), ContractViolation);
  CHECK_THROWS_AS(gamma_q(1.0, -1.0), ContractViolation);
}

TEST_CASE("nemenyi critical difference") {
  for (std::size_t d = 1; d < 30; ++d) {
    CHECK(nemenyi_cd(2, d) == doctest::Approx(1.960 / std::sqrt(static_cast<double>(d))).epsilon(1e-14));
  }
  for (double alpha : {0.05, 0.10}) {
    for (std::size_t k = 2; k <= 20; ++k) {
      for (std::size_t d = 2; d < 40; ++d) CHECK(nemenyi_cd(k, d, alpha) < nemenyi_cd(k, d - 1, alpha));
      if (k > 2) CHECK(nemenyi_cd(k, 10, alpha) > nemenyi_cd(k - 1, 10, alpha));
    }
  }
  for (std::size_t k = 2; k <= 20; ++k) CHECK(nemenyi_q(k, 0.10) < nemenyi_q(k, 0.05));
  CHECK_THROWS_AS(nemenyi_q(1, 0.05), ContractViolation);
  CHECK_THROWS_AS(nemenyi_q(21, 0.05), ContractViolation);
  CHECK_THROWS_AS(nemenyi_q(5, 0.01), ContractViolation);
  CHECK_THROWS_AS(nemenyi_cd(5, 0), ContractViolation);
}

TEST_CASE("nemenyi table agrees with the studentized range distribution") {
  for (double alpha : {0.05, 0.10}) {
    for (int k = 2; k <= 20; ++k) {
      const double q = oracle::range_quantile(1.0 - alpha, k) / std::sqrt(2.0);
      CAPTURE(k);
      CAPTURE(alpha);
      CHECK(std::abs(nemenyi_q(static_cast<std::size_t>(k), alpha) - q) <= 1e-3);
    }
  }
}

TEST_CASE("significance pairs") {
  Matrix e(4, 3);
  e << 1, 2, 3,
       1, 3, 2,
       1, 2, 3,
       2, 1, 3;
  const auto t = rank_table(e);
  // Mean ranks 1.25, 2.0, 2.75.
  CHECK(significance_pairs(t, std::numeric_limits<double>::infinity()).empty());
  CHECK(significance_pairs(t, 0.0).size() == 3);
  const auto p = significance_pairs(t, 1.0);
  REQUIRE(p.size() == 1);
  CHECK(p[0] == std::pair<std::size_t, std::size_t>{0, 2});
  CHECK(significance_pairs(t, 1.5).empty());
}

TEST_CASE("cd diagram csv") {
  Matrix e(2, 2);
  e << 1, 2, 1, 2;
  std::ostringstream out;
  write_cd_diagram(out, rank_table(e), {"A", "B"}, 1.0);
  CHECK(out.str() == "method,mean_rank,interval_low,interval_high\nA,1,0.5,1.5\nB,2,1.5,2.5\n");
  CHECK_THROWS_AS(write_cd_diagram(out, rank_table(e), {"A"}, 1.0), ContractViolation);
}
