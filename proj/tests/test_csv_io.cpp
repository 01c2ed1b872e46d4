#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "nclens/csv_io.hpp"
#include "nclens/errors.hpp"

using namespace nclens;

TEST_CASE("format_double round-trips exactly") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.5) == "0.5");
  CHECK(io::format_double(3.0) == "3");
}

TEST_CASE("prediction csv round trip") {
  Matrix v(2, 2);
  v << 0.1, 1.0 / 3.0, -2.5, 1e-300;
  Vector y(2);
  y << 1.0, 2.0;
  const PredictionMatrix p(v, y, {"ols", "knn(k=5)"});
  std::stringstream ss;
  io::write_prediction_csv(ss, p);
  CHECK(ss.str().rfind("y_true,ols,knn(k=5)\n", 0) == 0);
  const auto back = io::read_prediction_csv(ss);
  CHECK(back.values() == p.values());
  CHECK(back.y_true() == p.y_true());
  CHECK(back.model_names() == p.model_names());
}

TEST_CASE("prediction csv rejects malformed input") {
  std::istringstream no_header("a,b\n1,2\n");
  CHECK_THROWS_AS(io::read_prediction_csv(no_header), ContractViolation);
  std::istringstream ragged("y_true,a\n1,2,3\n");
  CHECK_THROWS_AS(io::read_prediction_csv(ragged), ContractViolation);
  std::istringstream text("y_true,a\n1,x\n");
  CHECK_THROWS_AS(io::read_prediction_csv(text), ContractViolation);
  std::istringstream empty("");
  CHECK_THROWS_AS(io::read_prediction_csv(empty), ContractViolation);
  std::istringstream header_only("y_true,a\n");
  CHECK_THROWS_AS(io::read_prediction_csv(header_only), ContractViolation);
  std::istringstream dup("y_true,a,a\n1,2,3\n");
  CHECK_THROWS_AS(io::read_prediction_csv(dup), ContractViolation);
}

TEST_CASE("prediction csv tolerates BOM and CRLF") {
  std::istringstream in("\xEF\xBB\xBFy_true,a\r\n1,2\r\n");
  const auto p = io::read_prediction_csv(in);
  CHECK(p.model_names() == std::vector<std::string>{"a"});
  CHECK(p.values()(0, 0) == 2.0);
}

TEST_CASE("dataset csv drops incomplete rows and one-hot encodes nominal columns") {
  std::istringstream in(
      "x,color,target\n"
      "1,red,10\n"
      "2,,11\n"
      "NA,blue,12\n"
      "3,blue,13\n"
      "4,\"red\",14\n");
  const auto d = io::read_dataset_csv(in);
  CHECK(d.rows() == 3);
  CHECK(d.feature_names == std::vector<std::string>{"x", "color=blue", "color=red"});
  CHECK(d.features(0, 0) == 1.0);
  CHECK(d.features(0, 1) == 0.0);
  CHECK(d.features(0, 2) == 1.0);
  CHECK(d.features(1, 1) == 1.0);
  CHECK(d.target(2) == 14.0);
}

TEST_CASE("dataset csv errors") {
  std::istringstream no_target("a,b\n1,2\n");
  CHECK_THROWS_AS(io::read_dataset_csv(no_target), ContractViolation);
  std::istringstream text_target("a,target\n1,high\n");
  CHECK_THROWS_AS(io::read_dataset_csv(text_target), ContractViolation);
  std::istringstream all_missing("a,target\n,1\n");
  CHECK_THROWS_AS(io::read_dataset_csv(all_missing), ContractViolation);
  CHECK_THROWS_AS(io::read_dataset_csv(std::filesystem::path("/nonexistent/file.csv")), ContractViolation);
}

TEST_CASE("dataset csv round trip") {
  Dataset d;
  d.features.resize(2, 2);
  d.features << 0.25, 1e-9, -3.0, 7.125;
  d.target.resize(2);
  d.target << 1.5, -0.1;
  d.feature_names = {"f1", "f2"};
  std::stringstream ss;
  io::write_dataset_csv(ss, d);
  const auto back = io::read_dataset_csv(ss);
  CHECK(back.features == d.features);
  CHECK(back.target == d.target);
  CHECK(back.feature_names == d.feature_names);
}
