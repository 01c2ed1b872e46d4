#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nclens/csv_io.hpp"
#include "nclens/ensemble.hpp"
#include "nclens/errors.hpp"
#include "nclens/model_zoo.hpp"
#include "nclens/pipeline.hpp"

namespace fs = std::filesystem;
using namespace nclens;

namespace {

std::string file_fingerprint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fingerprint(ss.str());
}

std::uint64_t effective_seed(std::uint64_t flag) { return seed_from_environment().value_or(flag); }

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

void print_report(const FitReport& report) {
  std::printf("%-8s %4s %12s %12s %12s %9s  %s\n", "method", "ok", "test_rmse", "test_mae", "test_mape", "d_rmse%",
              "lambda*");
  for (const auto& r : report.methods) {
    if (!r.ok) {
      std::printf("%-8s %4s  %s\n", method_name(r.method).c_str(), "no", r.error.c_str());
      continue;
    }
    std::string lam = r.lambda_star ? io::format_double(*r.lambda_star) : "";
    std::printf("%-8s %4s %12.6g %12.6g %12.6g %9.3f  %s\n", method_name(r.method).c_str(), "yes", r.test.rmse,
                r.test.mae, r.test.mape, r.improvement_vs_bem.rmse, lam.c_str());
  }
  for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

struct CombineArgs {
  std::string val;
  std::string test;
  std::string methods = "all";
  std::string lambda = "auto";
  double alpha = 0.05;
  double holdout = 0.0;
  std::string out = "runs";
};

int cmd_combine(const CombineArgs& a) {
  ExperimentConfig c;
  c.name = fs::path(a.val).stem().string();
  c.input = MatrixInput{io::read_prediction_csv(fs::path(a.val)), io::read_prediction_csv(fs::path(a.test))};
  c.methods = a.methods == "all" ? all_methods() : parse_methods(a.methods);
  if (a.lambda == "auto") {
    c.auto_lambda = true;
  } else {
    c.auto_lambda = false;
    c.ncl.lambda = std::stod(a.lambda);
  }
  c.regularization_strength = a.alpha;
  c.lambda_holdout = a.holdout;

  std::string methods_key;
  for (const auto m : c.methods) methods_key += method_name(m) + ",";
  const std::string key = "combine|val=" + file_fingerprint(a.val) + "|test=" + file_fingerprint(a.test) +
                          "|methods=" + methods_key + "|lambda=" + a.lambda + "|alpha=" + io::format_double(a.alpha) +
                          "|holdout=" + io::format_double(a.holdout);
  c.output_dir = fs::path(a.out) / fingerprint(key);

  const FitReport report = run_experiment(c);
  print_report(report);
  std::printf("run directory: %s\n", c.output_dir.string().c_str());
  return report.all_ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NCL-weighted ensembles of regression models"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "write a synthetic regression dataset as CSV");
  std::string gen_kind = "friedman1";
  std::size_t gen_rows = 1000;
  double gen_noise = 1.0;
  std::uint64_t gen_seed = 42;
  std::string gen_out;
  gen->add_option("--kind", gen_kind, "linear, piecewise, friedman1 or sinusoidal")->capture_default_str();
  gen->add_option("--rows", gen_rows)->capture_default_str();
  gen->add_option("--noise", gen_noise, "noise standard deviation")->capture_default_str();
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--out", gen_out, "output CSV")->required();

  // train
  auto* train = app.add_subcommand("train", "fit the model pool and write validation/test prediction matrices");
  std::string train_data;
  std::string train_out = "runs";
  std::uint64_t train_seed = 42;
  std::size_t train_folds = 5;
  double train_ratio = 0.5;
  double val_ratio = 0.1;
  train->add_option("--data", train_data, "dataset CSV with a target column")->required();
  train->add_option("--out", train_out)->capture_default_str();
  train->add_option("--seed", train_seed)->capture_default_str();
  train->add_option("--folds", train_folds)->capture_default_str();
  train->add_option("--train-ratio", train_ratio)->capture_default_str();
  train->add_option("--val-ratio", val_ratio)->capture_default_str();

  // combine
  auto* combine = app.add_subcommand("combine", "weight the sub-models with every requested method");
  CombineArgs ca;
  combine->add_option("--val", ca.val, "validation prediction CSV")->required();
  combine->add_option("--test", ca.test, "test prediction CSV")->required();
  combine->add_option("--methods", ca.methods, "comma list, or all")->capture_default_str();
  combine->add_option("--lambda", ca.lambda, "auto or a value in [0, 1]")->capture_default_str();
  combine->add_option("--alpha", ca.alpha, "regularisation strength for NCL-R")->capture_default_str();
  combine->add_option("--lambda-holdout", ca.holdout, "fraction of validation rows that scores lambda")
      ->capture_default_str();
  combine->add_option("--out", ca.out)->capture_default_str();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "fit NCL weights over a grid of lambda values");
  std::string sw_val;
  std::string sw_test;
  std::string sw_grid = "0:1:0.1";
  std::string sw_out = "runs";
  sweep->add_option("--val", sw_val)->required();
  sweep->add_option("--test", sw_test)->required();
  sweep->add_option("--grid", sw_grid, "start:stop:step")->capture_default_str();
  sweep->add_option("--out", sw_out)->capture_default_str();

  // compare
  auto* compare = app.add_subcommand("compare", "rank methods across datasets with Friedman/Nemenyi");
  std::size_t cmp_synthetic = 0;
  std::size_t cmp_rows = 600;
  std::uint64_t cmp_seed = 42;
  std::vector<std::string> cmp_pairs;
  std::string cmp_methods = "all";
  unsigned cmp_threads = 0;
  double cmp_alpha = 0.05;
  std::string cmp_out = "runs";
  compare->add_option("--synthetic", cmp_synthetic, "number of synthetic datasets");
  compare->add_option("--rows", cmp_rows, "rows per synthetic dataset")->capture_default_str();
  compare->add_option("--seed", cmp_seed)->capture_default_str();
  compare->add_option("--pair", cmp_pairs, "val.csv:test.csv, repeatable");
  compare->add_option("--methods", cmp_methods)->capture_default_str();
  compare->add_option("--threads", cmp_threads, "0 uses every core")->capture_default_str();
  compare->add_option("--alpha", cmp_alpha, "0.05 or 0.10")->capture_default_str();
  compare->add_option("--out", cmp_out)->capture_default_str();

  // decompose
  auto* decompose = app.add_subcommand("decompose", "ambiguity decomposition of a weighted ensemble");
  std::string dec_preds;
  std::string dec_weights;
  decompose->add_option("--preds", dec_preds, "prediction CSV")->required();
  decompose->add_option("--weights", dec_weights, "comma list; uniform when omitted");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const std::uint64_t seed = effective_seed(gen_seed);
      io::write_dataset_csv(fs::path(gen_out), synth_dataset(parse_synth_kind(gen_kind), gen_rows, gen_noise, seed));
      return 0;
    }

    if (*train) {
      ExperimentConfig c;
      c.seed = effective_seed(train_seed);
      c.folds = train_folds;
      c.split = SplitRatios{train_ratio, val_ratio};
      c.input = DatasetInput{io::read_dataset_csv(fs::path(train_data))};
      const std::string key = "train|data=" + file_fingerprint(train_data) + "|seed=" + std::to_string(c.seed) +
                              "|folds=" + std::to_string(c.folds) + "|split=" + io::format_double(train_ratio) + "," +
                              io::format_double(val_ratio);
      const fs::path dir = fs::path(train_out) / fingerprint(key);
      const MatrixInput m = prepare_matrices(c);
      fs::create_directories(dir);
      io::write_prediction_csv(dir / "validation.csv", m.validation);
      io::write_prediction_csv(dir / "test.csv", m.test);
      std::printf("%zu validation rows, %zu test rows, %zu models\n", m.validation.samples(), m.test.samples(),
                  m.validation.models());
      std::printf("run directory: %s\n", dir.string().c_str());
      return 0;
    }

    if (*combine) return cmd_combine(ca);

    if (*sweep) {
      const PredictionMatrix val = io::read_prediction_csv(fs::path(sw_val));
      const PredictionMatrix test = io::read_prediction_csv(fs::path(sw_test));
      const auto rows = lambda_sweep(val, test, parse_grid(sw_grid));
      const std::string key =
          "sweep|val=" + file_fingerprint(sw_val) + "|test=" + file_fingerprint(sw_test) + "|grid=" + sw_grid;
      const fs::path dir = fs::path(sw_out) / fingerprint(key);
      fs::create_directories(dir);
      std::ofstream out(dir / "sweep.csv", std::ios::binary);
      write_sweep_csv(out, rows);
      write_sweep_csv(std::cout, rows);
      std::printf("run directory: %s\n", dir.string().c_str());
      bool all_ok = true;
      for (const auto& r : rows) all_ok = all_ok && r.ok;
      return all_ok ? 0 : 1;
    }

    if (*compare) {
      std::vector<ExperimentConfig> experiments;
      std::string key = "compare|methods=" + cmp_methods + "|alpha=" + io::format_double(cmp_alpha);
      if (cmp_synthetic > 0) {
        const std::uint64_t seed = effective_seed(cmp_seed);
        experiments = synthetic_suite(cmp_synthetic, seed, cmp_rows);
        key += "|synthetic=" + std::to_string(cmp_synthetic) + "," + std::to_string(cmp_rows) + "," +
               std::to_string(seed);
      }
      for (const auto& pair : cmp_pairs) {
        const auto colon = pair.find(':');
        if (colon == std::string::npos) throw ContractViolation("--pair expects val.csv:test.csv");
        const std::string v = pair.substr(0, colon);
        const std::string t = pair.substr(colon + 1);
        ExperimentConfig c;
        c.name = fs::path(v).stem().string();
        c.input = MatrixInput{io::read_prediction_csv(fs::path(v)), io::read_prediction_csv(fs::path(t))};
        experiments.push_back(std::move(c));
        key += "|pair=" + file_fingerprint(v) + "," + file_fingerprint(t);
      }
      CompareConfig cc;
      cc.methods = cmp_methods == "all" ? all_methods() : parse_methods(cmp_methods);
      cc.alpha = cmp_alpha;
      cc.threads = cmp_threads;
      cc.output_dir = fs::path(cmp_out) / fingerprint(key);
      const CompareResult result = batch_compare(experiments, cc);

      for (const auto& name : result.excluded) std::fprintf(stderr, "warning: excluded %s\n", name.c_str());
      for (const auto& metric : result.metrics) {
        std::printf("%s: chi2 = %.4f, p = %.4g, CD = %.4f\n", metric.metric.c_str(), metric.friedman.chi_square,
                    metric.friedman.p_value, metric.critical_difference);
        for (std::size_t j = 0; j < result.methods.size(); ++j) {
          std::printf("  %-8s %.3f\n", result.methods[j].c_str(),
                      metric.table.mean_ranks(static_cast<Eigen::Index>(j)));
        }
      }
      std::printf("run directory: %s\n", cc.output_dir.string().c_str());
      return result.excluded.empty() ? 0 : 1;
    }

    if (*decompose) {
      const PredictionMatrix preds = io::read_prediction_csv(fs::path(dec_preds));
      std::optional<WeightVector> w;
      if (dec_weights.empty()) {
        w = WeightVector::uniform(preds.models());
      } else {
        const auto parts = split_commas(dec_weights);
        Vector v(static_cast<Eigen::Index>(parts.size()));
        for (std::size_t j = 0; j < parts.size(); ++j) v(static_cast<Eigen::Index>(j)) = std::stod(parts[j]);
        w = WeightVector(v);
      }
      const DecompositionReport d = ambiguity_decomposition(preds, *w);
      nlohmann::json j;
      j["ensemble_mse"] = d.ensemble_mse;
      j["weighted_member_mse"] = d.weighted_member_mse;
      j["ambiguity"] = d.ambiguity;
      j["identity_gap"] = d.ensemble_mse - (d.weighted_member_mse - d.ambiguity);
      j["diversity"] = diversity_score(preds);
      std::cout << j.dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
