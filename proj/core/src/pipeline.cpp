#include "nclens/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "nclens/csv_io.hpp"
#include "nclens/errors.hpp"

namespace nclens {

namespace {

using json = nlohmann::ordered_json;

constexpr std::size_t kValidationRowWarning = 50000;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json number_or_null(double v, bool defined) { return defined && std::isfinite(v) ? json(v) : json(nullptr); }

json errors_json(const ErrorTriple& e) {
  json out;
  out["rmse"] = e.rmse;
  out["mae"] = e.mae;
  out["mape"] = number_or_null(e.mape, e.mape_defined);
  out["mape_skipped"] = e.mape_skipped;
  out["combined"] = combined_error(e);
  return out;
}

json tree_json(const RegressionTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes()) {
    json node;
    node["feature"] = n.feature;
    node["threshold"] = n.threshold;
    node["left"] = n.left;
    node["right"] = n.right;
    node["value"] = n.value;
    node["samples"] = n.samples;
    nodes.push_back(std::move(node));
  }
  json out;
  out["max_depth"] = tree.options().max_depth;
  out["min_samples_split"] = tree.options().min_samples_split;
  out["nodes"] = std::move(nodes);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractViolation("cannot write " + path.string());
  out << text;
}

struct NclOutcome {
  NclFit fit;
  std::vector<std::string> notes;
};

NclOutcome run_ncl(const ExperimentConfig& config, const PredictionMatrix& validation, const Vector& alpha) {
  NclConfig ncl = config.ncl;
  ncl.alpha = alpha;
  NclOutcome out;
  if (!config.auto_lambda) {
    out.fit = fit_weights(validation, ncl);
    return out;
  }
  if (config.lambda_holdout > 0.0) {
    const auto n = validation.samples();
    const auto score_rows = static_cast<std::size_t>(std::floor(config.lambda_holdout * static_cast<double>(n)));
    if (score_rows < 1 || score_rows >= n) throw ContractViolation("lambda_holdout leaves an empty fitting or scoring part");
    const PredictionMatrix fit_part = validation.row_slice(0, n - score_rows);
    const PredictionMatrix score_part = validation.row_slice(n - score_rows, n);
    out.fit = search_lambda(fit_part, ncl, score_part);
    out.notes.push_back("lambda scored on " + std::to_string(score_rows) + " held-out validation rows");
  } else {
    out.fit = search_lambda(validation, ncl);
  }
  for (const auto& c : out.fit.trace) {
    if (c.failed) out.notes.push_back("lambda " + io::format_double(c.lambda) + " skipped: " + c.failure);
  }
  return out;
}

void fill_simplex(MethodReport& r, const WeightVector& w, const PredictionMatrix& validation, const PredictionMatrix& test) {
  r.weights = w.values();
  r.validation = error_triple(combine(validation, w), validation.y_true());
  r.test_predictions = combine(test, w);
  r.test = error_triple(r.test_predictions, test.y_true());
}

}  // namespace

std::string method_name(Method method) {
  switch (method) {
    case Method::NCL: return "NCL";
    case Method::NCL_R: return "NCL-R";
    case Method::BEM: return "BEM";
    case Method::BEM_NCL: return "BEM-NCL";
    case Method::GEM: return "GEM";
    case Method::LR: return "LR";
    case Method::MDT: return "MDT";
    case Method::EIW: return "EIW";
    case Method::EEW: return "EEW";
  }
  throw ContractViolation("unknown method");
}

std::vector<Method> all_methods() {
  return {Method::NCL, Method::NCL_R, Method::BEM, Method::BEM_NCL, Method::GEM,
          Method::LR,  Method::MDT,   Method::EIW, Method::EEW};
}

Method parse_method(const std::string& name) {
  const std::string key = lower(name);
  for (const auto m : all_methods()) {
    if (lower(method_name(m)) == key) return m;
  }
  if (key == "nclr" || key == "ncl_r") return Method::NCL_R;
  if (key == "bem_ncl" || key == "bemncl") return Method::BEM_NCL;
  throw ContractViolation("unknown method '" + name + "'");
}

std::vector<Method> parse_methods(const std::string& comma_separated) {
  std::vector<Method> out;
  std::stringstream ss(comma_separated);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (lower(item) == "all") return all_methods();
    const Method m = parse_method(item);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw ContractViolation("no methods requested");
  return out;
}

const MethodReport* FitReport::find(Method m) const {
  for (const auto& r : methods) {
    if (r.method == m) return &r;
  }
  return nullptr;
}

bool FitReport::all_ok() const {
  return std::all_of(methods.begin(), methods.end(), [](const MethodReport& r) { return r.ok; });
}

double improvement_percent(double baseline, double value) {
  if (baseline == 0.0) return value == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return 100.0 * (baseline - value) / baseline;
}

MatrixInput prepare_matrices(const ExperimentConfig& config) {
  if (const auto* m = std::get_if<MatrixInput>(&config.input)) return *m;
  const auto& data = std::get<DatasetInput>(config.input).data;
  const DataSplit split = split_dataset(data, config.split, config.seed);
  auto built = build_prediction_matrix(config.pool, split, config.folds, config.seed);
  return {std::move(built.validation), std::move(built.test)};
}

FitReport combine_methods(const ExperimentConfig& config, const PredictionMatrix& validation, const PredictionMatrix& test) {
  if (validation.model_names() != test.model_names()) {
    throw ContractViolation("validation and test matrices have different model columns");
  }
  if (config.methods.empty()) throw ContractViolation("no methods requested");
  const std::size_t m = validation.models();

  FitReport report;
  report.name = config.name;
  report.model_names = validation.model_names();
  report.validation_rows = validation.samples();
  report.test_rows = test.samples();
  if (validation.samples() > kValidationRowWarning) {
    report.warnings.push_back("validation set has " + std::to_string(validation.samples()) +
                              " rows; consider a smaller validation fraction");
  }
  report.diversity = m >= 2 ? diversity_score(validation) : 0.0;

  const auto wants = [&](Method x) {
    return std::find(config.methods.begin(), config.methods.end(), x) != config.methods.end();
  };

  const WeightVector uniform = bem(m);
  const ErrorTriple bem_test = error_triple(combine(test, uniform), test.y_true());

  std::optional<NclOutcome> ncl;
  std::string ncl_error;
  if (wants(Method::NCL) || wants(Method::BEM_NCL)) {
    try {
      ncl = run_ncl(config, validation, Vector());
    } catch (const std::exception& e) {
      ncl_error = e.what();
    }
  }

  for (const Method method : config.methods) {
    MethodReport r;
    r.method = method;
    try {
      switch (method) {
        case Method::NCL: {
          if (!ncl) throw NumericalFailure(ncl_error);
          fill_simplex(r, ncl->fit.weights, validation, test);
          r.lambda_star = ncl->fit.lambda_star;
          r.support = ncl->fit.support;
          r.converged = ncl->fit.converged;
          r.solver_invocations = ncl->fit.solver_invocations;
          r.notes = ncl->notes;
          break;
        }
        case Method::NCL_R: {
          const NclOutcome out = run_ncl(config, validation, Vector::Constant(static_cast<Eigen::Index>(m), config.regularization_strength));
          fill_simplex(r, out.fit.weights, validation, test);
          r.lambda_star = out.fit.lambda_star;
          r.support = out.fit.support;
          r.converged = out.fit.converged;
          r.solver_invocations = out.fit.solver_invocations;
          r.notes = out.notes;
          break;
        }
        case Method::BEM:
          fill_simplex(r, uniform, validation, test);
          break;
        case Method::BEM_NCL: {
          if (!ncl) throw NumericalFailure(ncl_error);
          const WeightVector w = bem_ncl(ncl->fit.support, m);
          fill_simplex(r, w, validation, test);
          r.support = ncl->fit.support;
          break;
        }
        case Method::GEM: {
          const GemWeights g = gem(validation);
          r.weights = g.weights;
          r.validation = error_triple(combine_affine(validation, g.weights), validation.y_true());
          r.test_predictions = combine_affine(test, g.weights);
          r.test = error_triple(r.test_predictions, test.y_true());
          if (g.ridge_applied) r.notes.push_back("singular error covariance: ridge applied");
          if (g.fell_back_to_bem) r.notes.push_back("covariance still singular: fell back to BEM");
          break;
        }
        case Method::LR: {
          const LinearStack s = lr_stack(validation);
          r.weights = s.coefficients;
          r.intercept = s.intercept;
          r.validation = error_triple(s.predict(validation), validation.y_true());
          r.test_predictions = s.predict(test);
          r.test = error_triple(r.test_predictions, test.y_true());
          if (s.ridge_applied) r.notes.push_back("rank-deficient design: ridge applied");
          break;
        }
        case Method::MDT: {
          MetaTree t = mdt(validation, test, config.mdt_tree);
          r.validation = error_triple(t.tree.predict(validation.values()), validation.y_true());
          r.test_predictions = std::move(t.test_predictions);
          r.test = error_triple(r.test_predictions, test.y_true());
          r.tree = std::move(t.tree);
          break;
        }
        case Method::EIW:
          fill_simplex(r, eiw(per_model_errors(validation, config.weighting_metric)), validation, test);
          break;
        case Method::EEW:
          fill_simplex(r, eew(per_model_errors(validation, config.weighting_metric)), validation, test);
          break;
      }
      r.improvement_vs_bem.rmse = improvement_percent(bem_test.rmse, r.test.rmse);
      r.improvement_vs_bem.mae = improvement_percent(bem_test.mae, r.test.mae);
      r.improvement_vs_bem.mape = (bem_test.mape_defined && r.test.mape_defined)
                                      ? improvement_percent(bem_test.mape, r.test.mape)
                                      : std::numeric_limits<double>::quiet_NaN();
      r.ok = true;
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
    }
    report.methods.push_back(std::move(r));
  }
  return report;
}

FitReport run_experiment(const ExperimentConfig& config) {
  const MatrixInput matrices = prepare_matrices(config);
  FitReport report = combine_methods(config, matrices.validation, matrices.test);
  if (!config.output_dir.empty()) write_report(config.output_dir, report, matrices.validation, matrices.test);
  return report;
}

std::string report_json(const FitReport& report) {
  json root;
  root["name"] = report.name;
  root["model_names"] = report.model_names;
  root["validation_rows"] = report.validation_rows;
  root["test_rows"] = report.test_rows;
  root["diversity"] = report.diversity;
  root["warnings"] = report.warnings;
  json methods = json::array();
  for (const auto& r : report.methods) {
    json j;
    j["method"] = method_name(r.method);
    j["ok"] = r.ok;
    if (!r.ok) {
      j["error"] = r.error;
      methods.push_back(std::move(j));
      continue;
    }
    if (r.weights.size() > 0) j["weights"] = vector_json(r.weights);
    if (r.intercept) j["intercept"] = *r.intercept;
    if (r.tree) j["tree"] = tree_json(*r.tree);
    if (r.lambda_star) j["lambda_star"] = *r.lambda_star;
    if (!r.support.empty()) j["support"] = r.support;
    if (r.method == Method::NCL || r.method == Method::NCL_R) {
      j["converged"] = r.converged;
      j["solver_invocations"] = r.solver_invocations;
    }
    j["validation"] = errors_json(r.validation);
    j["test"] = errors_json(r.test);
    json imp;
    imp["rmse"] = number_or_null(r.improvement_vs_bem.rmse, true);
    imp["mae"] = number_or_null(r.improvement_vs_bem.mae, true);
    imp["mape"] = number_or_null(r.improvement_vs_bem.mape, true);
    j["improvement_vs_bem_percent"] = std::move(imp);
    if (!r.notes.empty()) j["notes"] = r.notes;
    methods.push_back(std::move(j));
  }
  root["methods"] = std::move(methods);
  return root.dump(2) + "\n";
}

void write_report(const std::filesystem::path& dir, const FitReport& report, const PredictionMatrix& validation,
                  const PredictionMatrix& test) {
  std::filesystem::create_directories(dir);
  io::write_prediction_csv(dir / "validation.csv", validation);
  io::write_prediction_csv(dir / "test.csv", test);

  std::ostringstream preds;
  preds << "y_true";
  for (const auto& r : report.methods) {
    if (r.ok) preds << ',' << method_name(r.method);
  }
  preds << '\n';
  for (std::size_t i = 0; i < test.samples(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    preds << io::format_double(test.y_true()(ii));
    for (const auto& r : report.methods) {
      if (r.ok) preds << ',' << io::format_double(r.test_predictions(ii));
    }
    preds << '\n';
  }
  write_text(dir / "test_predictions.csv", preds.str());
  write_text(dir / "report.json", report_json(report));
}

std::string fingerprint(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<SweepRow> lambda_sweep(const PredictionMatrix& validation, const PredictionMatrix& test,
                                   const std::vector<double>& grid, const NclConfig& ncl) {
  if (validation.model_names() != test.model_names()) {
    throw ContractViolation("validation and test matrices have different model columns");
  }
  std::vector<SweepRow> rows;
  for (const double lambda : grid) {
    SweepRow row;
    row.lambda = lambda;
    try {
      NclConfig c = ncl;
      c.lambda = lambda;
      const NclFit fit = fit_weights(validation, c);
      row.weights = fit.weights.values();
      row.validation = fit.validation_errors;
      row.test = predict(fit, test).errors;
      row.ok = true;
    } catch (const std::exception&) {
      row.ok = false;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) throw ContractViolation("bad grid '" + spec + "'");
    parts.push_back(v);
  }
  if (parts.size() != 3) throw ContractViolation("grid must be start:stop:step");
  const double start = parts[0];
  const double stop = parts[1];
  const double step = parts[2];
  if (!(step > 0.0) || stop < start) throw ContractViolation("grid needs step > 0 and stop >= start");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double v = start + i * step;
    if (v > stop + 0.5 * step) break;
    out.push_back(std::round(v * 1e12) / 1e12);
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "lambda,val_rmse,val_mae,val_mape,test_rmse,test_mae,test_mape\n";
  const auto mape = [](const ErrorTriple& e) { return e.mape_defined ? io::format_double(e.mape) : std::string("NA"); };
  for (const auto& r : rows) {
    if (!r.ok) continue;
    out << io::format_double(r.lambda) << ',' << io::format_double(r.validation.rmse) << ','
        << io::format_double(r.validation.mae) << ',' << mape(r.validation) << ',' << io::format_double(r.test.rmse)
        << ',' << io::format_double(r.test.mae) << ',' << mape(r.test) << '\n';
  }
}

CompareResult batch_compare(const std::vector<ExperimentConfig>& experiments, const CompareConfig& config) {
  if (experiments.size() < 2) throw ContractViolation("comparison needs at least two datasets");
  if (config.methods.size() < 2) throw ContractViolation("comparison needs at least two methods");

  CompareResult result;
  for (const auto m : config.methods) result.methods.push_back(method_name(m));
  result.reports.resize(experiments.size());

  const unsigned hw = std::max(1U, std::thread::hardware_concurrency());
  const std::size_t threads = config.threads == 0 ? hw : config.threads;
  std::vector<std::string> failures(experiments.size());

  const auto run_one = [&](std::size_t i) {
    ExperimentConfig c = experiments[i];
    c.methods = config.methods;
    c.ncl.search.parallel = false;
    if (!config.output_dir.empty()) c.output_dir = config.output_dir / "datasets" / c.name;
    try {
      result.reports[i] = run_experiment(c);
    } catch (const std::exception& e) {
      failures[i] = e.what();
      result.reports[i].name = c.name;
    }
  };
  for (std::size_t begin = 0; begin < experiments.size(); begin += threads) {
    std::vector<std::future<void>> batch;
    for (std::size_t i = begin; i < std::min(experiments.size(), begin + threads); ++i) {
      batch.push_back(std::async(std::launch::async, run_one, i));
    }
    for (auto& f : batch) f.get();
  }

  const std::vector<std::string> metric_names = {"rmse", "mae", "mape"};
  std::vector<std::vector<double>> rows[3];
  std::vector<std::string> kept[3];
  for (std::size_t i = 0; i < experiments.size(); ++i) {
    const auto& rep = result.reports[i];
    bool complete = failures[i].empty();
    std::vector<double> vals[3];
    if (complete) {
      for (const auto m : config.methods) {
        const MethodReport* r = rep.find(m);
        if (r == nullptr || !r->ok) {
          complete = false;
          break;
        }
        vals[0].push_back(r->test.rmse);
        vals[1].push_back(r->test.mae);
        vals[2].push_back(r->test.mape_defined ? r->test.mape : std::numeric_limits<double>::quiet_NaN());
      }
    }
    if (!complete) {
      result.excluded.push_back(rep.name);
      std::cerr << "warning: dataset " << rep.name << " excluded from ranking"
                << (failures[i].empty() ? std::string() : ": " + failures[i]) << '\n';
      continue;
    }
    result.datasets.push_back(rep.name);
    for (int k = 0; k < 3; ++k) {
      if (std::all_of(vals[k].begin(), vals[k].end(), [](double v) { return std::isfinite(v); })) {
        rows[k].push_back(vals[k]);
        kept[k].push_back(rep.name);
      }
    }
  }

  const auto kmethods = config.methods.size();
  for (int k = 0; k < 3; ++k) {
    if (rows[k].size() < 2) continue;
    Matrix errors(static_cast<Eigen::Index>(rows[k].size()), static_cast<Eigen::Index>(kmethods));
    for (std::size_t d = 0; d < rows[k].size(); ++d) {
      for (std::size_t j = 0; j < kmethods; ++j) {
        errors(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(j)) = rows[k][d][j];
      }
    }
    CompareMetric cm;
    cm.metric = metric_names[static_cast<std::size_t>(k)];
    cm.table = stats::rank_table(errors);
    cm.friedman = stats::friedman_statistic(cm.table);
    cm.critical_difference = stats::nemenyi_cd(kmethods, rows[k].size(), config.alpha);
    cm.significant_pairs = stats::significance_pairs(cm.table, cm.critical_difference);
    result.metrics.push_back(std::move(cm));

    if (!config.output_dir.empty()) {
      std::filesystem::create_directories(config.output_dir);
      std::ostringstream table;
      table << "dataset";
      for (const auto& name : result.methods) table << ',' << name;
      table << '\n';
      for (std::size_t d = 0; d < rows[k].size(); ++d) {
        table << kept[k][d];
        for (const double v : rows[k][d]) table << ',' << io::format_double(v);
        table << '\n';
      }
      write_text(config.output_dir / ("errors_" + metric_names[static_cast<std::size_t>(k)] + ".csv"), table.str());
      std::ostringstream cd;
      stats::write_cd_diagram(cd, result.metrics.back().table, result.methods, result.metrics.back().critical_difference);
      write_text(config.output_dir / ("cd_" + metric_names[static_cast<std::size_t>(k)] + ".csv"), cd.str());
    }
  }

  if (!config.output_dir.empty()) {
    json root;
    root["datasets"] = result.datasets;
    root["methods"] = result.methods;
    root["excluded"] = result.excluded;
    root["alpha"] = config.alpha;
    json metrics = json::array();
    for (const auto& cm : result.metrics) {
      json j;
      j["metric"] = cm.metric;
      j["datasets_ranked"] = cm.table.datasets();
      j["mean_ranks"] = vector_json(cm.table.mean_ranks);
      j["friedman_chi_square"] = cm.friedman.chi_square;
      j["friedman_p_value"] = cm.friedman.p_value;
      j["degrees_of_freedom"] = cm.friedman.degrees_of_freedom;
      j["critical_difference"] = cm.critical_difference;
      json pairs = json::array();
      for (const auto& [a, b] : cm.significant_pairs) pairs.push_back({result.methods[a], result.methods[b]});
      j["significant_pairs"] = std::move(pairs);
      metrics.push_back(std::move(j));
    }
    root["metrics"] = std::move(metrics);
    write_text(config.output_dir / "compare.json", root.dump(2) + "\n");
  }
  return result;
}

std::vector<ExperimentConfig> synthetic_suite(std::size_t count, std::uint64_t seed, std::size_t rows) {
  static constexpr SynthKind kinds[] = {SynthKind::Linear, SynthKind::Piecewise, SynthKind::Friedman1,
                                        SynthKind::Sinusoidal};
  // Rough signal standard deviation per generator, so noise levels are comparable.
  static constexpr double signal_sd[] = {1.17, 2.46, 4.9, 1.62};
  static constexpr double noise_ratio[] = {0.1, 0.25, 0.5, 0.75, 1.0};

  std::vector<ExperimentConfig> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t kind_idx = i % 4;
    const double ratio = noise_ratio[(i / 4) % 5];
    ExperimentConfig c;
    char name[64];
    std::snprintf(name, sizeof name, "syn%02zu-%s-%.2f", i + 1, synth_kind_name(kinds[kind_idx]).c_str(), ratio);
    c.name = name;
    c.seed = seed + i;
    c.input = DatasetInput{synth_dataset(kinds[kind_idx], rows, ratio * signal_sd[kind_idx], seed * 7919 + i)};
    out.push_back(std::move(c));
  }
  return out;
}

std::optional<std::uint64_t> seed_from_environment() {
  const char* raw = std::getenv("NCLENS_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  std::uint64_t v = 0;
  const std::string s(raw);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace nclens
