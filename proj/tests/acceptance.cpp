// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//
// Usage: acceptance [work_dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nclens/baselines.hpp"
#include "nclens/ensemble.hpp"
#include "nclens/ncl.hpp"
#include "nclens/pipeline.hpp"
#include "nclens/simplex_solver.hpp"
#include "nclens/stats.hpp"
#include "oracles.hpp"

using namespace nclens;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

PredictionMatrix random_preds(std::mt19937_64& rng, int n, int m) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  Vector y(n);
  for (int i = 0; i < n; ++i) y(i) = 5.0 * g(rng);
  Matrix v(n, m);
  for (int j = 0; j < m; ++j) {
    const double scale = u(rng);
    const double bias = g(rng);
    for (int i = 0; i < n; ++i) v(i, j) = y(i) + bias + scale * g(rng);
  }
  std::vector<std::string> names;
  for (int j = 0; j < m; ++j) names.push_back("c" + std::to_string(j));
  return PredictionMatrix(v, y, names);
}

// Random simplex point, sometimes with exact zeros.
Vector random_weights(std::mt19937_64& rng, int m) {
  Vector w = oracle::random_simplex_point(rng, m, 0.0);
  if (m > 1 && rng() % 3 == 0) {
    w(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(m))) = 0.0;
    if (w.sum() == 0.0) w(0) = 1.0;
    w /= w.sum();
  }
  return w;
}

// Criterion 1
Outcome ambiguity_identity() {
  std::mt19937_64 rng(101);
  double worst_identity = 0.0;
  double worst_direct = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int n = 1 + static_cast<int>(rng() % 50);
    const int m = 1 + static_cast<int>(rng() % 10);
    const auto p = random_preds(rng, n, m);
    const WeightVector w = WeightVector::normalized(random_weights(rng, m));
    const auto r = ambiguity_decomposition(p, w);
    const Vector fh = combine(p, w);
    double direct = 0.0;
    for (int i = 0; i < n; ++i) direct += (fh(i) - p.y_true()(i)) * (fh(i) - p.y_true()(i));
    direct /= n;
    worst_identity = std::max(worst_identity, std::abs(r.ensemble_mse - (r.weighted_member_mse - r.ambiguity)));
    worst_direct = std::max(worst_direct, std::abs(direct - (r.weighted_member_mse - r.ambiguity)));
    worst_direct = std::max(worst_direct, std::abs(oracle::ensemble_mse(p.values(), p.y_true(), w.values()) - r.ensemble_mse));
  }
  return {worst_identity <= 1e-9 && worst_direct <= 1e-9,
          "max identity gap " + fmt("%.2e", worst_identity) + ", max direct-mse gap " + fmt("%.2e", worst_direct)};
}

// Criterion 2
Outcome bvc_identity() {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(rng() % 20);
    const int m = 2 + static_cast<int>(rng() % 6);
    const int trials = 5 + static_cast<int>(rng() % 6);
    Vector y_hat(n);
    for (int i = 0; i < n; ++i) y_hat(i) = 3.0 * g(rng);
    std::vector<PredictionMatrix> ens;
    double brute = 0.0;
    std::vector<std::string> names;
    for (int j = 0; j < m; ++j) names.push_back("c" + std::to_string(j));
    for (int k = 0; k < trials; ++k) {
      Matrix v(n, m);
      for (int i = 0; i < n; ++i) {
        const double shared = g(rng);
        for (int j = 0; j < m; ++j) v(i, j) = y_hat(i) + 0.3 * j + shared + g(rng);
      }
      for (int i = 0; i < n; ++i) {
        double fh = 0.0;
        for (int j = 0; j < m; ++j) fh += v(i, j);
        fh /= m;
        brute += (fh - y_hat(i)) * (fh - y_hat(i));
      }
      ens.emplace_back(v, y_hat, names);
    }
    brute /= static_cast<double>(n) * trials;
    const auto r = bvc_decomposition(ens, y_hat);
    worst = std::max(worst, std::abs(r.reconstructed_mse - brute));
  }
  return {worst <= 1e-9, "max |B^2 + V/m + (1-1/m)C - empirical| " + fmt("%.2e", worst)};
}

// Criterion 3
Outcome solver_oracle() {
  std::mt19937_64 rng(303);
  std::normal_distribution<double> g(0.0, 1.0);
  const int dims[] = {2, 3, 5, 10};
  double worst_w = 0.0;
  double worst_f = 0.0;
  bool interior = true;
  bool converged = true;
  for (int t = 0; t < 100; ++t) {
    const int m = dims[t % 4];
    Matrix a(m, m);
    Vector b(m);
    if (t % 2 == 0) {
      // Isotropic: 0.5 w'Aw + b'w = s * ||w - q||^2 + const, minimiser is the projection of q.
      const double s = 0.5 + std::abs(g(rng));
      Vector q(m);
      for (int j = 0; j < m; ++j) q(j) = g(rng);
      a = 2.0 * s * Matrix::Identity(m, m);
      b = -2.0 * s * q;
    } else {
      Matrix l(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) l(i, j) = g(rng);
      a = l * l.transpose() + 0.1 * Matrix::Identity(m, m);
      for (int j = 0; j < m; ++j) b(j) = 2.0 * g(rng);
    }
    SolverProblem p;
    p.dim = static_cast<std::size_t>(m);
    p.objective = [a, b](const Vector& w) { return 0.5 * w.dot(a * w) + b.dot(w); };
    p.gradient = [a, b](const Vector& w) { return Vector(a * w + b); };
    SolverOptions opts;
    opts.on_iterate = [&](const IterateInfo& info) {
      if (!(info.w->minCoeff() > 0.0)) interior = false;
    };
    const auto r = solve(p, opts);
    converged = converged && r.converged;
    if (!(r.min_iterate_entry > 0.0)) interior = false;

    Vector expect = oracle::simplex_qp_by_enumeration(a, b);
    if (t % 2 == 0) {
      const Vector proj = oracle::project_to_simplex(-b / a(0, 0));
      // The two oracles must agree before either is trusted.
      if ((proj - expect).cwiseAbs().maxCoeff() > 1e-9) return {false, "projection and enumeration oracles disagree"};
    }
    if (m <= 3) {
      const Vector grid = oracle::grid_minimize(p.objective, m, 1e-3);
      if ((grid - expect).cwiseAbs().maxCoeff() > 2e-3) return {false, "grid and enumeration oracles disagree"};
    }
    worst_w = std::max(worst_w, (r.w - expect).cwiseAbs().maxCoeff());
    worst_f = std::max(worst_f, std::abs(r.objective_value - p.objective(expect)));
  }
  return {worst_w <= 1e-4 && worst_f <= 1e-6 && interior && converged,
          "max |w - w*| " + fmt("%.2e", worst_w) + ", max |F - F*| " + fmt("%.2e", worst_f) +
              (interior ? ", all iterates interior" : ", an iterate left the interior") +
              (converged ? "" : ", a solve did not converge")};
}

// Criterion 4
Outcome gradient_check() {
  std::mt19937_64 rng(404);
  const double lambdas[] = {0.0, 0.3, 0.7, 1.0};
  const double alphas[] = {0.0, 0.05};
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int m = 2 + static_cast<int>(rng() % 9);
    const int n = 5 + static_cast<int>(rng() % 60);
    const auto p = random_preds(rng, n, m);
    const double lambda = lambdas[t % 4];
    const Vector alpha = Vector::Constant(m, alphas[(t / 4) % 2]);
    const Vector w = oracle::random_simplex_point(rng, m);
    const Vector an = ncl_gradient(p, w, lambda, alpha);
    const Vector fd = oracle::fd_gradient(
        [&](const Vector& x) { return oracle::ncl_objective(p.values(), p.y_true(), x, lambda, alpha); }, w, 1e-6);
    worst = std::max(worst, (an - fd).cwiseAbs().maxCoeff() / std::max(1.0, an.cwiseAbs().maxCoeff()));
  }
  return {worst <= 1e-5, "max relative deviation " + fmt("%.2e", worst)};
}

// Criterion 5
Outcome lambda_zero_selection() {
  std::mt19937_64 rng(505);
  double min_weight = 1.0;
  double worst_mse = 0.0;
  int done = 0;
  while (done < 50) {
    const int m = 2 + static_cast<int>(rng() % 7);
    const auto p = random_preds(rng, 20 + static_cast<int>(rng() % 200), m);
    const Vector zeta = member_mse(p);
    Vector::Index best;
    const double lo = zeta.minCoeff(&best);
    Vector rest = zeta;
    rest(best) = INFINITY;
    if (rest.minCoeff() - lo < 1e-3 * lo) continue;  // needs a unique minimiser
    const auto fit = fit_weights(p, NclConfig{});
    min_weight = std::min(min_weight, fit.weights[static_cast<std::size_t>(best)]);
    worst_mse = std::max(worst_mse, std::abs(mean_squared_error(combine(p, fit.weights), p.y_true()) - lo));
    ++done;
  }
  return {min_weight >= 1.0 - 1e-4 && worst_mse <= 1e-6,
          "min argmin weight " + fmt("%.10f", min_weight) + ", max mse gap " + fmt("%.2e", worst_mse)};
}

struct SuiteMatrices {
  std::vector<std::string> names;
  std::vector<MatrixInput> matrices;
  double seconds = 0.0;
};

SuiteMatrices build_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto suite = synthetic_suite(20, 42);
  std::vector<std::future<MatrixInput>> jobs;
  for (const auto& c : suite) jobs.push_back(std::async(std::launch::async, [&c] { return prepare_matrices(c); }));
  SuiteMatrices out;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    out.names.push_back(suite[i].name);
    out.matrices.push_back(jobs[i].get());
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// Criterion 6
Outcome search_contract(const SuiteMatrices& s, std::vector<NclFit>& fits) {
  int max_calls = 0;
  bool resolution = true;
  bool argmin = true;
  for (const auto& mi : s.matrices) {
    if (mi.validation.samples() > 2000 || mi.validation.models() > 8) return {false, "suite exceeds n_val/m limits"};
    NclFit fit = search_lambda(mi.validation, NclConfig{});
    max_calls = std::max(max_calls, fit.solver_invocations);
    const double scaled = fit.lambda_star * 1000.0;
    if (std::abs(scaled - std::round(scaled)) > 1e-9) resolution = false;
    for (const auto& c : fit.trace) {
      if (!c.failed && fit.validation_error > c.validation_error) argmin = false;
    }
    fits.push_back(std::move(fit));
  }
  return {max_calls <= 60 && resolution && argmin,
          "max solver invocations " + std::to_string(max_calls) + (resolution ? ", 0.001 resolution" : ", bad resolution") +
              (argmin ? ", best <= every candidate" : ", a candidate beat the returned error")};
}

// Criterion 7
Outcome ncl_vs_bem(const SuiteMatrices& s, const std::vector<NclFit>& fits) {
  int wins = 0;
  std::vector<double> improvements;
  for (std::size_t d = 0; d < s.matrices.size(); ++d) {
    const auto& test = s.matrices[d].test;
    const double ncl = predict(fits[d], test).errors.rmse;
    const double base = error_triple(combine(test, bem(test.models())), test.y_true()).rmse;
    if (ncl <= base) ++wins;
    improvements.push_back(improvement_percent(base, ncl));
  }
  std::sort(improvements.begin(), improvements.end());
  const std::size_t k = improvements.size();
  const double median = k % 2 ? improvements[k / 2] : 0.5 * (improvements[k / 2 - 1] + improvements[k / 2]);
  const double share = static_cast<double>(wins) / static_cast<double>(k);
  return {share >= 0.6 && median > 0.0,
          "NCL <= BEM on " + std::to_string(wins) + "/" + std::to_string(k) + " datasets, median RMSE improvement " +
              fmt("%.2f", median) + "%"};
}

// Criterion 8
Outcome regularized_variant(const SuiteMatrices& s) {
  int converged = 0;
  double min_change = INFINITY;
  double worst_bookkeeping = 0.0;
  for (const auto& mi : s.matrices) {
    const std::size_t m = mi.validation.models();
    const NclConfig reg = NclConfig::regularized(m);
    const NclFit fr = search_lambda(mi.validation, reg);
    if (fr.converged) ++converged;
    NclConfig plain;
    plain.lambda = fr.lambda_star;
    const NclFit f0 = fit_weights(mi.validation, plain);
    min_change = std::min(min_change, (fr.weights.values() - f0.weights.values()).cwiseAbs().maxCoeff());
    const Vector& w = fr.weights.values();
    const Vector alpha = reg.alpha_for(m);
    const double phi_a = ncl_objective(mi.validation, w, fr.lambda_star, alpha);
    const double phi_0 = ncl_objective(mi.validation, w, fr.lambda_star, Vector());
    worst_bookkeeping = std::max(worst_bookkeeping, std::abs(phi_a - (phi_0 + alpha.dot(w.cwiseAbs2()))));
  }
  const int total = static_cast<int>(s.matrices.size());
  return {converged == total && min_change > 0.0 && worst_bookkeeping <= 1e-9,
          std::to_string(converged) + "/" + std::to_string(total) + " converged, min ||dw||_inf " + fmt("%.2e", min_change) +
              ", max bookkeeping gap " + fmt("%.2e", worst_bookkeeping)};
}

// Criterion 9
Outcome baselines() {
  std::vector<std::string> failed;
  const auto expect = [&](bool ok, const char* what) {
    if (!ok) failed.emplace_back(what);
  };
  const auto near = [](double a, double b, double tol) { return std::abs(a - b) <= tol; };
  Vector v2(2);

  v2 << 1, 1;
  expect(eiw(v2).values() == Vector::Constant(2, 0.5), "eiw [1,1]");
  v2 << 1, 3;
  {
    const auto w = eiw(v2);
    expect(near(w[0], 0.75, 1e-15) && near(w[1], 0.25, 1e-15), "eiw [1,3]");
    expect((eiw(Vector(7.0 * v2)).values() - w.values()).cwiseAbs().maxCoeff() <= 1e-15, "eiw scale invariance");
  }
  v2 << 0, 0;
  expect(eew(v2).values() == Vector::Constant(2, 0.5), "eew [0,0]");
  v2 << 0, std::log(3.0);
  {
    const auto w = eew(v2);
    expect(near(w[0], 0.75, 1e-15) && near(w[1], 0.25, 1e-15), "eew [0,ln3]");
    expect((eew(Vector(v2.array() + 5.0)).values() - w.values()).cwiseAbs().maxCoeff() <= 1e-15, "eew shift invariance");
  }

  {
    Vector y(4);
    y << 5, 6, 7, 8;
    Matrix e(4, 2);
    e << 1, 1, -1, 1, 1, -1, -1, -1;
    e.col(1) *= std::sqrt(3.0);
    const PredictionMatrix p(Matrix((-e).colwise() + y), y, {"a", "b"});
    const auto g = gem(p);
    expect(near(g.weights(0), 0.75, 1e-8) && near(g.weights(1), 0.25, 1e-8), "gem variances 1 and 3");
    Matrix dup(4, 2);
    dup << 1, 1, -1, -1, 2, 2, 0, 0;
    expect(gem(PredictionMatrix(Matrix((-dup).colwise() + y), y, {"a", "b"})).ridge_applied, "gem singular ridge");
    Matrix one(4, 1);
    one << 1, 2, 3, 4;
    expect(gem(PredictionMatrix(one, y, {"a"})).weights == Vector::Ones(1), "gem single model");
  }

  // Random diagonal-covariance constructions: orthogonal error columns.
  {
    std::mt19937_64 rng(909);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      const int n = 40;
      const int m = 2 + t % 7;
      Matrix raw(n, m);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) raw(i, j) = g(rng);
      const Matrix q = Eigen::HouseholderQR<Matrix>(raw).householderQ() * Matrix::Identity(n, m);
      Vector var(m);
      Matrix e(n, m);
      for (int j = 0; j < m; ++j) {
        var(j) = 0.2 + 5.0 * std::abs(g(rng));
        e.col(j) = q.col(j) * std::sqrt(var(j) * n);
      }
      Vector y(n);
      for (int i = 0; i < n; ++i) y(i) = g(rng);
      std::vector<std::string> names;
      for (int j = 0; j < m; ++j) names.push_back("c" + std::to_string(j));
      const Vector inv = var.cwiseInverse();
      worst = std::max(worst, (gem(PredictionMatrix(Matrix((-e).colwise() + y), y, names)).weights - inv / inv.sum())
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    expect(worst <= 1e-8, "gem inverse-variance on diagonal C");
  }

  {
    Vector y(5);
    y << 1, 4, 2, 8, 5;
    Matrix one(5, 1);
    one.col(0) = y;
    const auto s = lr_stack(PredictionMatrix(one, y, {"f"}));
    expect(near(s.coefficients(0), 1.0, 1e-8) && near(s.intercept, 0.0, 1e-8), "lr perfect column");
    Matrix two(5, 2);
    two << 0.5, 1.0, 1.0, 0.0, -2.0, 2.0, 3.0, -1.0, 0.0, 4.0;
    const Vector t = 2.0 * two.col(0) - two.col(1) + Vector::Constant(5, 3.0);
    const auto st = lr_stack(PredictionMatrix(two, t, {"a", "b"}));
    expect(near(st.coefficients(0), 2.0, 1e-8) && near(st.coefficients(1), -1.0, 1e-8) && near(st.intercept, 3.0, 1e-8),
           "lr y = 2 f1 - f2 + 3");

    std::mt19937_64 rng(910);
    std::normal_distribution<double> g(0.0, 1.0);
    const int n = 300;
    Vector yy(n);
    Matrix v(n, 2);
    for (int i = 0; i < n; ++i) {
      yy(i) = 2.0 * g(rng);
      v(i, 0) = yy(i);
      v(i, 1) = g(rng);
    }
    const auto sn = lr_stack(PredictionMatrix(v, yy, {"truth", "noise"}));
    expect(std::abs(sn.coefficients(1)) <= 1e-8, "lr noise column coefficient");
  }

  std::string detail = failed.empty() ? "all baseline examples hold" : "failed:";
  for (const auto& f : failed) detail += " [" + f + "]";
  return {failed.empty(), detail};
}

// Criterion 10
Outcome friedman_nemenyi() {
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int d = 2 + static_cast<int>(rng() % 25);
    const int k = 2 + static_cast<int>(rng() % 12);
    Matrix e(d, k);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < k; ++c) e(r, c) = t % 3 == 0 ? std::floor(5.0 * u(rng)) : u(rng);
    const double mine = stats::friedman_statistic(stats::rank_table(e)).chi_square;
    worst = std::max(worst, std::abs(mine - std::max(0.0, oracle::friedman_rank_sums(e))));
  }
  const double tied = stats::friedman_statistic(stats::rank_table(Matrix::Constant(9, 6, 1.0))).chi_square;
  bool monotone = true;
  for (double alpha : {0.05, 0.10})
    for (std::size_t k = 2; k <= 20; ++k)
      for (std::size_t d = 2; d <= 200; ++d)
        if (!(stats::nemenyi_cd(k, d, alpha) < stats::nemenyi_cd(k, d - 1, alpha))) monotone = false;
  return {worst <= 1e-10 && tied == 0.0 && monotone,
          "max |chi2 - oracle| " + fmt("%.2e", worst) + ", all-tied chi2 " + fmt("%g", tied) +
              (monotone ? ", CD decreasing in D" : ", CD not monotone")};
}

// Criterion 11
Outcome objective_identity() {
  std::mt19937_64 rng(1111);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    const int m = 1 + static_cast<int>(rng() % 10);
    const auto p = random_preds(rng, 1 + static_cast<int>(rng() % 50), m);
    const Vector w = random_weights(rng, m);
    const double lambda = t % 10 == 0 ? (t % 20 == 0 ? 0.0 : 1.0) : u(rng);
    const double phi = ncl_objective(p, w, lambda, Vector());
    const double bridge = oracle::ensemble_mse(p.values(), p.y_true(), w) + (1.0 - lambda) * oracle::ambiguity(p.values(), w);
    worst = std::max(worst, std::abs(phi - bridge));
  }
  return {worst <= 1e-9, "max |phi - (mse + (1 - lambda) ambiguity)| " + fmt("%.2e", worst)};
}

std::vector<std::pair<std::string, std::string>> read_tree(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out.emplace_back(fs::relative(entry.path(), root).string(), ss.str());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Criterion 12
Outcome determinism(const fs::path& work) {
  const fs::path a = work / "compare_a";
  const fs::path b = work / "compare_b";
  fs::remove_all(a);
  fs::remove_all(b);
  CompareConfig cc;
  cc.output_dir = a;
  batch_compare(synthetic_suite(20, 42), cc);
  cc.output_dir = b;
  cc.threads = 3;  // different scheduling must not matter
  batch_compare(synthetic_suite(20, 42), cc);
  const auto ta = read_tree(a);
  const auto tb = read_tree(b);
  if (ta.size() != tb.size()) return {false, "file counts differ"};
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i] != tb[i]) return {false, "file differs: " + ta[i].first};
  }
  return {!ta.empty(), std::to_string(ta.size()) + " files byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "nclens_acceptance";
  fs::create_directories(work);

  int failures = 0;
  const auto run = [&](int id, double budget_seconds, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = budget_seconds <= 0.0 || secs < budget_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("criterion %2d: %s | %s | %.2fs%s\n", id, pass ? "PASS" : "FAIL", o.detail.c_str(), secs,
                in_time ? "" : " (over budget)");
    std::fflush(stdout);
  };

  run(1, 5.0, ambiguity_identity);
  run(2, 5.0, bvc_identity);
  run(3, 30.0, solver_oracle);
  run(4, 10.0, gradient_check);
  run(5, 0.0, lambda_zero_selection);

  SuiteMatrices suite;
  std::vector<NclFit> fits;
  double search_seconds = 0.0;
  run(6, 300.0, [&] {
    suite = build_suite();
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = search_contract(suite, fits);
    search_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.detail += ", stage-1 build " + fmt("%.1fs", suite.seconds);
    return o;
  });
  // Criterion 7 reuses the stage-1 matrices and searches from criterion 6; their time counts toward its budget.
  run(7, 600.0 - suite.seconds - search_seconds, [&] {
    if (fits.size() != suite.matrices.size()) return Outcome{false, "criterion 6 did not produce fits"};
    return ncl_vs_bem(suite, fits);
  });
  run(8, 0.0, [&] { return regularized_variant(suite); });
  run(9, 0.0, baselines);
  run(10, 0.0, friedman_nemenyi);
  run(11, 0.0, objective_identity);
  run(12, 0.0, [&] { return determinism(work); });

  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
