#include "nclens/simplex_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nclens/errors.hpp"

namespace nclens {

namespace {

constexpr double kFiniteDifferenceStep = 1e-6;
constexpr double kRoundoffSlack = 10.0 * std::numeric_limits<double>::epsilon();

Matrix finite_difference_hessian(const SolverProblem& p, const Vector& w) {
  const auto m = w.size();
  Matrix h(m, m);
  Vector probe = w;
  for (Eigen::Index j = 0; j < m; ++j) {
    probe(j) = w(j) + kFiniteDifferenceStep;
    const Vector gp = p.gradient(probe);
    probe(j) = w(j) - kFiniteDifferenceStep;
    const Vector gm = p.gradient(probe);
    probe(j) = w(j);
    h.col(j) = (gp - gm) / (2.0 * kFiniteDifferenceStep);
  }
  return 0.5 * (h + h.transpose());
}

class BarrierState {
 public:
  BarrierState(const SolverProblem& p) : p_(p) {}

  double barrier_value(const Vector& w, double mu) const {
    const double f = p_.objective(w);
    if (!std::isfinite(f)) throw NumericalFailure("objective is not finite at an interior point");
    return f - mu * w.array().log().sum();
  }

  Vector gradient(const Vector& w) const {
    Vector g = p_.gradient(w);
    if (g.size() != w.size()) throw ContractViolation("gradient callback returned the wrong dimension");
    if (!g.allFinite()) throw NumericalFailure("gradient is not finite at an interior point");
    return g;
  }

  Matrix hessian(const Vector& w) const {
    Matrix h = p_.hessian ? p_.hessian(w) : finite_difference_hessian(p_, w);
    if (h.rows() != w.size() || h.cols() != w.size()) {
      throw ContractViolation("hessian callback returned the wrong dimension");
    }
    if (!h.allFinite()) throw NumericalFailure("hessian is not finite at an interior point");
    return h;
  }

 private:
  const SolverProblem& p_;
};

// Stationarity of the barrier subproblem in the w-scaled metric: coordinates near
// the boundary carry curvature mu / w^2, so their raw gradient error says little.
// The multiplier is the least-squares fit in the same metric. Scaling only kicks
// in for gradients above 100, as in common interior-point codes.
double stationarity(const Vector& w, const Vector& objective_grad, const Vector& barrier_grad) {
  const Vector w2 = w.cwiseAbs2();
  const double nu = w2.dot(barrier_grad) / w2.sum();
  const double scale = std::max(1.0, objective_grad.cwiseAbs().maxCoeff() / 100.0);
  return (w.array() * (barrier_grad.array() - nu)).abs().maxCoeff() / scale;
}

// Newton direction for min phi s.t. 1'w = 1, regularising the (1,1) block until
// the direction has positive curvature.
Vector newton_direction(const Matrix& hess, const Vector& barrier_grad, double sum_residual) {
  const auto m = barrier_grad.size();
  Matrix kkt = Matrix::Zero(m + 1, m + 1);
  Vector rhs(m + 1);
  rhs.head(m) = -barrier_grad;
  rhs(m) = sum_residual;

  const double diag_scale = std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
  double shift = 0.0;
  for (int attempt = 0; attempt < 40; ++attempt) {
    kkt.topLeftCorner(m, m) = hess;
    kkt.topLeftCorner(m, m).diagonal().array() += shift;
    kkt.block(0, m, m, 1).setOnes();
    kkt.block(m, 0, 1, m).setOnes();
    kkt(m, m) = 0.0;

    const Vector sol = kkt.fullPivLu().solve(rhs);
    const Vector d = sol.head(m);
    if (d.allFinite()) {
      const double curvature = d.dot(kkt.topLeftCorner(m, m) * d);
      if (curvature > 0.0 || d.squaredNorm() == 0.0) return d;
    }
    shift = shift == 0.0 ? 1e-8 * diag_scale : shift * 10.0;
  }
  return Vector::Zero(m);
}

}  // namespace

void SolverOptions::validate() const {
  if (!(mu_initial > 0.0)) throw ContractViolation("mu_initial must be positive");
  if (!(mu_shrink > 0.0 && mu_shrink < 1.0)) throw ContractViolation("mu_shrink must lie in (0, 1)");
  if (!(kkt_tolerance > 0.0)) throw ContractViolation("kkt_tolerance must be positive");
  if (max_outer_iterations < 1 || max_inner_iterations < 1) throw ContractViolation("iteration caps must be positive");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ContractViolation("armijo_c must lie in (0, 1)");
  if (!(boundary_fraction > 0.0 && boundary_fraction < 1.0)) throw ContractViolation("boundary_fraction must lie in (0, 1)");
}

SolverResult solve(const SolverProblem& problem, const SolverOptions& options, const std::optional<Vector>& start) {
  options.validate();
  if (problem.dim < 1) throw ContractViolation("solver problem needs dim >= 1");
  if (!problem.objective || !problem.gradient) throw ContractViolation("solver problem needs objective and gradient");
  const auto m = static_cast<Eigen::Index>(problem.dim);

  SolverResult result;
  if (m == 1) {
    result.w = Vector::Ones(1);
    result.objective_value = problem.objective(result.w);
    result.converged = true;
    result.min_iterate_entry = 1.0;
    return result;
  }

  Vector w;
  if (start) {
    if (start->size() != m) throw ContractViolation("start point has the wrong dimension");
    if (!start->allFinite() || start->minCoeff() <= 0.0) throw ContractViolation("start point must be strictly interior");
    if (std::abs(start->sum() - 1.0) > WeightVector::kSumTolerance) throw ContractViolation("start point must sum to 1");
    w = *start;
  } else {
    w = Vector::Constant(m, 1.0 / static_cast<double>(m));
  }

  const BarrierState state(problem);
  double mu = options.mu_initial;
  state.barrier_value(w, mu);
  const double mu_floor = options.kkt_tolerance / 10.0;
  result.min_iterate_entry = w.minCoeff();
  double last_stationarity = std::numeric_limits<double>::infinity();

  for (int outer = 1; outer <= options.max_outer_iterations; ++outer) {
    result.outer_iterations = outer;
    const double inner_tolerance = std::max(10.0 * mu, options.kkt_tolerance);

    for (int inner = 0; inner < options.max_inner_iterations; ++inner) {
      const Vector g = state.gradient(w);
      const Vector barrier_grad = g.array() - mu / w.array();
      last_stationarity = stationarity(w, g, barrier_grad);
      if (last_stationarity <= inner_tolerance) break;

      Matrix hess = state.hessian(w);
      hess.diagonal().array() += mu / w.array().square();
      const Vector d = newton_direction(hess, barrier_grad, 1.0 - w.sum());
      const double slope = barrier_grad.dot(d);
      if (!(slope < 0.0)) break;

      double step = 1.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (d(j) < 0.0) step = std::min(step, options.boundary_fraction * w(j) / -d(j));
      }

      const double phi0 = state.barrier_value(w, mu);
      bool accepted = false;
      Vector trial;
      while (step > 1e-16) {
        trial = w + step * d;
        if (trial.minCoeff() > 0.0) {
          const double phi = state.barrier_value(trial, mu);
          if (phi <= phi0 + options.armijo_c * step * slope + kRoundoffSlack * std::abs(phi0)) {
            accepted = true;
            if (options.on_iterate) {
              options.on_iterate(IterateInfo{outer, inner, mu, phi, &trial});
            }
            break;
          }
        }
        step *= 0.5;
      }
      if (!accepted) break;
      w = std::move(trial);
      result.min_iterate_entry = std::min(result.min_iterate_entry, w.minCoeff());
      ++result.inner_iterations;
    }

    {
      const Vector g = state.gradient(w);
      last_stationarity = stationarity(w, g, Vector(g.array() - mu / w.array()));
    }
    if (mu <= options.kkt_tolerance && last_stationarity <= options.kkt_tolerance) {
      result.converged = true;
      break;
    }
    if (mu <= mu_floor) {
      // Barrier already at its floor: keep iterating only on stationarity.
      continue;
    }
    mu = std::max(mu * options.mu_shrink, mu_floor);
  }

  result.kkt_residual = std::max(last_stationarity, mu);
  w /= w.sum();
  result.w = std::move(w);
  result.objective_value = problem.objective(result.w);
  return result;
}

double check_gradient(const SolverProblem& problem, const Vector& at, double step) {
  if (static_cast<std::size_t>(at.size()) != problem.dim) throw ContractViolation("check point has the wrong dimension");
  if (!(step > 0.0)) throw ContractViolation("finite-difference step must be positive");
  if (at.minCoeff() <= 0.0) throw ContractViolation("check point must be strictly interior");
  const auto m = at.size();
  const Vector g = problem.gradient(at);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    Vector dir = Vector::Constant(m, -1.0 / static_cast<double>(m));
    dir(j) += 1.0;
    const double fd = (problem.objective(at + step * dir) - problem.objective(at - step * dir)) / (2.0 * step);
    const double analytic = g.dot(dir);
    const double dev = std::abs(fd - analytic) / std::max({1.0, std::abs(analytic), std::abs(fd)});
    worst = std::max(worst, dev);
  }
  return worst;
}

}  // namespace nclens
