#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <vector>

#include "bluelight/errors.hpp"

namespace bluelight {

struct LmSettings {
  double lambda_init = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  int max_iters = 200;
  double cost_tol = 1e-12;   // relative decrease of the squared-residual cost
  double param_tol = 1e-10;  // infinity norm of the accepted step

  void validate() const {
    if (!(lambda_init > 0.0 && cost_tol > 0.0 && param_tol > 0.0 && max_iters > 0)) {
      throw InvariantViolation("lm: settings must be positive");
    }
    if (!(lambda_up > 1.0 && lambda_down < 1.0 && lambda_down > 0.0)) {
      throw InvariantViolation("lm: need lambda_up > 1 > lambda_down > 0");
    }
  }
};

struct LmReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  // Cost after every accepted step; never increases.
  std::vector<double> cost_history;
};

// Dense Levenberg-Marquardt over a state with a retraction, so manifold
// blocks (rotations) stay on-manifold: candidate = retract(state, delta).
//
//   eval(state, residuals, jacobian_or_null)  fills residuals (and, when the
//     pointer is non-null, the tangent-space Jacobian d residual / d delta
//     at delta = 0)
//   retract(state, delta) -> state
//
// Cost is the plain sum of squared residuals. Damping scales the diagonal of
// J^T J; accepted steps shrink lambda, rejected ones grow it.
template <typename State, typename EvalFn, typename RetractFn>
std::pair<State, LmReport> minimize_levenberg_marquardt(State state, int tangent_dim,
                                                        EvalFn&& eval,
                                                        RetractFn&& retract,
                                                        const LmSettings& settings = {}) {
  settings.validate();
  LmReport report;

  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  eval(state, residuals, &jacobian);
  if (jacobian.cols() != tangent_dim) {
    throw InvariantViolation("lm: jacobian width does not match tangent dimension");
  }
  double cost = residuals.squaredNorm();
  report.initial_cost = cost;
  report.cost_history.push_back(cost);

  double lambda = settings.lambda_init;
  for (int iter = 0; iter < settings.max_iters; ++iter) {
    report.iterations = iter + 1;
    const Eigen::MatrixXd hessian = jacobian.transpose() * jacobian;
    const Eigen::VectorXd gradient = jacobian.transpose() * residuals;
    Eigen::VectorXd damped_diag = hessian.diagonal().cwiseMax(1e-12);

    Eigen::MatrixXd system = hessian;
    system.diagonal() += lambda * damped_diag;
    const Eigen::VectorXd delta = system.ldlt().solve(-gradient);
    if (!delta.allFinite()) {
      lambda *= settings.lambda_up;
      if (lambda > 1e16) break;
      continue;
    }

    const State candidate = retract(state, delta);
    Eigen::VectorXd candidate_residuals;
    eval(candidate, candidate_residuals, nullptr);
    const double candidate_cost = candidate_residuals.squaredNorm();

    if (candidate_cost < cost) {
      const double decrease = cost - candidate_cost;
      state = candidate;
      cost = candidate_cost;
      report.cost_history.push_back(cost);
      lambda = std::max(lambda * settings.lambda_down, 1e-12);
      eval(state, residuals, &jacobian);
      if (decrease <= settings.cost_tol * std::max(1.0, cost) ||
          delta.lpNorm<Eigen::Infinity>() <= settings.param_tol) {
        report.converged = true;
        break;
      }
    } else {
      lambda *= settings.lambda_up;
      if (delta.lpNorm<Eigen::Infinity>() <= settings.param_tol) {
        // Cannot move: treat the current point as converged.
        report.converged = true;
        break;
      }
      if (lambda > 1e16) break;
    }
  }
  report.final_cost = cost;
  return {std::move(state), report};
}

// Central-difference Jacobian through the retraction, for verifying the
// analytic Jacobians that the solvers use.
template <typename State, typename EvalFn, typename RetractFn>
Eigen::MatrixXd finite_difference_jacobian(const State& state, int tangent_dim,
                                           EvalFn&& eval, RetractFn&& retract,
                                           double step = 1e-6) {
  Eigen::VectorXd base;
  eval(state, base, nullptr);
  Eigen::MatrixXd jacobian(base.size(), tangent_dim);
  for (int j = 0; j < tangent_dim; ++j) {
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(tangent_dim);
    delta[j] = step;
    Eigen::VectorXd plus, minus;
    eval(retract(state, delta), plus, nullptr);
    delta[j] = -step;
    eval(retract(state, delta), minus, nullptr);
    jacobian.col(j) = (plus - minus) / (2.0 * step);
  }
  return jacobian;
}

}  // namespace bluelight
