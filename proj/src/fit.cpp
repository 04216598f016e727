#include "tvising/errors.hpp"
#include "tvising/sampler.hpp"
#include "tvising/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tvising {

namespace {

// Consecutive small-decrease iterations required before stopping.
constexpr int kStallPatience = 3;

double dd_norm2(const Eigen::VectorXd& g, const Eigen::VectorXd& u) {
  const double gn = g.norm();
  return gn > 0.0 ? g.dot(u) / gn : u.norm();
}

double dd_norm1(const Eigen::VectorXd& g, const Eigen::VectorXd& u) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < g.size(); ++k)
    s += g(k) > 0.0 ? u(k) : (g(k) < 0.0 ? -u(k) : std::abs(u(k)));
  return s;
}

}  // namespace

double directional_derivative(const Eigen::MatrixXd& beta, const Eigen::MatrixXd& loss_gradient,
                              const Eigen::MatrixXd& dir, const PenaltyConfig& penalty) {
  double value = (loss_gradient.array() * dir.array()).sum();
  if (penalty.lambda1 != 0.0) {
    double fused = 0.0;
    for (Eigen::Index i = 1; i < beta.cols(); ++i) {
      const Eigen::VectorXd g = beta.col(i) - beta.col(i - 1);
      const Eigen::VectorXd u = dir.col(i) - dir.col(i - 1);
      fused += penalty.fused_norm == FusedNorm::kGroupL2 ? dd_norm2(g, u) : dd_norm1(g, u);
    }
    value += penalty.lambda1 * fused;
  }
  if (penalty.lambda2 != 0.0) {
    double sparse = 0.0;
    for (Eigen::Index i = 0; i < beta.cols(); ++i)
      sparse += dd_norm1(beta.col(i), dir.col(i));
    value += penalty.lambda2 * sparse;
  }
  return value;
}

double check_stationarity(const Eigen::MatrixXd& beta, const NodeProblem& problem,
                          const PenaltyConfig& penalty, int num_directions, std::uint64_t seed) {
  if (!beta.allFinite()) throw ValidationError("check_stationarity: beta is not finite");
  Eigen::MatrixXd grad;
  problem.loss_and_gradient(beta, grad);
  Rng rng = make_rng(seed, 400, static_cast<std::uint64_t>(problem.node()));
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<Eigen::Index> coord(0, beta.size() - 1);
  std::bernoulli_distribution coin(0.5);
  double worst = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd dir(beta.rows(), beta.cols());
  for (int m = 0; m < num_directions; ++m) {
    if (m % 2 == 0) {
      for (Eigen::Index k = 0; k < dir.size(); ++k) dir(k) = gauss(rng);
      dir /= dir.norm();
    } else {
      dir.setZero();
      dir(coord(rng)) = coin(rng) ? 1.0 : -1.0;
    }
    worst = std::min(worst, directional_derivative(beta, grad, dir, penalty));
  }
  return num_directions == 0 ? 0.0 : std::max(0.0, -worst);
}

double check_stationarity(const NodeSolution& solution, const SpinDataset& data,
                          const PenaltyConfig& penalty, int num_directions, std::uint64_t seed) {
  const NodeProblem problem(data, solution.node);
  return check_stationarity(solution.beta, problem, penalty, num_directions, seed);
}

NodeSolution fit_node(const SpinDataset& data, int node, const PenaltyConfig& penalty,
                      const SolverOptions& opts) {
  return fit_node(NodeProblem(data, node), penalty, opts);
}

NodeSolution fit_node(const NodeProblem& problem, const PenaltyConfig& penalty,
                      const SolverOptions& opts) {
  penalty.validate();
  opts.validate();
  const int d = problem.dim();
  const int n = problem.n();
  auto objective = [&](const Eigen::MatrixXd& b, double loss) {
    return loss + penalty_value(b, penalty);
  };
  auto fail = [&](int it) {
    throw SolverError("node " + std::to_string(problem.node() + 1) +
                      ": non-finite iterate at outer iteration " + std::to_string(it));
  };

  NodeSolution sol;
  sol.node = problem.node();

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(d, n);
  Eigen::MatrixXd x_prev = x;
  Eigen::MatrixXd y = x;
  Eigen::MatrixXd z;
  Eigen::MatrixXd grad;
  double fx = objective(x, problem.loss(x));

  const bool backtracking = opts.step_rule == StepRule::kBacktracking;
  double lip = problem.lipschitz() > 0.0 ? problem.lipschitz() : 1.0;
  if (backtracking) lip = std::max(1e-3, lip / 64.0);

  ProxWorkspace ws;
  ProxStats pstats;
  double t = 1.0;
  int stall = 0;
  int it = 0;
  while (it < opts.max_outer_iter) {
    ++it;
    const double fy_loss = problem.loss_and_gradient(y, grad);
    const double tol_in = std::min(opts.tol_inner, opts.tol_outer * std::max(1.0, std::abs(fx)));
    double fz_loss = 0.0;
    for (;;) {
      z = prox_combined(y - grad / lip, penalty.lambda1 / lip, penalty.lambda2 / lip,
                        penalty.fused_norm, tol_in, &ws, &pstats, opts.max_inner_iter);
      if (!pstats.converged) sol.inner_converged = false;
      fz_loss = problem.loss(z);
      if (!backtracking) break;
      const Eigen::MatrixXd step = z - y;
      const double model = fy_loss + (grad.array() * step.array()).sum() +
                           0.5 * lip * step.squaredNorm();
      if (fz_loss <= model + 1e-12 * std::abs(fy_loss)) break;
      lip *= 2.0;
    }
    if (!z.allFinite() || !std::isfinite(fz_loss)) fail(it);
    const double fz = objective(z, fz_loss);

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (fz <= fx) {
      const double decrease = fx - fz;
      x_prev = x;
      x = z;
      fx = fz;
      y = x + ((t - 1.0) / t_next) * (x - x_prev);
      t = t_next;
      stall = decrease <= opts.tol_outer * std::max(1.0, std::abs(fx)) ? stall + 1 : 0;
      if (stall >= kStallPatience) {
        sol.converged = true;
        break;
      }
    } else {
      // Function-value restart: drop momentum and take a plain step from x.
      y = x;
      t = 1.0;
    }
  }

  // Final plain proximal-gradient step with a tight inner tolerance so the
  // returned point carries the exact fused/sparse structure.
  {
    const double fx_loss = problem.loss_and_gradient(x, grad);
    (void)fx_loss;
    z = prox_combined(x - grad / lip, penalty.lambda1 / lip, penalty.lambda2 / lip,
                      penalty.fused_norm, std::min(opts.tol_inner, 1e-12), &ws, &pstats,
                      opts.max_inner_iter * 4);
    if (z.allFinite()) {
      const double fz = objective(z, problem.loss(z));
      if (fz <= fx) {
        x = z;
        fx = fz;
      }
    }
  }

  sol.beta = std::move(x);
  sol.objective = fx;
  sol.iterations = it;
  sol.stationarity_violation =
      check_stationarity(sol.beta, problem, penalty, opts.certificate_directions,
                         opts.certificate_seed);
  return sol;
}

}  // namespace tvising
