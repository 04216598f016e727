#pragma once

// Node-wise penalized conditional likelihood:
//
//   min_beta  L_a(beta) + lambda1 * sum_{i>=2} fuse(beta_i - beta_{i-1})
//                       + lambda2 * sum_i ||beta_i||_1
//
// beta is (p-1) x n, column i holding the neighborhood weights of node a at
// timestamp i. fuse() is ||.||_2 (group fused, piece-wise constant as a whole)
// or ||.||_1 (coordinate-wise fused). Solved by monotone FISTA with restarts;
// the nonsmooth step uses exact or Dykstra-composed proximal maps.

#include "tvising/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace tvising {

enum class FusedNorm { kGroupL2, kL1 };

struct PenaltyConfig {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  FusedNorm fused_norm = FusedNorm::kGroupL2;

  void validate() const;
};

enum class StepRule { kFixedLipschitz, kBacktracking };

struct SolverOptions {
  int max_outer_iter = 20000;
  /// Relative objective decrease below which the outer loop stops.
  double tol_outer = 1e-9;
  /// Upper bound on the inner proximal tolerance (duality gap / iterate change).
  double tol_inner = 1e-8;
  /// Accepted certificate: violation <= tol_stationarity * (1 + |objective|).
  double tol_stationarity = 1e-4;
  StepRule step_rule = StepRule::kFixedLipschitz;
  int max_inner_iter = 5000;
  /// Directions sampled by the certificate computed at the end of fit_node.
  int certificate_directions = 64;
  std::uint64_t certificate_seed = 7;

  void validate() const;
};

struct NodeSolution {
  int node = 0;
  Eigen::MatrixXd beta;  // (p-1) x n
  double objective = 0.0;
  int iterations = 0;
  double stationarity_violation = 0.0;
  /// False when some inner proximal solve hit its iteration cap.
  bool inner_converged = true;
  /// True when the outer loop met tol_outer before max_outer_iter.
  bool converged = false;
};

/// Design of one node-wise problem: the rest-of-spins of every observation,
/// stacked over timestamps, and the node's own spins as targets.
class NodeProblem {
public:
  NodeProblem(const SpinDataset& data, int node);

  int node() const { return node_; }
  int dim() const { return static_cast<int>(x_.cols()); }
  int n() const { return static_cast<int>(offsets_.size()) - 1; }
  int observations() const { return static_cast<int>(x_.rows()); }

  double loss(const Eigen::MatrixXd& beta) const;
  /// Loss value; the gradient is written to `grad` (resized as needed).
  double loss_and_gradient(const Eigen::MatrixXd& beta, Eigen::MatrixXd& grad) const;

  /// max_i lambda_max(X_i^T X_i): the loss Hessian is block diagonal over
  /// timestamps with blocks bounded by X_i^T X_i.
  double lipschitz() const { return lipschitz_; }
  /// (p-1) * sum_i n^(i); valid but looser.
  double crude_lipschitz() const;

private:
  void check_shape(const Eigen::MatrixXd& beta) const;

  int node_;
  Eigen::MatrixXd x_;             // N x (p-1)
  Eigen::VectorXd y_;             // N
  std::vector<Eigen::Index> offsets_;  // n + 1 row offsets
  double lipschitz_ = 0.0;
};

struct LossAndGradient {
  double value = 0.0;
  Eigen::MatrixXd gradient;
};

/// Summed negative conditional log-likelihood of node a and its gradient.
LossAndGradient node_loss_and_gradient(const Eigen::MatrixXd& beta, const SpinDataset& data,
                                       int node);

double penalty_value(const Eigen::MatrixXd& beta, const PenaltyConfig& penalty);

// --- proximal maps ---------------------------------------------------------

/// Elementwise soft-threshold.
Eigen::MatrixXd prox_l1(const Eigen::MatrixXd& v, double tau);

struct ProxStats {
  int iterations = 0;
  double residual = 0.0;  // duality gap or last iterate change
  bool converged = true;
};

/// argmin_B 1/2||B - v||_F^2 + tau * sum_i ||B_i - B_{i-1}||_2 by block
/// coordinate ascent on the dual (one l2-ball constrained block per column
/// difference), accelerated by exact solves over runs of inactive blocks.
/// Columns inside a fused run are returned exactly equal.
///
/// `dual`, when given, is used as warm start and receives the final dual
/// ((rows) x (cols-1)).
Eigen::MatrixXd prox_group_fused(const Eigen::MatrixXd& v, double tau, double tol = 1e-12,
                                 int max_passes = 100000, Eigen::MatrixXd* dual = nullptr,
                                 ProxStats* stats = nullptr);

/// Exact 1-D total variation denoising (taut string, linear time in practice).
Eigen::VectorXd prox_fused_1d(const Eigen::VectorXd& v, double tau);

/// Warm-start state for repeated prox_combined calls of one fit.
struct ProxWorkspace {
  Eigen::MatrixXd fused_dual;   // dual of the fused term, one column per difference
  Eigen::MatrixXd sparse_dual;  // dual of the l1 term
};

/// Proximal map of tau1 * fused + tau2 * l1.
/// kGroupL2: Dykstra alternation of a group-fused dual pass and prox_l1
/// until successive iterates differ by <= tol_inner (Frobenius); the result
/// is then snapped so fused runs are exactly equal and dust is exactly zero.
/// kL1: exact, prox_fused_1d per row followed by soft-thresholding.
Eigen::MatrixXd prox_combined(const Eigen::MatrixXd& v, double tau1, double tau2,
                              FusedNorm fused_norm, double tol_inner = 1e-10,
                              ProxWorkspace* workspace = nullptr, ProxStats* stats = nullptr,
                              int max_iter = 5000);

// --- fitting ---------------------------------------------------------------

/// FISTA (monotone, function-value restart) from beta = 0.
/// Throws SolverError on non-finite iterates.
NodeSolution fit_node(const SpinDataset& data, int node, const PenaltyConfig& penalty,
                      const SolverOptions& opts = {});
NodeSolution fit_node(const NodeProblem& problem, const PenaltyConfig& penalty,
                      const SolverOptions& opts = {});

/// Exact one-sided directional derivative of the penalized objective at beta
/// in direction dir, given the loss gradient at beta.
double directional_derivative(const Eigen::MatrixXd& beta, const Eigen::MatrixXd& loss_gradient,
                              const Eigen::MatrixXd& dir, const PenaltyConfig& penalty);

/// max(0, -min_V f'(beta; V)) over `num_directions` unit directions, half
/// Gaussian and half signed coordinate vectors. Zero iff no sampled direction
/// descends; for a convex objective f' >= 0 everywhere is optimality.
double check_stationarity(const Eigen::MatrixXd& beta, const NodeProblem& problem,
                          const PenaltyConfig& penalty, int num_directions, std::uint64_t seed);
double check_stationarity(const NodeSolution& solution, const SpinDataset& data,
                          const PenaltyConfig& penalty, int num_directions, std::uint64_t seed);

/// Stationarity bound used to accept a fit.
inline double stationarity_threshold(const NodeSolution& s, const SolverOptions& opts) {
  return opts.tol_stationarity * (1.0 + (s.objective < 0 ? -s.objective : s.objective));
}

}  // namespace tvising
