#pragma once

// Turns per-node solutions into change-points, per-segment parameters and
// assembled graphs.

#include "tvising/dataset.hpp"
#include "tvising/ising.hpp"
#include "tvising/solver.hpp"

#include <vector>

namespace tvising {

inline constexpr double kDefaultTauCp = 1e-8;
inline constexpr double kDefaultTauSparse = 1e-6;

enum class EdgeRule { kMax, kMin };

struct EstimateOptions {
  double tau_cp = kDefaultTauCp;
  double tau_sparse = kDefaultTauSparse;
  EdgeRule edge_rule = EdgeRule::kMax;
  /// Worker cap for the node fits; 0 means TVISING_THREADS or hardware.
  int threads = 0;
};

/// Per-segment edge with both directed estimates: weight_ab is theta_a's
/// coordinate for b, weight_ba the converse.
struct EstimatedEdge {
  int a = 0;
  int b = 0;
  double weight_ab = 0.0;
  double weight_ba = 0.0;
};

struct EstimatedModel {
  int n = 0;
  int p = 0;
  std::vector<int> change_points;  // union over nodes, 1-based timestamps
  /// theta[a][j]: neighborhood of node a on segment j, length p-1.
  std::vector<std::vector<Eigen::VectorXd>> theta;
  std::vector<std::vector<EstimatedEdge>> segment_edges;
  /// Change-points detected by each node alone.
  std::vector<std::vector<int>> node_change_points;
  std::vector<NodeSolution> solutions;

  int num_segments() const { return static_cast<int>(change_points.size()) + 1; }
  int segment_of(int i) const;
  EdgeSet edges(int segment) const;
  /// Edge set of the segment containing each timestamp.
  std::vector<EdgeSet> timestamp_edges() const;
  /// theta[a][j] embedded in a length-p vector (zero at a).
  Eigen::VectorXd full_neighborhood(int node, int segment) const;
};

/// Timestamps i in {2..n} where this solution's columns i-1, i differ by more
/// than tau_cp in l2.
std::vector<int> node_change_points(const NodeSolution& solution, double tau_cp);

/// Union over nodes of node_change_points.
std::vector<int> extract_change_points(const std::vector<NodeSolution>& solutions,
                                       double tau_cp = kDefaultTauCp);

/// theta[a][j] = mean of node a's columns over segment j.
std::vector<std::vector<Eigen::VectorXd>> segment_parameters(
    const std::vector<NodeSolution>& solutions, const std::vector<int>& change_points);

/// Max rule: (a,b) present iff max(|theta_ab|, |theta_ba|) > tau_sparse.
std::vector<std::vector<EstimatedEdge>> assemble_graphs(
    const std::vector<std::vector<Eigen::VectorXd>>& theta, double tau_sparse = kDefaultTauSparse,
    EdgeRule rule = EdgeRule::kMax);

/// Fits every node (in parallel) and assembles the model. Node failures are
/// rethrown as SolverError naming the node.
EstimatedModel fit_model(const SpinDataset& data, const PenaltyConfig& penalty,
                         const SolverOptions& opts = {}, const EstimateOptions& est = {});

/// Assembles an EstimatedModel from already fitted node solutions.
EstimatedModel build_model(std::vector<NodeSolution> solutions, int p,
                           const EstimateOptions& est = {});

/// Worker count: TVISING_THREADS if set, else hardware concurrency; capped by
/// `requested` when positive.
int worker_count(int requested = 0);

}  // namespace tvising
