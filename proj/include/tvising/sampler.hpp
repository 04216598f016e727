#pragma once

// Seeded generation of random piece-wise constant Ising models and
// Gibbs-sampled datasets.

#include "tvising/dataset.hpp"
#include "tvising/ising.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace tvising {

using Rng = std::mt19937_64;

/// Independent stream for (seed, stream, index); used so that every segment
/// and chain draws from its own generator regardless of evaluation order.
Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

struct ScenarioConfig {
  int p = 20;
  int n = 100;
  std::vector<int> change_points{51, 81};
  int degree = 2;
  int obs_per_timestamp = 4;
  int holdout_per_timestamp = 5;
  int burn_in = 1000;
  int lag = 20;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Symmetric 0/1 adjacency with every row summing to d. Configuration model
/// with rejection of self-loops and multi-edges.
Eigen::MatrixXi random_regular_graph(int p, int d, std::uint64_t seed);

/// Couplings on the adjacency support, |w| ~ U[0.5, 1] with a fair random sign.
WeightMatrix random_weights(const Eigen::MatrixXi& adjacency, std::uint64_t seed);

/// Single-site Gibbs chain with ascending sweeps. burn_in and lag count full
/// sweeps over all p nodes.
class GibbsChain {
public:
  GibbsChain(const WeightMatrix& model, std::uint64_t seed);

  void sweep();
  void run(int sweeps);
  /// `count` states, `lag` sweeps apart, one per row.
  Eigen::MatrixXd draw(int count, int lag);
  const std::vector<int>& state() const { return state_; }

private:
  Eigen::MatrixXd w_;
  std::vector<int> state_;
  Rng rng_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

/// `count` samples (rows) after `burn_in` sweeps, one every `lag` sweeps.
Eigen::MatrixXd gibbs_sample(const WeightMatrix& model, int count, int burn_in = 1000, int lag = 20,
                             std::uint64_t seed = 0);

struct Scenario {
  PiecewiseIsingModel model;
  SpinDataset train;
  SpinDataset holdout;  // empty blocks list when holdout_per_timestamp == 0
  std::vector<EdgeSet> true_edges;  // one per timestamp
};

Scenario generate_scenario(const ScenarioConfig& config);

/// Per-timestamp edge sets of a piece-wise model.
std::vector<EdgeSet> timestamp_edges(const PiecewiseIsingModel& model);

}  // namespace tvising
