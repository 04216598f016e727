#pragma once

#include <Eigen/Dense>

#include <vector>

namespace tvising {

/// Observations grouped by timestamp: block i is an n^(i) x p matrix of +-1
/// entries, one replicate per row.
struct SpinDataset {
  int p = 0;
  std::vector<Eigen::MatrixXd> blocks;

  int n() const { return static_cast<int>(blocks.size()); }
  /// Total number of observation vectors over all timestamps.
  int total_observations() const;
  /// Throws ValidationError on empty blocks, width mismatch or non-spin entries.
  void validate() const;
  bool empty() const { return blocks.empty(); }
};

}  // namespace tvising
