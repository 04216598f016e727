#pragma once

// Exact Ising model mathematics: joint and conditional probabilities,
// piece-wise constant parameter indexing and small-p enumeration oracles.
//
// Nodes are 0-based in this API; timestamps are 1-based (1..n) because
// change-points are timestamps in {2,..,n}.

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace tvising {

/// Largest p accepted by joint_probability (2^p states enumerated).
inline constexpr int kMaxJointNodes = 20;
/// Largest p accepted by enumerate_distribution (materialized table).
inline constexpr int kMaxTableNodes = 12;

/// Symmetric p x p coupling matrix with zero diagonal.
class WeightMatrix {
public:
  WeightMatrix() = default;
  /// Zero couplings on p nodes.
  explicit WeightMatrix(int p);
  /// Validates symmetry, zero diagonal and finiteness.
  explicit WeightMatrix(Eigen::MatrixXd w);

  int p() const { return static_cast<int>(w_.rows()); }
  const Eigen::MatrixXd& matrix() const { return w_; }
  double operator()(int a, int b) const { return w_(a, b); }

  /// Sets w(a,b) = w(b,a) = value. a != b.
  void set(int a, int b, double value);

  /// Column a with coordinate a removed (remaining nodes in original order).
  Eigen::VectorXd neighborhood(int a) const;

  int edge_count() const;

  bool operator==(const WeightMatrix& other) const { return w_ == other.w_; }

private:
  Eigen::MatrixXd w_;
};

/// A configuration x in {-1,+1}^p.
class SpinVector {
public:
  SpinVector() = default;
  explicit SpinVector(std::vector<int> values);

  int size() const { return static_cast<int>(values_.size()); }
  int operator[](int a) const { return values_[a]; }
  const std::vector<int>& values() const { return values_; }

  SpinVector flipped() const;
  /// x with coordinate a removed, as a real vector.
  Eigen::VectorXd without(int a) const;
  Eigen::VectorXd as_vector() const;

  /// State number `code` in [0, 2^p): bit k set means x_k = +1.
  static SpinVector from_code(std::uint64_t code, int p);

  bool operator==(const SpinVector&) const = default;

private:
  std::vector<int> values_;
};

/// Piece-wise constant model: segments[j] is active on [T_j, T_{j+1}) with
/// T_0 = 1 and T_{D+1} = n + 1.
struct PiecewiseIsingModel {
  int n = 1;
  std::vector<int> change_points;
  std::vector<WeightMatrix> segments;

  int p() const { return segments.empty() ? 0 : segments.front().p(); }
  int num_segments() const { return static_cast<int>(segments.size()); }
  /// Throws ValidationError when any invariant fails.
  void validate() const;
  /// Index j (0-based) of the segment containing timestamp i (1-based).
  int segment_of(int i) const;
};

struct ModelDiagnostics {
  /// Minimal spacing between consecutive change-points (T_0 = 1 included).
  int delta_min = 0;
  /// Minimal l2 jump of any node's neighborhood across a change-point.
  double xi_min = 0.0;
};

/// Log of the unnormalized probability: sum_{a<b} x_a x_b w_ab.
double energy(const WeightMatrix& model, const SpinVector& x);

/// log Z(model) by log-sum-exp over all 2^p states.
double log_partition(const WeightMatrix& model);

double joint_probability(const WeightMatrix& model, const SpinVector& x);

/// Probabilities of all 2^p states indexed by SpinVector::from_code order.
std::vector<double> enumerate_distribution(const WeightMatrix& model);

/// P(X_a = x_a | x_rest) for neighborhood weights omega_a.
double conditional_probability(std::span<const double> omega_a, int x_a,
                               std::span<const double> x_rest);
double conditional_probability(const Eigen::VectorXd& omega_a, int x_a,
                               const Eigen::VectorXd& x_rest);

const WeightMatrix& weights_at(const PiecewiseIsingModel& model, int i);

/// With no change-points returns {n, +inf}.
ModelDiagnostics diagnostics(const PiecewiseIsingModel& model);

/// Unordered edge (a, b) with a < b, 0-based.
struct Edge {
  int a = 0;
  int b = 0;
  auto operator<=>(const Edge&) const = default;
};
using EdgeSet = std::vector<Edge>;  // sorted, unique

EdgeSet edges_of(const WeightMatrix& model);

}  // namespace tvising
