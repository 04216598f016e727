#pragma once

// Change-point and graph recovery metrics.

#include "tvising/estimator.hpp"
#include "tvising/ising.hpp"

#include <vector>

namespace tvising {

struct EvaluationReport {
  double h_score = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int num_detected = 0;
};

/// Normalized Hausdorff distance between change-point sets. Both empty -> 0,
/// exactly one empty -> 1.
double hausdorff(const std::vector<int>& truth, const std::vector<int>& estimate, int n);

/// d(A||B) = max_{b in B} min_{a in A} |b - a|; 0 for empty B. Throws
/// ValidationError when B is nonempty and A is empty.
double one_sided_distance(const std::vector<int>& a, const std::vector<int>& b);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class F1Mode {
  /// F1 of the time-averaged precision and recall.
  kOfAverages,
  /// Time average of the per-timestamp F1.
  kAveragePerTimestamp,
};

/// Per-timestamp precision/recall averaged over time. A timestamp with both
/// sets empty scores 1/1; an empty estimate against nonempty truth scores
/// precision 0, and symmetrically for recall.
PrecisionRecall temporal_f1(const std::vector<EdgeSet>& truth, const std::vector<EdgeSet>& estimate,
                            F1Mode mode = F1Mode::kOfAverages);
PrecisionRecall temporal_f1(const std::vector<EdgeSet>& truth, const EstimatedModel& estimate,
                            F1Mode mode = F1Mode::kOfAverages);

EvaluationReport evaluate(const PiecewiseIsingModel& truth, const EstimatedModel& estimate,
                          F1Mode mode = F1Mode::kOfAverages);

}  // namespace tvising
