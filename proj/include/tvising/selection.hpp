#pragma once

// Hyperparameter selection: AIC, held-out AUC, grid and random search.

#include "tvising/dataset.hpp"
#include "tvising/estimator.hpp"
#include "tvising/solver.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace tvising {

enum class DimConvention {
  /// beta^(0) = beta^(1): the first column never counts.
  kRepeatFirst,
  /// beta^(0) = 0: the first column counts its nonzeros.
  kZeroStart,
};

/// Number of estimated parameters: for every column that differs from its
/// predecessor by more than tau_cp (l2), the count of entries above tau_sparse.
int dim_count(const NodeSolution& solution, double tau_cp = kDefaultTauCp,
              double tau_sparse = kDefaultTauSparse,
              DimConvention convention = DimConvention::kRepeatFirst);

/// Mean over nodes of 2 * loss + 2 * dim_count.
double aic(const std::vector<NodeSolution>& solutions, const SpinDataset& data,
           double tau_cp = kDefaultTauCp, double tau_sparse = kDefaultTauSparse,
           DimConvention convention = DimConvention::kRepeatFirst);

/// ROC AUC with midrank ties. Labels are 0/1. Returns 0.5 when one class is
/// absent.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Pooled AUC of P(x_a = +1 | rest) under the estimated segment parameters,
/// over every node, timestamp and holdout replicate.
double auc_score(const EstimatedModel& model, const SpinDataset& holdout);

enum class SearchStrategy { kGrid, kRandom };
enum class Criterion { kAic, kAuc };

struct SearchSpec {
  SearchStrategy strategy = SearchStrategy::kGrid;
  std::pair<double, double> lambda1_range{30.0, 40.0};
  std::pair<double, double> lambda2_range{4.0, 15.0};
  int num_points = 16;              // random search
  std::pair<int, int> grid{4, 4};   // grid search, points per axis
  Criterion criterion = Criterion::kAuc;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Candidate (lambda1, lambda2) pairs in evaluation order. Grid axes are
/// inclusive linear spacings (a single point sits at lo); random points are
/// uniform in the rectangle.
std::vector<std::pair<double, double>> candidates(const SearchSpec& spec);

struct TraceEntry {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double criterion = 0.0;
  int num_change_points = 0;
};

struct SearchResult {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double criterion = 0.0;
  std::vector<TraceEntry> trace;  // one entry per candidate, in candidate order
  EstimatedModel model;           // fit at the selected pair
};

/// True when candidate a beats b: better criterion, then larger lambda1, then
/// larger lambda2.
bool better_candidate(const TraceEntry& a, const TraceEntry& b, Criterion criterion);

/// Fits every candidate and returns the best by AIC (min) or AUC (max).
/// Throws ValidationError when AUC is requested with an empty holdout.
SearchResult search(const SpinDataset& train, const SpinDataset& holdout, const SearchSpec& spec,
                    FusedNorm fused_norm, const SolverOptions& opts = {},
                    const EstimateOptions& est = {});

}  // namespace tvising
