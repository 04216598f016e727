#include "tvising/metrics.hpp"

#include "tvising/errors.hpp"
#include "tvising/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tvising {

namespace {

double harmonic(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

}  // namespace

double one_sided_distance(const std::vector<int>& a, const std::vector<int>& b) {
  if (b.empty()) return 0.0;
  if (a.empty()) throw ValidationError("one_sided_distance: A is empty while B is not");
  int worst = 0;
  for (int tb : b) {
    int best = std::numeric_limits<int>::max();
    for (int ta : a) best = std::min(best, std::abs(tb - ta));
    worst = std::max(worst, best);
  }
  return worst;
}

double hausdorff(const std::vector<int>& truth, const std::vector<int>& estimate, int n) {
  if (n < 1) throw ValidationError("hausdorff: n must be >= 1");
  if (truth.empty() && estimate.empty()) return 0.0;
  if (truth.empty() || estimate.empty()) return 1.0;
  return std::max(one_sided_distance(estimate, truth), one_sided_distance(truth, estimate)) / n;
}

PrecisionRecall temporal_f1(const std::vector<EdgeSet>& truth, const std::vector<EdgeSet>& estimate,
                            F1Mode mode) {
  if (truth.size() != estimate.size())
    throw ValidationError("temporal_f1: truth and estimate cover different horizons");
  if (truth.empty()) throw ValidationError("temporal_f1: empty horizon");
  double psum = 0.0, rsum = 0.0, fsum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const EdgeSet& t = truth[i];
    const EdgeSet& e = estimate[i];
    EdgeSet common;
    std::set_intersection(t.begin(), t.end(), e.begin(), e.end(), std::back_inserter(common));
    double prec, rec;
    if (t.empty() && e.empty()) {
      prec = rec = 1.0;
    } else {
      prec = e.empty() ? 0.0 : static_cast<double>(common.size()) / e.size();
      rec = t.empty() ? 0.0 : static_cast<double>(common.size()) / t.size();
    }
    psum += prec;
    rsum += rec;
    fsum += harmonic(prec, rec);
  }
  const double n = static_cast<double>(truth.size());
  PrecisionRecall out{psum / n, rsum / n, 0.0};
  out.f1 = mode == F1Mode::kOfAverages ? harmonic(out.precision, out.recall) : fsum / n;
  return out;
}

PrecisionRecall temporal_f1(const std::vector<EdgeSet>& truth, const EstimatedModel& estimate,
                            F1Mode mode) {
  return temporal_f1(truth, estimate.timestamp_edges(), mode);
}

EvaluationReport evaluate(const PiecewiseIsingModel& truth, const EstimatedModel& estimate,
                          F1Mode mode) {
  if (truth.n != estimate.n || truth.p() != estimate.p)
    throw ValidationError("evaluate: truth and estimate have different n or p");
  EvaluationReport r;
  r.h_score = hausdorff(truth.change_points, estimate.change_points, truth.n);
  const PrecisionRecall pr = temporal_f1(timestamp_edges(truth), estimate, mode);
  r.precision = pr.precision;
  r.recall = pr.recall;
  r.f1 = pr.f1;
  r.num_detected = static_cast<int>(estimate.change_points.size());
  return r;
}

}  // namespace tvising
