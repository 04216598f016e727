#include "tvising/selection.hpp"

#include "tvising/errors.hpp"
#include "tvising/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace tvising {

int dim_count(const NodeSolution& solution, double tau_cp, double tau_sparse,
              DimConvention convention) {
  const Eigen::MatrixXd& beta = solution.beta;
  int dim = 0;
  for (Eigen::Index i = 0; i < beta.cols(); ++i) {
    bool changed = false;
    if (i == 0)
      changed = convention == DimConvention::kZeroStart && beta.col(0).norm() > tau_cp;
    else
      changed = (beta.col(i) - beta.col(i - 1)).norm() > tau_cp;
    if (changed) dim += static_cast<int>((beta.col(i).array().abs() > tau_sparse).count());
  }
  return dim;
}

double aic(const std::vector<NodeSolution>& solutions, const SpinDataset& data, double tau_cp,
           double tau_sparse, DimConvention convention) {
  if (solutions.empty()) throw ValidationError("aic: no node solutions");
  double total = 0.0;
  for (const auto& s : solutions) {
    const NodeProblem problem(data, s.node);
    total += 2.0 * problem.loss(s.beta) + 2.0 * dim_count(s, tau_cp, tau_sparse, convention);
  }
  return total / static_cast<double>(solutions.size());
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw ValidationError("roc_auc: scores and labels differ in length");
  const std::size_t m = scores.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  double positives = 0.0;
  for (std::size_t k = 0; k < m;) {
    std::size_t e = k;
    while (e < m && scores[order[e]] == scores[order[k]]) ++e;
    const double midrank = 0.5 * static_cast<double>(k + 1 + e);  // mean of ranks k+1..e
    for (std::size_t r = k; r < e; ++r)
      if (labels[order[r]] != 0) {
        pos_rank_sum += midrank;
        positives += 1.0;
      }
    k = e;
  }
  const double negatives = static_cast<double>(m) - positives;
  if (positives == 0.0 || negatives == 0.0) return 0.5;
  return (pos_rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

double auc_score(const EstimatedModel& model, const SpinDataset& holdout) {
  holdout.validate();
  if (holdout.p != model.p || holdout.n() != model.n)
    throw ValidationError("holdout is " + std::to_string(holdout.p) + " nodes x " +
                          std::to_string(holdout.n()) + " timestamps, model is " +
                          std::to_string(model.p) + " x " + std::to_string(model.n));
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(static_cast<std::size_t>(holdout.total_observations() * model.p));
  labels.reserve(scores.capacity());
  std::vector<std::vector<Eigen::VectorXd>> omega(static_cast<std::size_t>(model.p));
  for (int a = 0; a < model.p; ++a)
    for (int j = 0; j < model.num_segments(); ++j)
      omega[a].push_back(model.full_neighborhood(a, j));
  for (int i = 1; i <= model.n; ++i) {
    const int j = model.segment_of(i);
    const Eigen::MatrixXd& block = holdout.blocks[static_cast<std::size_t>(i - 1)];
    for (Eigen::Index l = 0; l < block.rows(); ++l) {
      const Eigen::VectorXd x = block.row(l).transpose();
      for (int a = 0; a < model.p; ++a) {
        const double z = omega[a][j].dot(x);  // omega[a][j](a) == 0
        scores.push_back(1.0 / (1.0 + std::exp(-2.0 * z)));
        labels.push_back(x(a) > 0 ? 1 : 0);
      }
    }
  }
  return roc_auc(scores, labels);
}

void SearchSpec::validate() const {
  auto check_range = [](const std::pair<double, double>& r, const char* name) {
    if (!std::isfinite(r.first) || !std::isfinite(r.second) || r.first < 0.0 || r.first > r.second)
      throw ValidationError(std::string(name) + " range must satisfy 0 <= lo <= hi");
  };
  check_range(lambda1_range, "lambda1");
  check_range(lambda2_range, "lambda2");
  if (strategy == SearchStrategy::kRandom && num_points < 1)
    throw ValidationError("num_points must be >= 1");
  if (strategy == SearchStrategy::kGrid && (grid.first < 1 || grid.second < 1))
    throw ValidationError("grid counts must be >= 1");
}

std::vector<std::pair<double, double>> candidates(const SearchSpec& spec) {
  spec.validate();
  std::vector<std::pair<double, double>> out;
  if (spec.strategy == SearchStrategy::kGrid) {
    auto axis = [](const std::pair<double, double>& r, int count) {
      std::vector<double> v;
      for (int k = 0; k < count; ++k)
        v.push_back(count == 1 ? r.first
                               : r.first + (r.second - r.first) * k / static_cast<double>(count - 1));
      return v;
    };
    for (double l1 : axis(spec.lambda1_range, spec.grid.first))
      for (double l2 : axis(spec.lambda2_range, spec.grid.second)) out.emplace_back(l1, l2);
  } else {
    Rng rng = make_rng(spec.seed, 500, 0);
    std::uniform_real_distribution<double> u1(spec.lambda1_range.first, spec.lambda1_range.second);
    std::uniform_real_distribution<double> u2(spec.lambda2_range.first, spec.lambda2_range.second);
    for (int k = 0; k < spec.num_points; ++k) {
      const double l1 = spec.lambda1_range.first == spec.lambda1_range.second
                            ? spec.lambda1_range.first
                            : u1(rng);
      const double l2 = spec.lambda2_range.first == spec.lambda2_range.second
                            ? spec.lambda2_range.first
                            : u2(rng);
      out.emplace_back(l1, l2);
    }
  }
  return out;
}

bool better_candidate(const TraceEntry& a, const TraceEntry& b, Criterion criterion) {
  if (a.criterion != b.criterion)
    return criterion == Criterion::kAic ? a.criterion < b.criterion : a.criterion > b.criterion;
  if (a.lambda1 != b.lambda1) return a.lambda1 > b.lambda1;
  return a.lambda2 > b.lambda2;
}

SearchResult search(const SpinDataset& train, const SpinDataset& holdout, const SearchSpec& spec,
                    FusedNorm fused_norm, const SolverOptions& opts, const EstimateOptions& est) {
  spec.validate();
  if (spec.criterion == Criterion::kAuc && holdout.empty())
    throw ValidationError("AUC selection requires a nonempty holdout");
  SearchResult result;
  bool have_best = false;
  for (const auto& [l1, l2] : candidates(spec)) {
    EstimatedModel model = fit_model(train, {l1, l2, fused_norm}, opts, est);
    TraceEntry entry{l1, l2, 0.0, static_cast<int>(model.change_points.size())};
    entry.criterion = spec.criterion == Criterion::kAic
                          ? aic(model.solutions, train, est.tau_cp, est.tau_sparse)
                          : auc_score(model, holdout);
    result.trace.push_back(entry);
    if (!have_best ||
        better_candidate(entry, {result.lambda1, result.lambda2, result.criterion, 0},
                         spec.criterion)) {
      have_best = true;
      result.lambda1 = l1;
      result.lambda2 = l2;
      result.criterion = entry.criterion;
      result.model = std::move(model);
    }
  }
  return result;
}

}  // namespace tvising
