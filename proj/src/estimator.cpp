#include "tvising/estimator.hpp"

#include "tvising/errors.hpp"
#include "tvising/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <string>
#include <thread>

namespace tvising {

int worker_count(int requested) {
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TVISING_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) workers = cap;
  }
  if (requested > 0) workers = std::min(workers > 0 ? workers : requested, requested);
  return std::max(workers, 1);
}

int EstimatedModel::segment_of(int i) const {
  if (i < 1 || i > n)
    throw ValidationError("timestamp " + std::to_string(i) + " outside 1.." + std::to_string(n));
  return static_cast<int>(std::upper_bound(change_points.begin(), change_points.end(), i) -
                          change_points.begin());
}

EdgeSet EstimatedModel::edges(int segment) const {
  EdgeSet out;
  for (const auto& e : segment_edges.at(segment)) out.push_back({e.a, e.b});
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<EdgeSet> EstimatedModel::timestamp_edges() const {
  std::vector<EdgeSet> per_segment;
  for (int j = 0; j < num_segments(); ++j) per_segment.push_back(edges(j));
  std::vector<EdgeSet> out;
  out.reserve(n);
  for (int i = 1; i <= n; ++i) out.push_back(per_segment[segment_of(i)]);
  return out;
}

Eigen::VectorXd EstimatedModel::full_neighborhood(int node, int segment) const {
  const Eigen::VectorXd& th = theta.at(node).at(segment);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p);
  for (int b = 0, k = 0; b < p; ++b)
    if (b != node) out(b) = th(k++);
  return out;
}

std::vector<int> node_change_points(const NodeSolution& solution, double tau_cp) {
  std::vector<int> out;
  const Eigen::MatrixXd& beta = solution.beta;
  for (Eigen::Index i = 1; i < beta.cols(); ++i)
    if ((beta.col(i) - beta.col(i - 1)).norm() > tau_cp) out.push_back(static_cast<int>(i) + 1);
  return out;
}

std::vector<int> extract_change_points(const std::vector<NodeSolution>& solutions,
                                       double tau_cp) {
  std::set<int> all;
  const Eigen::Index n = solutions.empty() ? 0 : solutions.front().beta.cols();
  for (const auto& s : solutions) {
    if (s.beta.cols() != n) throw ValidationError("node solutions disagree on n");
    for (int t : node_change_points(s, tau_cp)) all.insert(t);
  }
  return {all.begin(), all.end()};
}

std::vector<std::vector<Eigen::VectorXd>> segment_parameters(
    const std::vector<NodeSolution>& solutions, const std::vector<int>& change_points) {
  std::vector<std::vector<Eigen::VectorXd>> theta;
  theta.reserve(solutions.size());
  for (const auto& s : solutions) {
    const int n = static_cast<int>(s.beta.cols());
    std::vector<int> bounds{1};
    bounds.insert(bounds.end(), change_points.begin(), change_points.end());
    bounds.push_back(n + 1);
    std::vector<Eigen::VectorXd> per_segment;
    for (std::size_t j = 0; j + 1 < bounds.size(); ++j) {
      const int first = bounds[j] - 1;
      const int len = bounds[j + 1] - bounds[j];
      per_segment.push_back(s.beta.middleCols(first, len).rowwise().mean());
    }
    theta.push_back(std::move(per_segment));
  }
  return theta;
}

std::vector<std::vector<EstimatedEdge>> assemble_graphs(
    const std::vector<std::vector<Eigen::VectorXd>>& theta, double tau_sparse, EdgeRule rule) {
  const int p = static_cast<int>(theta.size());
  const int segments = p == 0 ? 0 : static_cast<int>(theta.front().size());
  // theta[a] omits coordinate a: node b sits at b for b < a, b - 1 otherwise.
  auto coef = [&](int a, int b, int j) { return theta[a][j](b < a ? b : b - 1); };
  std::vector<std::vector<EstimatedEdge>> out(segments);
  for (int j = 0; j < segments; ++j)
    for (int a = 0; a < p; ++a)
      for (int b = a + 1; b < p; ++b) {
        const double wab = coef(a, b, j);
        const double wba = coef(b, a, j);
        const double m = rule == EdgeRule::kMax ? std::max(std::abs(wab), std::abs(wba))
                                                : std::min(std::abs(wab), std::abs(wba));
        if (m > tau_sparse) out[j].push_back({a, b, wab, wba});
      }
  return out;
}

EstimatedModel build_model(std::vector<NodeSolution> solutions, int p, const EstimateOptions& est) {
  if (static_cast<int>(solutions.size()) != p)
    throw ValidationError("expected one solution per node");
  EstimatedModel m;
  m.p = p;
  m.n = p == 0 ? 0 : static_cast<int>(solutions.front().beta.cols());
  m.change_points = extract_change_points(solutions, est.tau_cp);
  for (const auto& s : solutions) m.node_change_points.push_back(node_change_points(s, est.tau_cp));
  m.theta = segment_parameters(solutions, m.change_points);
  m.segment_edges = assemble_graphs(m.theta, est.tau_sparse, est.edge_rule);
  m.solutions = std::move(solutions);
  return m;
}

EstimatedModel fit_model(const SpinDataset& data, const PenaltyConfig& penalty,
                         const SolverOptions& opts, const EstimateOptions& est) {
  data.validate();
  penalty.validate();
  opts.validate();
  std::vector<NodeSolution> solutions(static_cast<std::size_t>(data.p));
  parallel_for(data.p, worker_count(est.threads), [&](int a) {
    try {
      solutions[static_cast<std::size_t>(a)] = fit_node(data, a, penalty, opts);
    } catch (const SolverError&) {
      throw;
    } catch (const std::exception& e) {
      throw SolverError("node " + std::to_string(a + 1) + ": " + e.what());
    }
  });
  return build_model(std::move(solutions), data.p, est);
}

}  // namespace tvising
