#include "tvising/sampler.hpp"

#include "tvising/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tvising {

namespace {

enum Stream : std::uint64_t { kGraph = 1, kWeights = 2, kChain = 3 };

constexpr int kMaxPairingAttempts = 100000;

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

void ScenarioConfig::validate() const {
  if (p < 2) throw ValidationError("p must be >= 2");
  if (n < 1) throw ValidationError("n must be >= 1");
  if (degree <= 0 || degree >= p)
    throw ValidationError("degree must satisfy 0 < d < p");
  if ((degree * p) % 2 != 0)
    throw ValidationError("no " + std::to_string(degree) + "-regular graph on " +
                          std::to_string(p) + " nodes: d*p must be even");
  if (obs_per_timestamp < 1) throw ValidationError("obs_per_timestamp must be >= 1");
  if (holdout_per_timestamp < 0) throw ValidationError("holdout_per_timestamp must be >= 0");
  if (burn_in < 0) throw ValidationError("burn_in must be >= 0");
  if (lag < 1) throw ValidationError("lag must be >= 1");
  int prev = 1;
  for (int t : change_points) {
    if (t <= prev || t > n)
      throw ValidationError("change-points must be strictly increasing within {2,..,n}");
    prev = t;
  }
}

Eigen::MatrixXi random_regular_graph(int p, int d, std::uint64_t seed) {
  if (d <= 0 || d >= p) throw ValidationError("degree must satisfy 0 < d < p");
  if ((d * p) % 2 != 0)
    throw ValidationError("no " + std::to_string(d) + "-regular graph on " + std::to_string(p) +
                          " nodes: d*p must be even");
  Rng rng = make_rng(seed, kGraph);
  std::vector<int> stubs;
  stubs.reserve(static_cast<std::size_t>(p) * d);
  for (int a = 0; a < p; ++a)
    for (int k = 0; k < d; ++k) stubs.push_back(a);

  Eigen::MatrixXi adj(p, p);
  for (int attempt = 0; attempt < kMaxPairingAttempts; ++attempt) {
    std::shuffle(stubs.begin(), stubs.end(), rng);
    adj.setZero();
    bool ok = true;
    for (std::size_t k = 0; k < stubs.size() && ok; k += 2) {
      const int a = stubs[k];
      const int b = stubs[k + 1];
      if (a == b || adj(a, b) != 0) {
        ok = false;
      } else {
        adj(a, b) = 1;
        adj(b, a) = 1;
      }
    }
    if (ok) return adj;
  }
  throw ValidationError("failed to sample a simple " + std::to_string(d) + "-regular graph");
}

WeightMatrix random_weights(const Eigen::MatrixXi& adjacency, std::uint64_t seed) {
  const int p = static_cast<int>(adjacency.rows());
  Rng rng = make_rng(seed, kWeights);
  std::uniform_real_distribution<double> magnitude(0.5, 1.0);
  std::bernoulli_distribution positive(0.5);
  WeightMatrix w(p);
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b)
      if (adjacency(a, b) != 0) {
        const double m = magnitude(rng);
        w.set(a, b, positive(rng) ? m : -m);
      }
  return w;
}

GibbsChain::GibbsChain(const WeightMatrix& model, std::uint64_t seed)
    : w_(model.matrix()), state_(model.p()), rng_(make_rng(seed, kChain)) {
  for (int& s : state_) s = unif_(rng_) < 0.5 ? -1 : 1;
}

void GibbsChain::sweep() {
  const int p = static_cast<int>(state_.size());
  for (int a = 0; a < p; ++a) {
    double h = 0.0;
    for (int b = 0; b < p; ++b) h += w_(b, a) * state_[b];  // w_(a,a) == 0
    const double prob_up = 1.0 / (1.0 + std::exp(-2.0 * h));
    state_[a] = unif_(rng_) < prob_up ? 1 : -1;
  }
}

void GibbsChain::run(int sweeps) {
  for (int s = 0; s < sweeps; ++s) sweep();
}

Eigen::MatrixXd GibbsChain::draw(int count, int lag) {
  Eigen::MatrixXd out(count, static_cast<Eigen::Index>(state_.size()));
  for (int r = 0; r < count; ++r) {
    run(lag);
    for (std::size_t a = 0; a < state_.size(); ++a) out(r, static_cast<Eigen::Index>(a)) = state_[a];
  }
  return out;
}

Eigen::MatrixXd gibbs_sample(const WeightMatrix& model, int count, int burn_in, int lag,
                             std::uint64_t seed) {
  if (count < 1) throw ValidationError("count must be >= 1");
  if (lag < 1) throw ValidationError("lag must be >= 1");
  if (burn_in < 0) throw ValidationError("burn_in must be >= 0");
  GibbsChain chain(model, seed);
  chain.run(burn_in);
  return chain.draw(count, lag);
}

std::vector<EdgeSet> timestamp_edges(const PiecewiseIsingModel& model) {
  std::vector<EdgeSet> per_segment;
  for (const auto& s : model.segments) per_segment.push_back(edges_of(s));
  std::vector<EdgeSet> out;
  out.reserve(model.n);
  for (int i = 1; i <= model.n; ++i) out.push_back(per_segment[model.segment_of(i)]);
  return out;
}

Scenario generate_scenario(const ScenarioConfig& config) {
  config.validate();
  Scenario sc;
  sc.model.n = config.n;
  sc.model.change_points = config.change_points;
  const int segments = static_cast<int>(config.change_points.size()) + 1;
  for (int j = 0; j < segments; ++j) {
    // Each segment gets its own derived seed so graphs, weights and chains of
    // different segments are independent.
    const std::uint64_t sub = make_rng(config.seed, 100, j)();
    const Eigen::MatrixXi adj = random_regular_graph(config.p, config.degree, sub);
    sc.model.segments.push_back(random_weights(adj, sub));
  }
  sc.model.validate();

  sc.train.p = config.p;
  sc.holdout.p = config.p;
  const int per_ts = config.obs_per_timestamp + config.holdout_per_timestamp;
  std::vector<int> bounds{1};
  bounds.insert(bounds.end(), config.change_points.begin(), config.change_points.end());
  bounds.push_back(config.n + 1);
  for (int j = 0; j < segments; ++j) {
    GibbsChain chain(sc.model.segments[j], make_rng(config.seed, 200, j)());
    chain.run(config.burn_in);
    for (int i = bounds[j]; i < bounds[j + 1]; ++i) {
      Eigen::MatrixXd block = chain.draw(per_ts, config.lag);
      sc.train.blocks.push_back(block.topRows(config.obs_per_timestamp));
      if (config.holdout_per_timestamp > 0)
        sc.holdout.blocks.push_back(block.bottomRows(config.holdout_per_timestamp));
    }
  }
  sc.true_edges = timestamp_edges(sc.model);
  return sc;
}

}  // namespace tvising
