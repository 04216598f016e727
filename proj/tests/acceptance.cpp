// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// the number of failures. Usage: acceptance [criterion ...]

#include "oracles.hpp"

#include "tvising/estimator.hpp"
#include "tvising/ising.hpp"
#include "tvising/metrics.hpp"
#include "tvising/sampler.hpp"
#include "tvising/selection.hpp"
#include "tvising/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace tvising;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

ScenarioConfig default_scenario(std::uint64_t seed, int obs) {
  ScenarioConfig c;
  c.degree = 2;
  c.obs_per_timestamp = obs;
  c.seed = seed;
  return c;
}

// --- 1: Gibbs sampler against exact enumeration ------------------------------

Outcome sampler_tv() {
  Rng rng = make_rng(1, 1001, 0);
  std::uniform_int_distribution<int> size(2, 4);
  std::uniform_real_distribution<double> weight(-1.0, 1.0);
  double worst = 0.0;
  for (int m = 0; m < 20; ++m) {
    const int p = size(rng);
    WeightMatrix w(p);
    for (int a = 0; a < p; ++a)
      for (int b = a + 1; b < p; ++b) w.set(a, b, weight(rng));
    const std::vector<double> exact = enumerate_distribution(w);
    const MatrixXd s = gibbs_sample(w, 50000, 1000, 20, 100 + m);
    std::vector<double> freq(exact.size(), 0.0);
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      std::uint64_t code = 0;
      for (int k = 0; k < p; ++k)
        if (s(r, k) > 0) code |= std::uint64_t{1} << k;
      freq[code] += 1.0 / static_cast<double>(s.rows());
    }
    double tv = 0.0;
    for (std::size_t k = 0; k < exact.size(); ++k) tv += 0.5 * std::abs(freq[k] - exact[k]);
    worst = std::max(worst, tv);
  }
  return {worst <= 0.02, "max TV " + fmt("%.4f", worst) + " <= 0.02 over 20 models, p <= 4"};
}

// --- 2: solver optimality against a subgradient oracle -----------------------

Outcome solver_optimality() {
  Rng rng = make_rng(2, 1002, 0);
  std::uniform_int_distribution<int> size_p(3, 6), size_n(2, 10), size_obs(1, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  double worst_rel = 0.0, worst_cert = 0.0;
  bool ok = true;
  for (int inst = 0; inst < 25; ++inst) {
    const int p = size_p(rng), n = size_n(rng);
    SpinDataset d;
    d.p = p;
    int max_obs = 0;
    for (int i = 0; i < n; ++i) {
      const int obs = size_obs(rng);
      max_obs = std::max(max_obs, obs);
      MatrixXd b(obs, p);
      for (Eigen::Index k = 0; k < b.size(); ++k) b(k) = coin(rng) ? 1.0 : -1.0;
      d.blocks.push_back(b);
    }
    // lambda2 stays below half the largest replicate count so that the
    // optimum is not trivially zero.
    const double l1 = 1.0 + 14.0 * unit(rng);
    const double l2 = 0.1 + (0.5 * max_obs - 0.1) * unit(rng);
    const bool group = inst % 2 == 0;
    const int node = std::uniform_int_distribution<int>(0, p - 1)(rng);
    const PenaltyConfig pen{l1, l2, group ? FusedNorm::kGroupL2 : FusedNorm::kL1};
    const SolverOptions opts;
    const NodeSolution s = fit_node(d, node, pen, opts);
    const double cert = s.stationarity_violation / (1.0 + std::abs(s.objective));
    const double o = oracle::subgradient_minimum(d, node, l1, l2, group);
    const double rel = std::abs(s.objective - o) / std::abs(o);
    worst_rel = std::max(worst_rel, rel);
    worst_cert = std::max(worst_cert, cert);
    ok = ok && cert <= opts.tol_stationarity && rel <= 1e-5;
  }
  return {ok, "25 instances: max certificate " + fmt("%.2e", worst_cert) +
                  " (<= 1e-4 relative), max |objective - oracle| " + fmt("%.2e", worst_rel) +
                  " (<= 1e-5 relative)"};
}

// --- 3: proximal maps against brute force ----------------------------------

Outcome prox_oracles() {
  Rng rng = make_rng(3, 1003, 0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 9), rows(1, 5), cols(2, 12);
  std::uniform_real_distribution<double> tau(0.0, 2.0);
  double worst_1d = 0.0, worst_group = 0.0;
  for (int k = 0; k < 100; ++k) {
    VectorXd v(len(rng));
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = 2.0 * g(rng);
    const double t = tau(rng);
    worst_1d = std::max(worst_1d,
                        (prox_fused_1d(v, t) - oracle::tv1d_bruteforce(v, t)).cwiseAbs().maxCoeff());
  }
  for (int k = 0; k < 100; ++k) {
    MatrixXd v(rows(rng), k < 10 ? 2 : cols(rng));
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = 2.0 * g(rng);
    const double t = tau(rng);
    const MatrixXd ref =
        v.cols() == 2 ? oracle::group_fused_two(v, t) : oracle::group_fused_dual_fista(v, t);
    worst_group = std::max(worst_group, (prox_group_fused(v, t) - ref).cwiseAbs().maxCoeff());
  }
  return {worst_1d <= 1e-8 && worst_group <= 1e-8,
          "1-D TV vs active-set enumeration " + fmt("%.1e", worst_1d) +
              ", group fused vs closed form / dual solver " + fmt("%.1e", worst_group) +
              " (<= 1e-8, 100 inputs each)"};
}

// --- 4: group fusion ties whole columns, l1 fusion ties coordinates -----------

Outcome penalty_contrast() {
  int partial = 0;
  bool exact = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scenario sc = generate_scenario(default_scenario(seed, 8));
    const EstimatedModel g = fit_model(sc.train, {30.0, 4.0, FusedNorm::kGroupL2});
    const EstimatedModel t = fit_model(sc.train, {30.0, 4.0, FusedNorm::kL1});
    for (const auto& s : g.solutions)
      for (Eigen::Index i = 1; i < s.beta.cols(); ++i) {
        const VectorXd diff = s.beta.col(i) - s.beta.col(i - 1);
        if (diff.norm() <= kDefaultTauCp && (diff.array() != 0.0).any()) exact = false;
      }
    for (const auto& s : t.solutions)
      for (Eigen::Index i = 1; i < s.beta.cols(); ++i) {
        const auto changed = (s.beta.col(i) - s.beta.col(i - 1)).array().abs() > kDefaultTauCp;
        if (changed.any() && !changed.all()) ++partial;
      }
  }
  return {exact && partial > 0,
          std::string("group fit: unchanged column pairs ") +
              (exact ? "exactly equal" : "NOT exactly equal") +
              "; l1 fit: " + std::to_string(partial) +
              " column pairs change in some but not all coordinates (5 seeds)"};
}

// --- 5: per-timestamp baseline ----------------------------------------------

Outcome per_timestamp_baseline() {
  const Scenario sc = generate_scenario(default_scenario(1, 4));
  SearchSpec spec;
  spec.lambda1_range = {0.0, 0.0};
  spec.lambda2_range = {0.5, 3.0};
  spec.grid = {1, 6};
  const SearchResult r = search(sc.train, sc.holdout, spec, FusedNorm::kGroupL2);
  const EvaluationReport rep = evaluate(sc.model, r.model);
  const bool pass = rep.num_detected == 99 && std::abs(rep.h_score - 0.290) <= 1e-12;
  return {pass, "lambda1 = 0, AUC-selected lambda2 = " + fmt("%.2f", r.lambda2) +
                    ": D-hat " + std::to_string(rep.num_detected) + " (expected 99), h " +
                    fmt("%.3f", rep.h_score) + " (expected 0.290), F1 " + fmt("%.3f", rep.f1)};
}

// --- 6: desk-scale benchmark --------------------------------------------------

SearchSpec benchmark_grid() {
  SearchSpec spec;
  spec.strategy = SearchStrategy::kGrid;
  spec.grid = {4, 4};
  spec.lambda1_range = {30.0, 40.0};
  spec.lambda2_range = {4.0, 15.0};
  spec.criterion = Criterion::kAuc;
  return spec;
}

Outcome benchmark() {
  std::vector<double> f1_g, h_g, f1_t, h_t;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scenario sc = generate_scenario(default_scenario(seed, 8));
    for (FusedNorm norm : {FusedNorm::kGroupL2, FusedNorm::kL1}) {
      const SearchResult r = search(sc.train, sc.holdout, benchmark_grid(), norm);
      const EvaluationReport rep = evaluate(sc.model, r.model);
      (norm == FusedNorm::kGroupL2 ? f1_g : f1_t).push_back(rep.f1);
      (norm == FusedNorm::kGroupL2 ? h_g : h_t).push_back(rep.h_score);
    }
  }
  const bool pass = mean(f1_g) >= 0.80 && mean(h_g) <= 0.20 && mean(f1_g) >= mean(f1_t);
  return {pass, "TVI-FL mean F1 " + fmt("%.3f", mean(f1_g)) + " (>= 0.80), mean h " +
                    fmt("%.3f", mean(h_g)) + " (<= 0.20); Tesla mean F1 " +
                    fmt("%.3f", mean(f1_t)) + ", mean h " + fmt("%.3f", mean(h_t)) +
                    " (5 seeds, AUC over lambda1 in [30,40] x lambda2 in [4,15])"};
}

// --- 7: localization error shrinks with n ------------------------------------

std::vector<double> localization_medians(int seeds, std::string& detail) {
  std::vector<double> medians;
  for (int n : {50, 100, 200}) {
    std::vector<double> errors;
    for (int seed = 1; seed <= seeds; ++seed) {
      ScenarioConfig c = default_scenario(static_cast<std::uint64_t>(seed), 8);
      c.n = n;
      c.change_points = {n / 2 + 1, (4 * n) / 5 + 1};
      const Scenario sc = generate_scenario(c);
      const SearchResult r = search(sc.train, sc.holdout, benchmark_grid(), FusedNorm::kGroupL2);
      errors.push_back(r.model.change_points.empty()
                           ? 1.0
                           : one_sided_distance(r.model.change_points, c.change_points) / n);
    }
    medians.push_back(median(errors));
    detail += (detail.empty() ? "" : ", ") + std::string("n=") + std::to_string(n) + ": " +
              fmt("%.3f", medians.back()) + " (mean " + fmt("%.3f", mean(errors)) + ")";
  }
  return medians;
}

Outcome consistency_trend() {
  auto non_increasing = [](const std::vector<double>& m) {
    return std::is_sorted(m.rbegin(), m.rend());
  };
  std::string detail;
  const std::vector<double> m7 = localization_medians(7, detail);
  if (non_increasing(m7)) return {true, "median max_j d(T_j, D-hat)/n, 7 seeds: " + detail};
  std::string detail15;
  const std::vector<double> m15 = localization_medians(15, detail15);
  return {non_increasing(m15), "median max_j d(T_j, D-hat)/n, 7 seeds: " + detail +
                                   " (inversion); 15 seeds: " + detail15};
}

// --- 8: metric, AIC and AUC examples ------------------------------------------

Outcome metric_suites() {
  std::vector<std::string> failed;
  auto expect = [&](bool cond, const char* what) {
    if (!cond) failed.push_back(what);
  };
  expect(hausdorff({51, 81}, {51, 81}, 100) == 0.0, "h perfect");
  expect(std::abs(hausdorff({50}, {55}, 100) - 0.05) <= 1e-15, "h 50/55");
  expect(hausdorff({51, 81}, {}, 100) == 1.0, "h empty estimate");
  expect(one_sided_distance({10, 14}, {10, 14}) == 0.0, "d superset");
  expect(one_sided_distance({10}, {10, 14}) == 4.0, "d 10/14");
  expect(one_sided_distance({10}, {}) == 0.0, "d empty B");
  const EdgeSet e{{0, 1}, {2, 3}};
  const PrecisionRecall same = temporal_f1({e, e}, {e, e});
  expect(same.precision == 1.0 && same.recall == 1.0 && same.f1 == 1.0, "F1 perfect");
  const PrecisionRecall none = temporal_f1({e, e}, std::vector<EdgeSet>(2));
  expect(none.recall == 0.0 && none.f1 == 0.0, "F1 empty estimate");

  auto sol = [](MatrixXd b) {
    NodeSolution s;
    s.beta = std::move(b);
    return s;
  };
  expect(dim_count(sol(MatrixXd::Constant(5, 100, 0.3))) == 0, "dim constant");
  MatrixXd b = MatrixXd::Zero(5, 100);
  b.middleCols(50, 50).topRows(3).setConstant(0.4);
  expect(dim_count(sol(b)) == 3, "dim one change");
  b.rightCols(20).setZero();
  b.rightCols(20).bottomRows(2).setConstant(-0.2);
  expect(dim_count(sol(b)) == 5, "dim two changes");

  const Scenario sc = generate_scenario([] {
    ScenarioConfig c;
    c.p = 5;
    c.n = 10;
    c.change_points = {6};
    c.degree = 2;
    c.seed = 8;
    return c;
  }());
  std::vector<NodeSolution> zero;
  for (int a = 0; a < 5; ++a) zero.push_back(sol(MatrixXd::Zero(4, 10)));
  expect(std::abs(aic(zero, sc.train) - 2.0 * sc.train.total_observations() * std::log(2.0)) <=
             1e-9,
         "AIC at zero");

  expect(roc_auc({0.5, 0.5, 0.5}, {1, 0, 1}) == 0.5, "AUC uninformative");
  expect(roc_auc({0.1, 0.4, 0.6, 0.9}, {0, 0, 1, 1}) == 1.0, "AUC ordered");
  expect(better_candidate({40.0, 4.0, 0.8, 0}, {30.0, 15.0, 0.8, 0}, Criterion::kAuc), "tie rule");
  SearchSpec one;
  one.grid = {1, 1};
  expect(candidates(one).size() == 1, "one-point grid");
  SearchSpec rnd;
  rnd.strategy = SearchStrategy::kRandom;
  rnd.seed = 5;
  expect(candidates(rnd) == candidates(rnd), "seeded random search");

  Rng rng = make_rng(8, 1008, 0);
  std::uniform_int_distribution<int> size(2, 400), level(0, 30);
  std::bernoulli_distribution coin(0.5);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int m = size(rng);
    std::vector<double> s(m);
    std::vector<int> y(m);
    for (int j = 0; j < m; ++j) {
      s[j] = level(rng) / 30.0;
      y[j] = coin(rng) ? 1 : 0;
    }
    worst = std::max(worst, std::abs(roc_auc(s, y) - oracle::auc_pairwise(s, y)));
  }
  expect(worst <= 1e-12, "AUC vs pairwise oracle");

  std::string detail = "examples " + std::string(failed.empty() ? "all pass" : "failing:");
  for (const auto& f : failed) detail += " [" + f + "]";
  detail += "; AUC vs pairwise oracle max " + fmt("%.1e", worst) + " (<= 1e-12, 50 sets)";
  return {failed.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"sampler", sampler_tv},
      {"solver optimality", solver_optimality},
      {"prox oracles", prox_oracles},
      {"penalty contrast", penalty_contrast},
      {"per-timestamp baseline", per_timestamp_baseline},
      {"desk-scale benchmark", benchmark},
      {"consistency trend", consistency_trend},
      {"metric suites", metric_suites},
  };
  std::vector<int> chosen;
  for (int k = 1; k < argc; ++k) chosen.push_back(std::atoi(argv[k]));
  if (chosen.empty())
    for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) chosen.push_back(k);

  int failures = 0;
  for (int k : chosen) {
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion %d\n", k);
      return 64;
    }
    const auto& [name, run] = criteria[static_cast<std::size_t>(k - 1)];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", k, name, o.detail.c_str(),
                secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures;
}
