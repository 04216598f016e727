// tvising: generate, fit, select, evaluate, experiment, ingest.
//
// Exit codes: 0 success, 1 validation, 2 solver failure, 3 I/O.

#include "tvising/errors.hpp"
#include "tvising/estimator.hpp"
#include "tvising/io.hpp"
#include "tvising/metrics.hpp"
#include "tvising/sampler.hpp"
#include "tvising/selection.hpp"
#include "tvising/solver.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tvising;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitSolver = 2;
constexpr int kExitIo = 3;

struct SolverFlags {
  int max_iter = SolverOptions{}.max_outer_iter;
  double tol = SolverOptions{}.tol_outer;
  double inner_tol = SolverOptions{}.tol_inner;
  double stationarity_tol = SolverOptions{}.tol_stationarity;
  std::string step = "fixed";
  int threads = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--max-iter", max_iter, "Outer iteration cap")->capture_default_str();
    cmd->add_option("--tol", tol, "Relative objective decrease tolerance")->capture_default_str();
    cmd->add_option("--inner-tol", inner_tol, "Proximal inner tolerance")->capture_default_str();
    cmd->add_option("--stationarity-tol", stationarity_tol, "Certificate tolerance")
        ->capture_default_str();
    cmd->add_option("--step", step, "Step rule")
        ->check(CLI::IsMember({"fixed", "backtracking"}))
        ->capture_default_str();
    cmd->add_option("--threads", threads, "Worker cap (0: TVISING_THREADS or hardware)");
  }

  SolverOptions options() const {
    SolverOptions o;
    o.max_outer_iter = max_iter;
    o.tol_outer = tol;
    o.tol_inner = inner_tol;
    o.tol_stationarity = stationarity_tol;
    o.step_rule = step == "backtracking" ? StepRule::kBacktracking : StepRule::kFixedLipschitz;
    o.validate();
    return o;
  }
};

FusedNorm fused_norm_of(Method m) { return m == Method::kTesla ? FusedNorm::kL1 : FusedNorm::kGroupL2; }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

Json diagnostics_json(const EstimatedModel& m, const SolverOptions& opts, bool& all_ok) {
  Json nodes = Json::array();
  all_ok = true;
  for (const auto& s : m.solutions) {
    const double bound = stationarity_threshold(s, opts);
    const bool ok = s.stationarity_violation <= bound;
    all_ok = all_ok && ok;
    nodes.push_back({{"node", s.node + 1},
                     {"objective", s.objective},
                     {"iterations", s.iterations},
                     {"converged", s.converged},
                     {"inner_converged", s.inner_converged},
                     {"stationarity_violation", s.stationarity_violation},
                     {"stationarity_bound", bound},
                     {"certified", ok}});
  }
  return {{"nodes", nodes}, {"all_certified", all_ok}};
}

// --- generate ----------------------------------------------------------------

struct GenerateArgs {
  std::string config;
  std::string out_dir = ".";
  std::string format = "json";
  std::optional<std::uint64_t> seed;
};

int run_generate(const GenerateArgs& a) {
  ScenarioConfig c = a.config.empty() ? ScenarioConfig{} : scenario_from_json(read_json(a.config));
  if (a.seed) c.seed = *a.seed;
  c.validate();
  const Scenario s = generate_scenario(c);
  ensure_dir(a.out_dir);
  const fs::path dir(a.out_dir);
  const std::string ext = a.format == "csv" ? ".csv" : ".json";
  save_dataset((dir / ("train" + ext)).string(), s.train);
  save_dataset((dir / ("holdout" + ext)).string(), s.holdout);
  write_json((dir / "truth.json").string(), model_to_json(s.model));
  write_json((dir / "scenario.json").string(), scenario_to_json(c));
  std::cout << "wrote " << (dir / ("train" + ext)).string() << ", holdout" << ext
            << ", truth.json (p=" << c.p << ", n=" << c.n << ")\n";
  return 0;
}

// --- fit ---------------------------------------------------------------------

struct FitArgs {
  std::string data;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::string method = "tvifl";
  std::string out = "model.json";
  std::string diagnostics;
  std::string edges_csv;
  std::string solutions;
  double tau_cp = kDefaultTauCp;
  double tau_sparse = kDefaultTauSparse;
  std::string edge_rule = "max";
  SolverFlags solver;
};

int run_fit(const FitArgs& a) {
  const SpinDataset data = load_dataset(a.data);
  const Method method = method_from_name(a.method);
  const SolverOptions opts = a.solver.options();
  PenaltyConfig pen{method == Method::kPerTimestamp ? 0.0 : a.lambda1, a.lambda2,
                    fused_norm_of(method)};
  EstimateOptions est{a.tau_cp, a.tau_sparse, a.edge_rule == "min" ? EdgeRule::kMin : EdgeRule::kMax,
                      a.solver.threads};
  const EstimatedModel m = fit_model(data, pen, opts, est);
  write_json(a.out, estimate_to_json(m));
  bool ok = true;
  const Json diag = diagnostics_json(m, opts, ok);
  const std::string diag_path = a.diagnostics.empty() ? a.out + ".diagnostics.json" : a.diagnostics;
  write_json(diag_path, diag);
  if (!a.edges_csv.empty()) write_text(a.edges_csv, estimate_edges_csv(m));
  if (!a.solutions.empty()) {
    Json sols = Json::array();
    for (const auto& s : m.solutions) sols.push_back(solution_to_json(s));
    write_json(a.solutions, sols);
  }
  std::cout << "change-points: " << m.change_points.size() << ", segments: " << m.num_segments()
            << ", certified: " << (ok ? "yes" : "no") << "\n";
  if (!ok) {
    std::cerr << "error: stationarity certificate exceeds tolerance (see " << diag_path << ")\n";
    return kExitSolver;
  }
  return 0;
}

// --- select ------------------------------------------------------------------

struct SelectArgs {
  std::string data;
  std::string holdout;
  std::string search;
  std::string method = "tvifl";
  std::string criterion;
  std::string out = "selection.json";
  std::string trace = "trace.csv";
  SolverFlags solver;
};

int run_select(const SelectArgs& a) {
  SearchSpec spec = a.search.empty() ? SearchSpec{} : search_from_json(read_json(a.search));
  if (!a.criterion.empty()) spec.criterion = a.criterion == "aic" ? Criterion::kAic : Criterion::kAuc;
  const Method method = method_from_name(a.method);
  if (method == Method::kPerTimestamp) {
    spec.lambda1_range = {0.0, 0.0};
    spec.grid.first = 1;
  }
  if (spec.criterion == Criterion::kAuc && a.holdout.empty())
    throw ValidationError("AUC selection requires --holdout");
  const SpinDataset train = load_dataset(a.data);
  const SpinDataset holdout = a.holdout.empty() ? SpinDataset{} : load_dataset(a.holdout);
  EstimateOptions est;
  est.threads = a.solver.threads;
  const SearchResult r = search(train, holdout, spec, fused_norm_of(method), a.solver.options(), est);
  write_json(a.out, {{"lambda1", r.lambda1},
                     {"lambda2", r.lambda2},
                     {"criterion", spec.criterion == Criterion::kAic ? "aic" : "auc"},
                     {"value", r.criterion},
                     {"method", a.method}});
  write_text(a.trace, trace_to_csv(r.trace));
  std::cout << "selected lambda1=" << r.lambda1 << " lambda2=" << r.lambda2 << " ("
            << (spec.criterion == Criterion::kAic ? "aic" : "auc") << " " << r.criterion << ")\n";
  return 0;
}

// --- evaluate ----------------------------------------------------------------

struct EvaluateArgs {
  std::string model;
  std::string truth;
  std::string out;
  std::string f1_mode = "averages";
};

int run_evaluate(const EvaluateArgs& a) {
  const EstimatedModel est = estimate_from_json(read_json(a.model));
  const PiecewiseIsingModel truth = model_from_json(read_json(a.truth));
  if (truth.n != est.n || truth.p() != est.p)
    throw ValidationError("model is " + std::to_string(est.p) + " nodes x " +
                          std::to_string(est.n) + " timestamps, truth is " +
                          std::to_string(truth.p()) + " x " + std::to_string(truth.n));
  const EvaluationReport r = evaluate(
      truth, est, a.f1_mode == "per-timestamp" ? F1Mode::kAveragePerTimestamp : F1Mode::kOfAverages);
  const Json j = report_to_json(r);
  if (!a.out.empty()) write_json(a.out, j);
  std::cout << j.dump(2) << "\n";
  return 0;
}

// --- experiment --------------------------------------------------------------

struct RunRow {
  std::uint64_t seed;
  Method method;
  Criterion criterion;
  EvaluationReport report;
  double lambda1;
  double lambda2;
};

std::pair<double, double> mean_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size())) : 0.0};
}

std::string criterion_label(Criterion c) { return c == Criterion::kAic ? "aic" : "auc"; }

// Fits every candidate once and keeps the best model per criterion.
std::vector<RunRow> run_one(const ExperimentConfig& cfg, std::uint64_t seed, Method method,
                            const Scenario& sc, const fs::path& dir) {
  SearchSpec spec = cfg.search;
  if (method == Method::kPerTimestamp) {
    spec.lambda1_range = {0.0, 0.0};
    spec.grid.first = 1;
  }
  const FusedNorm norm = fused_norm_of(method);
  struct Best {
    bool set = false;
    TraceEntry entry;
    EstimatedModel model;
  };
  std::map<Criterion, Best> best;
  std::map<Criterion, std::vector<TraceEntry>> traces;
  for (const auto& [l1, l2] : candidates(spec)) {
    EstimatedModel m = fit_model(sc.train, {l1, l2, norm}, cfg.solver);
    for (Criterion c : cfg.criteria) {
      TraceEntry e{l1, l2, 0.0, static_cast<int>(m.change_points.size())};
      e.criterion = c == Criterion::kAic ? aic(m.solutions, sc.train) : auc_score(m, sc.holdout);
      traces[c].push_back(e);
      Best& b = best[c];
      if (!b.set || better_candidate(e, b.entry, c)) {
        b.set = true;
        b.entry = e;
        b.model = m;
      }
    }
  }
  std::vector<RunRow> rows;
  for (Criterion c : cfg.criteria) {
    const Best& b = best[c];
    const EvaluationReport r = evaluate(sc.model, b.model);
    const std::string tag = criterion_label(c);
    write_json((dir / ("model_" + tag + ".json")).string(), estimate_to_json(b.model));
    write_text((dir / ("trace_" + tag + ".csv")).string(), trace_to_csv(traces[c]));
    Json rep = report_to_json(r);
    rep["lambda1"] = b.entry.lambda1;
    rep["lambda2"] = b.entry.lambda2;
    write_json((dir / ("report_" + tag + ".json")).string(), rep);
    rows.push_back({seed, method, c, r, b.entry.lambda1, b.entry.lambda2});
  }
  return rows;
}

int run_experiment(const std::string& config_path, const std::string& out_override) {
  ExperimentConfig cfg =
      config_path.empty() ? ExperimentConfig{} : experiment_from_json(read_json(config_path));
  if (!out_override.empty()) cfg.output_dir = out_override;
  cfg.validate();
  const fs::path root(cfg.output_dir);
  ensure_dir(root);
  write_json((root / "config.json").string(), experiment_to_json(cfg));

  std::vector<RunRow> rows;
  int failures = 0;
  int runs = 0;
  for (std::uint64_t seed : cfg.seeds) {
    ScenarioConfig sc_cfg = cfg.scenario;
    sc_cfg.seed = seed;
    const Scenario sc = generate_scenario(sc_cfg);
    const fs::path seed_dir = root / std::to_string(seed);
    ensure_dir(seed_dir);
    write_json((seed_dir / "truth.json").string(), model_to_json(sc.model));
    save_dataset((seed_dir / "train.json").string(), sc.train);
    save_dataset((seed_dir / "holdout.json").string(), sc.holdout);
    for (Method method : cfg.methods) {
      ++runs;
      const fs::path dir = seed_dir / method_name(method);
      try {
        ensure_dir(dir);
        auto r = run_one(cfg, seed, method, sc, dir);
        for (const auto& row : r)
          std::cerr << "seed " << seed << " " << method_name(method) << " "
                    << criterion_label(row.criterion) << ": h=" << row.report.h_score
                    << " f1=" << row.report.f1 << " d_hat=" << row.report.num_detected << "\n";
        rows.insert(rows.end(), r.begin(), r.end());
      } catch (const std::exception& e) {
        ++failures;
        std::cerr << "seed " << seed << " " << method_name(method) << ": failed: " << e.what()
                  << "\n";
      }
    }
  }

  std::ostringstream runs_csv;
  runs_csv << "seed,method,criterion,lambda1,lambda2,h,precision,recall,f1,d_hat\n";
  for (const auto& r : rows)
    runs_csv << r.seed << "," << method_name(r.method) << "," << criterion_label(r.criterion) << ","
             << r.lambda1 << "," << r.lambda2 << "," << r.report.h_score << ","
             << r.report.precision << "," << r.report.recall << "," << r.report.f1 << ","
             << r.report.num_detected << "\n";
  write_text((root / "runs.csv").string(), runs_csv.str());

  std::ostringstream out;
  out << "method,criterion,h_mean,h_std,f1_mean,f1_std,d_hat_mean,d_hat_std\n";
  for (Method m : cfg.methods)
    for (Criterion c : cfg.criteria) {
      std::vector<double> h, f1, d;
      for (const auto& r : rows)
        if (r.method == m && r.criterion == c) {
          h.push_back(r.report.h_score);
          f1.push_back(r.report.f1);
          d.push_back(r.report.num_detected);
        }
      if (h.empty()) continue;
      const auto [hm, hs] = mean_std(h);
      const auto [fm, fs_] = mean_std(f1);
      const auto [dm, ds] = mean_std(d);
      out << method_name(m) << "," << criterion_label(c) << "," << hm << "," << hs << "," << fm
          << "," << fs_ << "," << dm << "," << ds << "\n";
    }
  write_text((root / "results.csv").string(), out.str());
  std::cout << out.str();
  std::cerr << runs - failures << " of " << runs << " runs succeeded\n";
  return failures == runs ? kExitSolver : 0;
}

// --- ingest ------------------------------------------------------------------

struct IngestArgs {
  std::string input;
  std::string out = "dataset.json";
  std::string policy = "drop";
  std::string groups;
  int bin = 1;
  std::string cumulative;
};

int run_ingest(const IngestArgs& a) {
  std::optional<std::vector<std::string>> groups;
  if (!a.groups.empty()) groups = parse_groups(read_text(a.groups));
  const MissingPolicy policy =
      a.policy == "group-majority" ? MissingPolicy::kGroupMajority : MissingPolicy::kDrop;
  const SpinDataset d = ingest_csv(read_text(a.input), policy, groups, a.bin);
  save_dataset(a.out, d);
  if (!a.cumulative.empty()) {
    std::ostringstream out;
    out << "timestamp";
    for (int c = 1; c <= d.p; ++c) out << ",v" << c;
    out << "\n";
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(d.p);
    for (int i = 0; i < d.n(); ++i) {
      acc += d.blocks[static_cast<std::size_t>(i)].colwise().sum();
      out << i + 1;
      for (int c = 0; c < d.p; ++c) out << "," << acc(c);
      out << "\n";
    }
    write_text(a.cumulative, out.str());
  }
  std::cout << "wrote " << a.out << " (p=" << d.p << ", n=" << d.n()
            << ", observations=" << d.total_observations() << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Piece-wise constant Ising model learning"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Sample a synthetic piece-wise constant scenario");
  g->add_option("--config", gen.config, "Scenario config (JSON)")->check(CLI::ExistingFile);
  g->add_option("--out-dir,-o", gen.out_dir, "Output directory")->capture_default_str();
  g->add_option("--format", gen.format, "Dataset format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  g->add_option("--seed", gen.seed, "Override the config seed");

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit a model for fixed penalties");
  f->add_option("--data,-d", fit.data, "Training dataset (JSON or CSV)")->required();
  f->add_option("--lambda1", fit.lambda1, "Fused penalty weight")->capture_default_str();
  f->add_option("--lambda2", fit.lambda2, "Lasso weight")->capture_default_str();
  f->add_option("--method", fit.method, "Estimator")
      ->check(CLI::IsMember({"tvifl", "tesla", "per-timestamp"}))
      ->capture_default_str();
  f->add_option("--out,-o", fit.out, "Model output (JSON)")->capture_default_str();
  f->add_option("--diagnostics", fit.diagnostics, "Per-node diagnostics (default <out>.diagnostics.json)");
  f->add_option("--edges-csv", fit.edges_csv, "Per-segment edge list (CSV)");
  f->add_option("--solutions", fit.solutions, "Raw node solutions (JSON)");
  f->add_option("--tau-cp", fit.tau_cp, "Change-point threshold")->capture_default_str();
  f->add_option("--tau-sparse", fit.tau_sparse, "Edge threshold")->capture_default_str();
  f->add_option("--edge-rule", fit.edge_rule, "Edge assembly rule")
      ->check(CLI::IsMember({"max", "min"}))
      ->capture_default_str();
  fit.solver.add(f);

  SelectArgs sel;
  auto* s = app.add_subcommand("select", "Search (lambda1, lambda2) by AIC or held-out AUC");
  s->add_option("--data,-d", sel.data, "Training dataset")->required();
  s->add_option("--holdout", sel.holdout, "Held-out dataset (required for AUC)");
  s->add_option("--search", sel.search, "Search config (JSON)")->check(CLI::ExistingFile);
  s->add_option("--criterion", sel.criterion, "Override the configured criterion")
      ->check(CLI::IsMember({"aic", "auc"}));
  s->add_option("--method", sel.method, "Estimator")
      ->check(CLI::IsMember({"tvifl", "tesla", "per-timestamp"}))
      ->capture_default_str();
  s->add_option("--out,-o", sel.out, "Selected pair (JSON)")->capture_default_str();
  s->add_option("--trace", sel.trace, "Trace (CSV)")->capture_default_str();
  sel.solver.add(s);

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score a fitted model against the truth");
  e->add_option("--model,-m", ev.model, "Fitted model (JSON)")->required();
  e->add_option("--truth,-t", ev.truth, "True model (JSON)")->required();
  e->add_option("--out,-o", ev.out, "Report output (JSON)");
  e->add_option("--f1-mode", ev.f1_mode, "F1 of averages or average of per-timestamp F1")
      ->check(CLI::IsMember({"averages", "per-timestamp"}))
      ->capture_default_str();

  std::string exp_config;
  std::string exp_out;
  int exp_threads = 0;
  auto* x = app.add_subcommand("experiment", "Multi-seed benchmark with per-run artifacts");
  x->add_option("--config", exp_config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  x->add_option("--output-dir,-o", exp_out, "Override the config output_dir");
  x->add_option("--threads", exp_threads, "Worker cap (0: TVISING_THREADS or hardware)");

  IngestArgs ing;
  auto* in = app.add_subcommand("ingest", "Convert a +1/-1/blank matrix into a dataset");
  in->add_option("--input,-i", ing.input, "Input CSV")->required();
  in->add_option("--out,-o", ing.out, "Dataset output (JSON or .csv)")->capture_default_str();
  in->add_option("--missing-policy", ing.policy, "Blank handling")
      ->check(CLI::IsMember({"drop", "group-majority"}))
      ->capture_default_str();
  in->add_option("--groups", ing.groups, "Group label per column");
  in->add_option("--bin", ing.bin, "Rows per timestamp")->capture_default_str();
  in->add_option("--cumulative", ing.cumulative, "Cumulative spin sums per timestamp (CSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*g) return run_generate(gen);
    if (*f) return run_fit(fit);
    if (*s) return run_select(sel);
    if (*e) return run_evaluate(ev);
    if (*x) {
      if (exp_threads > 0) setenv("TVISING_THREADS", std::to_string(exp_threads).c_str(), 1);
      return run_experiment(exp_config, exp_out);
    }
    if (*in) return run_ingest(ing);
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitValidation;
  } catch (const SolverError& err) {
    std::cerr << "solver error: " << err.what() << "\n";
    return kExitSolver;
  } catch (const IoError& err) {
    std::cerr << "i/o error: " << err.what() << "\n";
    return kExitIo;
  } catch (const Json::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
