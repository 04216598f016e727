#include "tvising/io.hpp"

#include "tvising/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace tvising {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

// Wraps nlohmann type/key errors as ValidationError with a context label.
template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const char* what) {
  if (!j.is_object()) throw ValidationError(std::string(what) + " must be a JSON object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ValidationError(std::string(what) + ": unknown key \"" + k + "\"");
}

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

int spin_of(const std::string& cell, std::size_t row, std::size_t col) {
  if (cell == "1" || cell == "+1") return 1;
  if (cell == "-1") return -1;
  throw ValidationError("invalid spin \"" + cell + "\" at row " + std::to_string(row) +
                        ", column " + std::to_string(col) + " (expected +1 or -1)");
}

std::string step_name(StepRule s) { return s == StepRule::kBacktracking ? "backtracking" : "fixed"; }

StepRule step_from_name(const std::string& s) {
  if (s == "fixed") return StepRule::kFixedLipschitz;
  if (s == "backtracking") return StepRule::kBacktracking;
  throw ValidationError("unknown step rule \"" + s + "\" (fixed|backtracking)");
}

std::string criterion_name(Criterion c) { return c == Criterion::kAic ? "aic" : "auc"; }

Criterion criterion_from_name(const std::string& s) {
  if (s == "aic" || s == "AIC") return Criterion::kAic;
  if (s == "auc" || s == "AUC") return Criterion::kAuc;
  throw ValidationError("unknown criterion \"" + s + "\" (aic|auc)");
}

}  // namespace

// --- files -----------------------------------------------------------------

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

Json read_json(const std::string& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw IoError("malformed JSON in " + path + ": " + e.what());
  }
}

void write_json(const std::string& path, const Json& value) {
  write_text(path, value.dump(2) + "\n");
}

// --- models and data ---------------------------------------------------------

Json weights_to_json(const WeightMatrix& w) {
  Json edges = Json::array();
  for (int a = 0; a < w.p(); ++a)
    for (int b = a + 1; b < w.p(); ++b)
      if (w(a, b) != 0.0) edges.push_back({a + 1, b + 1, w(a, b)});
  return {{"p", w.p()}, {"edges", edges}};
}

WeightMatrix weights_from_json(const Json& j) {
  return guarded("weight matrix", [&] {
    reject_unknown(j, {"p", "edges"}, "weight matrix");
    const int p = j.at("p").get<int>();
    WeightMatrix w(p);
    std::set<std::pair<int, int>> seen;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 3) throw ValidationError("edge must be [a, b, weight]");
      const int a = e[0].get<int>();
      const int b = e[1].get<int>();
      if (a < 1 || a > p || b < 1 || b > p || a == b)
        throw ValidationError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                              ") invalid for p = " + std::to_string(p));
      if (!seen.insert({std::min(a, b), std::max(a, b)}).second)
        throw ValidationError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                              ") listed twice");
      w.set(a - 1, b - 1, e[2].get<double>());
    }
    return w;
  });
}

Json model_to_json(const PiecewiseIsingModel& m) {
  Json segs = Json::array();
  for (const auto& w : m.segments) segs.push_back(weights_to_json(w));
  return {{"n", m.n}, {"change_points", m.change_points}, {"segments", segs}};
}

PiecewiseIsingModel model_from_json(const Json& j) {
  return guarded("model", [&] {
    reject_unknown(j, {"n", "change_points", "segments"}, "model");
    PiecewiseIsingModel m;
    m.n = j.at("n").get<int>();
    m.change_points = j.at("change_points").get<std::vector<int>>();
    for (const auto& s : j.at("segments")) m.segments.push_back(weights_from_json(s));
    m.validate();
    return m;
  });
}

Json dataset_to_json(const SpinDataset& d) {
  Json blocks = Json::array();
  for (const auto& b : d.blocks) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < b.rows(); ++r) {
      Json row = Json::array();
      for (Eigen::Index c = 0; c < b.cols(); ++c) row.push_back(static_cast<int>(b(r, c)));
      rows.push_back(row);
    }
    blocks.push_back(rows);
  }
  return {{"p", d.p}, {"n", d.n()}, {"blocks", blocks}};
}

SpinDataset dataset_from_json(const Json& j) {
  return guarded("dataset", [&] {
    reject_unknown(j, {"p", "n", "blocks"}, "dataset");
    SpinDataset d;
    d.p = j.at("p").get<int>();
    const auto& blocks = j.at("blocks");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& rows = blocks[i];
      Eigen::MatrixXd b(static_cast<Eigen::Index>(rows.size()), d.p);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != static_cast<std::size_t>(d.p))
          throw ValidationError("timestamp " + std::to_string(i + 1) + ", replicate " +
                                std::to_string(r + 1) + ": expected " + std::to_string(d.p) +
                                " spins");
        for (int c = 0; c < d.p; ++c) b(static_cast<Eigen::Index>(r), c) = rows[r][c].get<double>();
      }
      d.blocks.push_back(std::move(b));
    }
    if (j.contains("n") && j.at("n").get<int>() != d.n())
      throw ValidationError("dataset: n = " + std::to_string(j.at("n").get<int>()) + " but " +
                            std::to_string(d.n()) + " blocks");
    d.validate();
    return d;
  });
}

std::string dataset_to_csv(const SpinDataset& d) {
  std::ostringstream out;
  out << "timestamp,replicate";
  for (int c = 1; c <= d.p; ++c) out << ",v" << c;
  out << "\n";
  for (int i = 0; i < d.n(); ++i) {
    const auto& b = d.blocks[static_cast<std::size_t>(i)];
    for (Eigen::Index r = 0; r < b.rows(); ++r) {
      out << i + 1 << "," << r + 1;
      for (Eigen::Index c = 0; c < b.cols(); ++c) out << "," << static_cast<int>(b(r, c));
      out << "\n";
    }
  }
  return out.str();
}

SpinDataset dataset_from_csv(const std::string& text, int n) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ValidationError("dataset CSV is empty");
  const auto header = split(lines[0], ',');
  if (header.size() < 3 || header[0] != "timestamp" || header[1] != "replicate")
    throw ValidationError("dataset CSV header must be timestamp,replicate,v1,...,vp");
  const int p = static_cast<int>(header.size()) - 2;
  std::map<int, std::map<int, std::vector<double>>> rows;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    if (trim(lines[k]).empty()) continue;
    const auto cells = split(lines[k], ',');
    if (cells.size() != header.size())
      throw ValidationError("dataset CSV line " + std::to_string(k + 1) + ": expected " +
                            std::to_string(header.size()) + " fields");
    int t = 0;
    int r = 0;
    try {
      t = std::stoi(cells[0]);
      r = std::stoi(cells[1]);
    } catch (const std::exception&) {
      throw ValidationError("dataset CSV line " + std::to_string(k + 1) +
                            ": timestamp and replicate must be integers");
    }
    if (t < 1 || r < 1)
      throw ValidationError("dataset CSV line " + std::to_string(k + 1) +
                            ": timestamp and replicate are 1-based");
    std::vector<double> v;
    for (int c = 0; c < p; ++c) v.push_back(spin_of(cells[c + 2], k + 1, c + 3));
    if (!rows[t].emplace(r, std::move(v)).second)
      throw ValidationError("dataset CSV line " + std::to_string(k + 1) + ": duplicate (" +
                            std::to_string(t) + ", " + std::to_string(r) + ")");
  }
  const int last = rows.empty() ? 0 : rows.rbegin()->first;
  if (n == 0) n = last;
  if (last > n) throw ValidationError("dataset CSV has timestamp " + std::to_string(last) + " > n");
  SpinDataset d;
  d.p = p;
  for (int t = 1; t <= n; ++t) {
    const auto it = rows.find(t);
    const auto count = it == rows.end() ? 0 : static_cast<Eigen::Index>(it->second.size());
    Eigen::MatrixXd b(count, p);
    Eigen::Index r = 0;
    if (it != rows.end())
      for (const auto& [rep, v] : it->second) {
        for (int c = 0; c < p; ++c) b(r, c) = v[static_cast<std::size_t>(c)];
        ++r;
      }
    d.blocks.push_back(std::move(b));
  }
  d.validate();
  return d;
}

namespace {
bool is_csv(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}
}  // namespace

SpinDataset load_dataset(const std::string& path) {
  if (is_csv(path)) return dataset_from_csv(read_text(path));
  return dataset_from_json(read_json(path));
}

void save_dataset(const std::string& path, const SpinDataset& d) {
  if (is_csv(path))
    write_text(path, dataset_to_csv(d));
  else
    write_json(path, dataset_to_json(d));
}

Json solution_to_json(const NodeSolution& s) {
  Json beta = Json::array();
  for (Eigen::Index r = 0; r < s.beta.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < s.beta.cols(); ++c) row.push_back(s.beta(r, c));
    beta.push_back(row);
  }
  return {{"node", s.node + 1},
          {"beta", beta},
          {"objective", s.objective},
          {"iterations", s.iterations},
          {"stationarity_violation", s.stationarity_violation},
          {"converged", s.converged},
          {"inner_converged", s.inner_converged}};
}

NodeSolution solution_from_json(const Json& j) {
  return guarded("node solution", [&] {
    reject_unknown(j,
                   {"node", "beta", "objective", "iterations", "stationarity_violation",
                    "converged", "inner_converged"},
                   "node solution");
    NodeSolution s;
    s.node = j.at("node").get<int>() - 1;
    const auto& beta = j.at("beta");
    const auto rows = static_cast<Eigen::Index>(beta.size());
    const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(beta[0].size());
    s.beta.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (static_cast<Eigen::Index>(beta[r].size()) != cols)
        throw ValidationError("beta rows differ in length");
      for (Eigen::Index c = 0; c < cols; ++c) s.beta(r, c) = beta[r][c].get<double>();
    }
    read_opt(j, "objective", s.objective);
    read_opt(j, "iterations", s.iterations);
    read_opt(j, "stationarity_violation", s.stationarity_violation);
    read_opt(j, "converged", s.converged);
    read_opt(j, "inner_converged", s.inner_converged);
    return s;
  });
}

Json estimate_to_json(const EstimatedModel& m) {
  Json segs = Json::array();
  for (const auto& edges : m.segment_edges) {
    Json list = Json::array();
    for (const auto& e : edges) list.push_back({e.a + 1, e.b + 1, e.weight_ab, e.weight_ba});
    segs.push_back({{"edges", list}});
  }
  return {{"n", m.n}, {"p", m.p}, {"change_points", m.change_points}, {"segments", segs}};
}

EstimatedModel estimate_from_json(const Json& j) {
  return guarded("estimated model", [&] {
    reject_unknown(j, {"n", "p", "change_points", "segments"}, "estimated model");
    EstimatedModel m;
    m.n = j.at("n").get<int>();
    m.p = j.at("p").get<int>();
    if (m.n < 1 || m.p < 1) throw ValidationError("estimated model: n and p must be >= 1");
    m.change_points = j.at("change_points").get<std::vector<int>>();
    for (std::size_t k = 0; k < m.change_points.size(); ++k) {
      const int t = m.change_points[k];
      if (t < 2 || t > m.n || (k > 0 && t <= m.change_points[k - 1]))
        throw ValidationError("estimated model: change-points must be increasing in 2..n");
    }
    const auto& segs = j.at("segments");
    if (segs.size() != m.change_points.size() + 1)
      throw ValidationError("estimated model: expected " +
                            std::to_string(m.change_points.size() + 1) + " segments");
    m.theta.assign(static_cast<std::size_t>(m.p),
                   std::vector<Eigen::VectorXd>(segs.size(), Eigen::VectorXd::Zero(m.p - 1)));
    for (std::size_t s = 0; s < segs.size(); ++s) {
      reject_unknown(segs[s], {"edges"}, "segment");
      std::vector<EstimatedEdge> list;
      for (const auto& e : segs[s].at("edges")) {
        if (!e.is_array() || e.size() != 4)
          throw ValidationError("estimated edge must be [a, b, weight_ab, weight_ba]");
        EstimatedEdge edge{e[0].get<int>() - 1, e[1].get<int>() - 1, e[2].get<double>(),
                           e[3].get<double>()};
        if (edge.a < 0 || edge.b >= m.p || edge.a >= edge.b)
          throw ValidationError("estimated edge must satisfy 1 <= a < b <= p");
        m.theta[edge.a][s](edge.b - 1) = edge.weight_ab;
        m.theta[edge.b][s](edge.a) = edge.weight_ba;
        list.push_back(edge);
      }
      m.segment_edges.push_back(std::move(list));
    }
    return m;
  });
}

std::string estimate_edges_csv(const EstimatedModel& m) {
  std::ostringstream out;
  out.precision(17);
  out << "segment,first,last,a,b,weight_ab,weight_ba\n";
  std::vector<int> bounds{1};
  bounds.insert(bounds.end(), m.change_points.begin(), m.change_points.end());
  bounds.push_back(m.n + 1);
  for (std::size_t j = 0; j < m.segment_edges.size(); ++j)
    for (const auto& e : m.segment_edges[j])
      out << j + 1 << "," << bounds[j] << "," << bounds[j + 1] - 1 << "," << e.a + 1 << ","
          << e.b + 1 << "," << e.weight_ab << "," << e.weight_ba << "\n";
  return out.str();
}

Json report_to_json(const EvaluationReport& r) {
  return {{"h_score", r.h_score},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"num_detected", r.num_detected}};
}

// --- configs -----------------------------------------------------------------

Json scenario_to_json(const ScenarioConfig& c) {
  return {{"p", c.p},
          {"n", c.n},
          {"change_points", c.change_points},
          {"degree", c.degree},
          {"obs_per_timestamp", c.obs_per_timestamp},
          {"holdout_per_timestamp", c.holdout_per_timestamp},
          {"burn_in", c.burn_in},
          {"lag", c.lag},
          {"seed", c.seed}};
}

ScenarioConfig scenario_from_json(const Json& j) {
  return guarded("scenario", [&] {
    reject_unknown(j,
                   {"p", "n", "change_points", "degree", "obs_per_timestamp",
                    "holdout_per_timestamp", "burn_in", "lag", "seed"},
                   "scenario");
    ScenarioConfig c;
    read_opt(j, "p", c.p);
    read_opt(j, "n", c.n);
    read_opt(j, "change_points", c.change_points);
    read_opt(j, "degree", c.degree);
    read_opt(j, "obs_per_timestamp", c.obs_per_timestamp);
    read_opt(j, "holdout_per_timestamp", c.holdout_per_timestamp);
    read_opt(j, "burn_in", c.burn_in);
    read_opt(j, "lag", c.lag);
    read_opt(j, "seed", c.seed);
    c.validate();
    return c;
  });
}

Json solver_options_to_json(const SolverOptions& o) {
  return {{"max_iter", o.max_outer_iter},
          {"tol", o.tol_outer},
          {"inner_tol", o.tol_inner},
          {"stationarity_tol", o.tol_stationarity},
          {"step", step_name(o.step_rule)},
          {"max_inner_iter", o.max_inner_iter},
          {"certificate_directions", o.certificate_directions}};
}

SolverOptions solver_options_from_json(const Json& j, SolverOptions o) {
  return guarded("solver", [&] {
    reject_unknown(j,
                   {"max_iter", "tol", "inner_tol", "stationarity_tol", "step", "max_inner_iter",
                    "certificate_directions"},
                   "solver");
    read_opt(j, "max_iter", o.max_outer_iter);
    read_opt(j, "tol", o.tol_outer);
    read_opt(j, "inner_tol", o.tol_inner);
    read_opt(j, "stationarity_tol", o.tol_stationarity);
    if (j.contains("step")) o.step_rule = step_from_name(j.at("step").get<std::string>());
    read_opt(j, "max_inner_iter", o.max_inner_iter);
    read_opt(j, "certificate_directions", o.certificate_directions);
    o.validate();
    return o;
  });
}

Json search_to_json(const SearchSpec& s) {
  return {{"strategy", s.strategy == SearchStrategy::kGrid ? "grid" : "random"},
          {"lambda1_range", {s.lambda1_range.first, s.lambda1_range.second}},
          {"lambda2_range", {s.lambda2_range.first, s.lambda2_range.second}},
          {"num_points", s.num_points},
          {"grid", {s.grid.first, s.grid.second}},
          {"criterion", criterion_name(s.criterion)},
          {"seed", s.seed}};
}

SearchSpec search_from_json(const Json& j) {
  return guarded("search", [&] {
    reject_unknown(j,
                   {"strategy", "lambda1_range", "lambda2_range", "num_points", "grid",
                    "criterion", "seed"},
                   "search");
    SearchSpec s;
    if (j.contains("strategy")) {
      const auto v = j.at("strategy").get<std::string>();
      if (v == "grid")
        s.strategy = SearchStrategy::kGrid;
      else if (v == "random")
        s.strategy = SearchStrategy::kRandom;
      else
        throw ValidationError("unknown strategy \"" + v + "\" (grid|random)");
    }
    auto pair_of = [&](const char* key, auto& out) {
      if (!j.contains(key)) return;
      const auto& a = j.at(key);
      if (!a.is_array() || a.size() != 2)
        throw ValidationError(std::string(key) + " must be [lo, hi]");
      out = {a[0].get<std::decay_t<decltype(out.first)>>(),
             a[1].get<std::decay_t<decltype(out.second)>>()};
    };
    pair_of("lambda1_range", s.lambda1_range);
    pair_of("lambda2_range", s.lambda2_range);
    pair_of("grid", s.grid);
    read_opt(j, "num_points", s.num_points);
    if (j.contains("criterion")) s.criterion = criterion_from_name(j.at("criterion").get<std::string>());
    read_opt(j, "seed", s.seed);
    s.validate();
    return s;
  });
}

std::string trace_to_csv(const std::vector<TraceEntry>& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "lambda1,lambda2,criterion,num_change_points\n";
  for (const auto& t : trace)
    out << t.lambda1 << "," << t.lambda2 << "," << t.criterion << "," << t.num_change_points
        << "\n";
  return out.str();
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kTviFl: return "tvifl";
    case Method::kTesla: return "tesla";
    case Method::kPerTimestamp: return "per-timestamp";
  }
  return "";
}

Method method_from_name(const std::string& name) {
  if (name == "tvifl") return Method::kTviFl;
  if (name == "tesla") return Method::kTesla;
  if (name == "per-timestamp") return Method::kPerTimestamp;
  throw ValidationError("unknown method \"" + name + "\" (tvifl|tesla|per-timestamp)");
}

void ExperimentConfig::validate() const {
  scenario.validate();
  search.validate();
  solver.validate();
  if (methods.empty()) throw ValidationError("experiment needs at least one method");
  if (criteria.empty()) throw ValidationError("experiment needs at least one criterion");
  if (seeds.empty()) throw ValidationError("experiment needs at least one seed");
  if (output_dir.empty()) throw ValidationError("experiment output_dir is empty");
}

Json experiment_to_json(const ExperimentConfig& c) {
  Json methods = Json::array();
  for (auto m : c.methods) methods.push_back(method_name(m));
  Json criteria = Json::array();
  for (auto k : c.criteria) criteria.push_back(criterion_name(k));
  Json search = search_to_json(c.search);
  search.erase("criterion");
  return {{"scenario", scenario_to_json(c.scenario)},
          {"methods", methods},
          {"criteria", criteria},
          {"search", search},
          {"seeds", c.seeds},
          {"solver", solver_options_to_json(c.solver)},
          {"output_dir", c.output_dir}};
}

ExperimentConfig experiment_from_json(const Json& j) {
  return guarded("experiment", [&] {
    reject_unknown(j, {"scenario", "methods", "criteria", "search", "seeds", "solver", "output_dir"},
                   "experiment");
    ExperimentConfig c;
    if (j.contains("scenario")) c.scenario = scenario_from_json(j.at("scenario"));
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(method_from_name(m.get<std::string>()));
    }
    if (j.contains("criteria")) {
      c.criteria.clear();
      for (const auto& k : j.at("criteria"))
        c.criteria.push_back(criterion_from_name(k.get<std::string>()));
    }
    if (j.contains("search")) c.search = search_from_json(j.at("search"));
    read_opt(j, "seeds", c.seeds);
    if (j.contains("solver")) c.solver = solver_options_from_json(j.at("solver"));
    read_opt(j, "output_dir", c.output_dir);
    c.validate();
    return c;
  });
}

// --- ingestion -------------------------------------------------------------

std::vector<std::string> parse_groups(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& line : lines_of(text))
    for (auto& cell : split(line, ','))
      if (!cell.empty()) out.push_back(cell);
  return out;
}

SpinDataset ingest_csv(const std::string& text, MissingPolicy policy,
                       const std::optional<std::vector<std::string>>& groups, int bin) {
  if (bin < 1) throw ValidationError("bin must be >= 1");
  if (policy == MissingPolicy::kGroupMajority && !groups)
    throw ValidationError("group-majority policy requires a groups file");
  auto lines = lines_of(text);
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw ValidationError("input CSV is empty");

  auto looks_like_header = [](const std::vector<std::string>& cells) {
    for (const auto& c : cells) {
      if (c.empty()) continue;
      try {
        std::size_t used = 0;
        (void)std::stod(c, &used);
        if (used != c.size()) return true;
      } catch (const std::exception&) {
        return true;
      }
    }
    return false;
  };
  std::size_t first = looks_like_header(split(lines[0], ',')) ? 1 : 0;
  if (first >= lines.size()) throw ValidationError("input CSV has no data rows");
  const std::size_t p = split(lines[first], ',').size();
  if (groups && groups->size() != p)
    throw ValidationError("groups file lists " + std::to_string(groups->size()) +
                          " labels for " + std::to_string(p) + " columns");

  // 0 marks a blank entry.
  std::vector<std::vector<int>> rows;
  for (std::size_t k = first; k < lines.size(); ++k) {
    const auto cells = split(lines[k], ',');
    if (cells.size() != p)
      throw ValidationError("row " + std::to_string(k + 1) + ": expected " + std::to_string(p) +
                            " columns, got " + std::to_string(cells.size()));
    std::vector<int> row(p, 0);
    for (std::size_t c = 0; c < p; ++c)
      if (!cells[c].empty()) row[c] = spin_of(cells[c], k + 1, c + 1);
    rows.push_back(std::move(row));
  }

  std::vector<std::vector<int>> kept;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto row = rows[r];
    const bool has_blank = std::find(row.begin(), row.end(), 0) != row.end();
    if (has_blank && policy == MissingPolicy::kDrop) continue;
    if (has_blank) {
      std::map<std::string, int> tally;
      for (std::size_t c = 0; c < p; ++c) tally[(*groups)[c]] += row[c];
      for (std::size_t c = 0; c < p; ++c)
        if (row[c] == 0) row[c] = tally[(*groups)[c]] >= 0 ? 1 : -1;
    }
    kept.push_back(std::move(row));
  }
  if (kept.empty()) throw ValidationError("no complete rows remain after dropping blanks");

  SpinDataset d;
  d.p = static_cast<int>(p);
  for (std::size_t start = 0; start < kept.size(); start += static_cast<std::size_t>(bin)) {
    const std::size_t end = std::min(kept.size(), start + static_cast<std::size_t>(bin));
    Eigen::MatrixXd b(static_cast<Eigen::Index>(end - start), d.p);
    for (std::size_t r = start; r < end; ++r)
      for (std::size_t c = 0; c < p; ++c)
        b(static_cast<Eigen::Index>(r - start), static_cast<Eigen::Index>(c)) = kept[r][c];
    d.blocks.push_back(std::move(b));
  }
  d.validate();
  return d;
}

}  // namespace tvising
