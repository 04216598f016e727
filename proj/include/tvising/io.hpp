#pragma once

// JSON and CSV formats for models, datasets, fits, configs and reports.
// Node indices are 1-based in every file.

#include "tvising/dataset.hpp"
#include "tvising/estimator.hpp"
#include "tvising/ising.hpp"
#include "tvising/metrics.hpp"
#include "tvising/sampler.hpp"
#include "tvising/selection.hpp"
#include "tvising/solver.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace tvising {

using Json = nlohmann::json;

// --- files -----------------------------------------------------------------

/// Throws IoError on failure.
std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);
Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& value);

// --- models and data ---------------------------------------------------------

/// {"p", "edges": [[a, b, w], ...]}, each unordered pair once.
Json weights_to_json(const WeightMatrix& w);
WeightMatrix weights_from_json(const Json& j);

/// {"n", "change_points", "segments": [weights, ...]}
Json model_to_json(const PiecewiseIsingModel& m);
PiecewiseIsingModel model_from_json(const Json& j);

/// {"p", "n", "blocks": [[[+-1, ...], ...], ...]}
Json dataset_to_json(const SpinDataset& d);
SpinDataset dataset_from_json(const Json& j);

/// Long form: header "timestamp,replicate,v1,...,vp", one row per observation.
std::string dataset_to_csv(const SpinDataset& d);
/// `n` forces the number of timestamps (trailing empty blocks); 0 infers it.
SpinDataset dataset_from_csv(const std::string& text, int n = 0);

/// Reads JSON or long CSV by extension (.csv is CSV, anything else JSON).
SpinDataset load_dataset(const std::string& path);
void save_dataset(const std::string& path, const SpinDataset& d);

Json solution_to_json(const NodeSolution& s);
NodeSolution solution_from_json(const Json& j);

/// {"n", "p", "change_points", "segments": [{"edges": [[a, b, w_ab, w_ba], ...]}, ...]}
Json estimate_to_json(const EstimatedModel& m);
/// Rebuilds segment parameters from the listed edges (unlisted couplings are 0).
EstimatedModel estimate_from_json(const Json& j);

/// "segment,first,last,a,b,weight_ab,weight_ba" rows for plotting.
std::string estimate_edges_csv(const EstimatedModel& m);

Json report_to_json(const EvaluationReport& r);

// --- configs -----------------------------------------------------------------
// Missing keys keep their defaults; unknown keys are rejected.

Json scenario_to_json(const ScenarioConfig& c);
ScenarioConfig scenario_from_json(const Json& j);

Json solver_options_to_json(const SolverOptions& o);
SolverOptions solver_options_from_json(const Json& j, SolverOptions base = {});

Json search_to_json(const SearchSpec& s);
SearchSpec search_from_json(const Json& j);

/// "lambda1,lambda2,criterion,num_change_points"
std::string trace_to_csv(const std::vector<TraceEntry>& trace);

enum class Method { kTviFl, kTesla, kPerTimestamp };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct ExperimentConfig {
  ScenarioConfig scenario;
  std::vector<Method> methods{Method::kTviFl, Method::kTesla};
  std::vector<Criterion> criteria{Criterion::kAuc};
  SearchSpec search;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  SolverOptions solver;
  std::string output_dir = "experiment";

  void validate() const;
};

Json experiment_to_json(const ExperimentConfig& c);
ExperimentConfig experiment_from_json(const Json& j);

// --- ingestion -------------------------------------------------------------

enum class MissingPolicy { kDrop, kGroupMajority };

/// Parses a matrix of +1/-1/blank entries: one row per observation in time
/// order, one column per node, optional header row. Rows are binned `bin` at
/// a time into timestamps (the last bin may be shorter). kGroupMajority
/// replaces a blank by the majority of the same row over columns of the same
/// group (ties give +1); kDrop removes rows containing blanks. Any other
/// value is rejected with its row and column.
SpinDataset ingest_csv(const std::string& text, MissingPolicy policy,
                       const std::optional<std::vector<std::string>>& groups, int bin = 1);

/// Group labels, one per column, separated by commas or newlines.
std::vector<std::string> parse_groups(const std::string& text);

}  // namespace tvising
