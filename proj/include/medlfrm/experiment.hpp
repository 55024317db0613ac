#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "medlfrm/dataset.hpp"
#include "medlfrm/types.hpp"

namespace medlfrm {

// Invalid experiment configuration (unknown keys, bad values).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<double> kDefaultCGrid = {0.1, 0.3, 1.0, 3.0, 10.0, 30.0};

struct ExperimentConfig {
  std::filesystem::path dataset;
  double split_fraction = 0.2;
  std::vector<std::uint64_t> seeds;
  TrainConfig model;
  Setting setting = Setting::kGlobal;
  std::vector<double> cv_grid;  // empty: no cross-validation
  std::filesystem::path output_dir;

  void validate() const;
};

// Parses the JSON config. Relative paths resolve against base_dir. Unknown
// keys are errors.
ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const TrainConfig& config);

struct ScoredLink {
  Link link;
  double score = 0.0;
};

// One train/score cycle on a split under the given setting. In the single
// setting each relation is fitted separately and auc is the mean of the
// per-relation AUCs (relations whose held-out part has one class are skipped).
struct Evaluation {
  double auc = 0.0;
  std::vector<ScoredLink> scores;
  // One trace per fitted model (one per relation in the single setting).
  std::vector<std::vector<TraceRecord>> traces;
  std::vector<int> trace_relations;  // -1 for the global model
  bool solver_converged = true;
  double train_seconds = 0.0;
  double test_seconds = 0.0;
};

Evaluation train_and_score(const RelationalDataset& ds, const SplitMask& split, const TrainConfig& config,
                           Setting setting);

struct CvResult {
  double best_c = 0.0;
  std::vector<double> grid;
  std::vector<double> scores;  // validation AUC per grid entry
  double seconds = 0.0;
};

// Holds out 20% of split.observed for validation (seeded by config.seed),
// fits once per C and keeps the best validation AUC; ties go to the smaller C.
CvResult cross_validate_c(const RelationalDataset& ds, const SplitMask& split, const std::vector<double>& grid,
                          const TrainConfig& config, Setting setting = Setting::kGlobal);

struct RunRecord {
  std::uint64_t seed = 0;
  double auc = 0.0;
  double chosen_c = 0.0;
  double train_seconds = 0.0;
  double test_seconds = 0.0;
  double cv_seconds = 0.0;
  int outer_iterations = 0;
  bool solver_converged = true;
};

struct ExperimentSummary {
  std::vector<RunRecord> runs;
  double auc_mean = 0.0;
  double auc_std = 0.0;  // sample standard deviation over seeds
};

// Runs every seed and writes into config.output_dir:
//   config.resolved.json, runs.csv, summary.csv,
//   trace_seed<s>.csv (trace_seed<s>_rel<r>.csv in the single setting),
//   scores_seed<s>.csv, and cv_seed<s>.csv when a C grid is searched.
ExperimentSummary run_experiment(const ExperimentConfig& config);

// Cross-validation only; writes cv_seed<s>.csv per seed.
std::vector<CvResult> run_cross_validation(const ExperimentConfig& config);

// Reads a rel,i,j,score,label dump. With per_relation the result is the mean
// of per-relation AUCs (single-class relations skipped), else the pooled AUC.
double auc_from_score_file(const std::filesystem::path& path, bool per_relation);

}  // namespace medlfrm
