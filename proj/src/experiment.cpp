#include "medlfrm/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "medlfrm/auc.hpp"
#include "medlfrm/model.hpp"

namespace medlfrm {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

TrainConfig parse_model(const json& j) {
  reject_unknown(j,
                 {"K", "alpha", "C", "pos_cost_ratio", "ell", "max_outer", "psi_sweeps", "objective_tol",
                  "stall_iterations", "svm_tol", "svm_max_sweeps", "mode", "symmetric", "hyper_prior"},
                 "model");
  TrainConfig c;
  read_if(j, "K", c.truncation);
  read_if(j, "alpha", c.alpha);
  read_if(j, "C", c.c);
  read_if(j, "pos_cost_ratio", c.pos_cost_ratio);
  read_if(j, "ell", c.ell);
  read_if(j, "max_outer", c.max_outer);
  read_if(j, "psi_sweeps", c.psi_sweeps);
  read_if(j, "objective_tol", c.objective_tol);
  read_if(j, "stall_iterations", c.stall_iterations);
  read_if(j, "svm_tol", c.svm_tol);
  read_if(j, "svm_max_sweeps", c.svm_max_sweeps);
  read_if(j, "symmetric", c.symmetric);
  if (auto it = j.find("mode"); it != j.end()) c.mode = parse_mode(it->get<std::string>());
  if (auto it = j.find("hyper_prior"); it != j.end()) {
    reject_unknown(*it, {"mu0", "n0", "nu0", "s0"}, "model.hyper_prior");
    read_if(*it, "mu0", c.hyper_prior.mu0);
    read_if(*it, "n0", c.hyper_prior.n0);
    read_if(*it, "nu0", c.hyper_prior.nu0);
    read_if(*it, "s0", c.hyper_prior.s0);
  }
  return c;
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void write_trace(const std::filesystem::path& path, const std::vector<TraceRecord>& trace) {
  auto out = open_output(path);
  out << "iteration,objective,hinge_risk,test_auc,active_features\n";
  for (const auto& r : trace) {
    out << r.iteration << ',' << fmt(r.objective) << ',' << fmt(r.hinge_risk) << ',' << fmt(r.test_auc) << ','
        << r.active_features << '\n';
  }
}

void write_scores(const std::filesystem::path& path, const std::vector<ScoredLink>& scores) {
  auto out = open_output(path);
  out << "rel,i,j,score,label\n";
  for (const auto& s : scores) {
    out << s.link.relation << ',' << s.link.source << ',' << s.link.target << ',' << fmt(s.score) << ','
        << s.link.label << '\n';
  }
}

void write_cv(const std::filesystem::path& path, const CvResult& cv) {
  auto out = open_output(path);
  out << "C,validation_auc\n";
  for (std::size_t g = 0; g < cv.grid.size(); ++g) out << fmt(cv.grid[g]) << ',' << fmt(cv.scores[g]) << '\n';
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

void score_model(const RelationalDataset& ds, const ModelState& state, std::span<const std::size_t> heldout,
                 int relation_override, Evaluation& eval, std::vector<double>& scores, std::vector<int>& labels) {
  const Prediction pred = predict(ds, state, heldout);
  for (std::size_t t = 0; t < heldout.size(); ++t) {
    Link link = ds.link(heldout[t]);
    if (relation_override >= 0) link.relation = relation_override;
    eval.scores.push_back(ScoredLink{link, pred.scores[t]});
    scores.push_back(pred.scores[t]);
    labels.push_back(link.label);
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw ConfigError("config: dataset path is required");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ConfigError("config: split_fraction must lie in (0, 1)");
  if (seeds.empty()) throw ConfigError("config: seeds must be nonempty");
  for (double c : cv_grid) {
    if (!(c > 0.0)) throw ConfigError("config: cv_grid entries must be positive");
  }
  if (output_dir.empty()) throw ConfigError("config: output_dir is required");
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_experiment_config(const json& j, const std::filesystem::path& base_dir) {
  try {
    reject_unknown(j, {"dataset", "split_fraction", "seeds", "model", "setting", "cv_grid", "output_dir"}, "config");
    ExperimentConfig c;
    c.dataset = resolve(j.at("dataset").get<std::string>(), base_dir);
    read_if(j, "split_fraction", c.split_fraction);
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (auto it = j.find("model"); it != j.end()) c.model = parse_model(*it);
    if (auto it = j.find("setting"); it != j.end()) c.setting = parse_setting(it->get<std::string>());
    if (auto it = j.find("cv_grid"); it != j.end() && !it->is_null()) c.cv_grid = it->get<std::vector<double>>();
    c.output_dir = resolve(j.at("output_dir").get<std::string>(), base_dir);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  ExperimentConfig config = parse_experiment_config(j, path.parent_path());
  if (const char* root = std::getenv("MEDLFRM_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
    config.output_dir = std::filesystem::path(root) / config.output_dir.filename();
  }
  return config;
}

json to_json(const TrainConfig& c) {
  return json{{"K", c.truncation},
              {"alpha", c.alpha},
              {"C", c.c},
              {"pos_cost_ratio", c.pos_cost_ratio},
              {"ell", c.ell},
              {"max_outer", c.max_outer},
              {"psi_sweeps", c.psi_sweeps},
              {"objective_tol", c.objective_tol},
              {"stall_iterations", c.stall_iterations},
              {"svm_tol", c.svm_tol},
              {"svm_max_sweeps", c.svm_max_sweeps},
              {"mode", to_string(c.mode)},
              {"symmetric", c.symmetric},
              {"hyper_prior",
               {{"mu0", c.hyper_prior.mu0}, {"n0", c.hyper_prior.n0}, {"nu0", c.hyper_prior.nu0}, {"s0", c.hyper_prior.s0}}}};
}

json to_json(const ExperimentConfig& c) {
  json j{{"dataset", c.dataset.string()},
         {"split_fraction", c.split_fraction},
         {"seeds", c.seeds},
         {"model", to_json(c.model)},
         {"setting", to_string(c.setting)},
         {"output_dir", c.output_dir.string()}};
  if (c.model.mode == Mode::kMedLFRM && !c.cv_grid.empty()) j["cv_grid"] = c.cv_grid;
  return j;
}

Evaluation train_and_score(const RelationalDataset& ds, const SplitMask& split, const TrainConfig& config,
                           Setting setting) {
  Evaluation eval;
  if (setting == Setting::kGlobal) {
    auto start = Clock::now();
    const TrainedModel model = fit(ds, split, config, split.heldout);
    eval.train_seconds = seconds_since(start);
    start = Clock::now();
    std::vector<double> scores;
    std::vector<int> labels;
    score_model(ds, model.state, split.heldout, -1, eval, scores, labels);
    eval.auc = auc(scores, labels);
    eval.test_seconds = seconds_since(start);
    eval.traces.push_back(model.trace);
    eval.trace_relations.push_back(-1);
    eval.solver_converged = model.solver_converged;
    return eval;
  }

  std::vector<double> per_relation;
  for (int r = 0; r < ds.n_relations(); ++r) {
    const RelationSlice slice = slice_relation(ds, split, r);
    if (slice.split.observed.empty() || slice.split.heldout.empty()) continue;
    auto start = Clock::now();
    const TrainedModel model = fit(slice.dataset, slice.split, config, slice.split.heldout);
    eval.train_seconds += seconds_since(start);
    start = Clock::now();
    std::vector<double> scores;
    std::vector<int> labels;
    score_model(slice.dataset, model.state, slice.split.heldout, r, eval, scores, labels);
    try {
      per_relation.push_back(auc(scores, labels));
    } catch (const UndefinedMetricError&) {
    }
    eval.test_seconds += seconds_since(start);
    eval.traces.push_back(model.trace);
    eval.trace_relations.push_back(r);
    eval.solver_converged = eval.solver_converged && model.solver_converged;
  }
  if (per_relation.empty()) throw UndefinedMetricError("no relation has both classes in its held-out set");
  eval.auc = mean_of(per_relation);
  return eval;
}

CvResult cross_validate_c(const RelationalDataset& ds, const SplitMask& split, const std::vector<double>& grid,
                          const TrainConfig& config, Setting setting) {
  if (grid.empty()) throw std::invalid_argument("cross_validate_c: empty grid");
  const auto start = Clock::now();
  const SplitMask inner = split_observed(split, 0.2, config.seed);
  CvResult cv;
  cv.grid = grid;
  cv.scores.reserve(grid.size());
  bool have_best = false;
  double best_score = 0.0;
  for (double c : grid) {
    if (!(c > 0.0)) throw std::invalid_argument("cross_validate_c: grid entries must be positive");
    TrainConfig trial = config;
    trial.mode = Mode::kMedLFRM;
    trial.c = c;
    const double score = train_and_score(ds, inner, trial, setting).auc;
    cv.scores.push_back(score);
    if (!have_best || score > best_score || (score == best_score && c < cv.best_c)) {
      have_best = true;
      best_score = score;
      cv.best_c = c;
    }
  }
  cv.seconds = seconds_since(start);
  return cv;
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  const RelationalDataset ds = load_dataset(config.dataset);
  std::filesystem::create_directories(config.output_dir);
  {
    auto out = open_output(config.output_dir / "config.resolved.json");
    out << to_json(config).dump(2) << '\n';
  }
  const bool use_cv = config.model.mode == Mode::kMedLFRM && !config.cv_grid.empty();

  ExperimentSummary summary;
  for (auto seed : config.seeds) {
    const SplitMask split = split_holdout(ds, config.split_fraction, seed);
    TrainConfig model = config.model;
    model.seed = seed;
    RunRecord run;
    run.seed = seed;
    if (use_cv) {
      const CvResult cv = cross_validate_c(ds, split, config.cv_grid, model, config.setting);
      write_cv(config.output_dir / ("cv_seed" + std::to_string(seed) + ".csv"), cv);
      model.c = cv.best_c;
      run.cv_seconds = cv.seconds;
    }
    run.chosen_c = model.mode == Mode::kMedLFRM ? model.c : std::numeric_limits<double>::quiet_NaN();
    const Evaluation eval = train_and_score(ds, split, model, config.setting);
    run.auc = eval.auc;
    run.train_seconds = eval.train_seconds;
    run.test_seconds = eval.test_seconds;
    run.solver_converged = eval.solver_converged;
    for (std::size_t t = 0; t < eval.traces.size(); ++t) {
      run.outer_iterations = std::max(run.outer_iterations, static_cast<int>(eval.traces[t].size()) - 1);
      std::string name = "trace_seed" + std::to_string(seed);
      if (eval.trace_relations[t] >= 0) name += "_rel" + std::to_string(eval.trace_relations[t]);
      write_trace(config.output_dir / (name + ".csv"), eval.traces[t]);
    }
    write_scores(config.output_dir / ("scores_seed" + std::to_string(seed) + ".csv"), eval.scores);
    summary.runs.push_back(run);
  }

  std::vector<double> aucs;
  double train = 0.0, test = 0.0, cv_time = 0.0;
  bool converged = true;
  for (const auto& r : summary.runs) {
    aucs.push_back(r.auc);
    train += r.train_seconds;
    test += r.test_seconds;
    cv_time += r.cv_seconds;
    converged = converged && r.solver_converged;
  }
  summary.auc_mean = mean_of(aucs);
  summary.auc_std = sample_std(aucs);

  {
    auto out = open_output(config.output_dir / "runs.csv");
    out << "seed,auc,chosen_C,train_seconds,test_seconds,cv_seconds,outer_iterations,svm_converged\n";
    for (const auto& r : summary.runs) {
      out << r.seed << ',' << fmt(r.auc) << ',' << fmt(r.chosen_c) << ',' << fmt(r.train_seconds) << ','
          << fmt(r.test_seconds) << ',' << fmt(r.cv_seconds) << ',' << r.outer_iterations << ','
          << (r.solver_converged ? 1 : 0) << '\n';
    }
  }
  {
    auto out = open_output(config.output_dir / "summary.csv");
    out << "mode,setting,n_seeds,auc_mean,auc_std,auc_aggregation,train_seconds,test_seconds,cv_seconds,"
           "chosen_C,svm_converged,cv_protocol\n";
    std::string chosen;
    if (config.model.mode == Mode::kMedLFRM) {
      for (std::size_t r = 0; r < summary.runs.size(); ++r) chosen += (r ? " " : "") + fmt(summary.runs[r].chosen_c);
    }
    out << to_string(config.model.mode) << ',' << to_string(config.setting) << ',' << summary.runs.size() << ','
        << fmt(summary.auc_mean) << ',' << fmt(summary.auc_std) << ','
        << (config.setting == Setting::kSingle ? "mean_per_relation" : "pooled") << ',' << fmt(train) << ','
        << fmt(test) << ',' << fmt(cv_time) << ',' << chosen << ',' << (converged ? 1 : 0) << ','
        << (use_cv ? "inner_80_20_holdout" : "none") << '\n';
  }
  return summary;
}

std::vector<CvResult> run_cross_validation(const ExperimentConfig& config) {
  config.validate();
  if (config.model.mode != Mode::kMedLFRM) throw ConfigError("cross-validation applies to MedLFRM only");
  const RelationalDataset ds = load_dataset(config.dataset);
  std::filesystem::create_directories(config.output_dir);
  const auto& grid = config.cv_grid.empty() ? kDefaultCGrid : config.cv_grid;
  std::vector<CvResult> results;
  for (auto seed : config.seeds) {
    const SplitMask split = split_holdout(ds, config.split_fraction, seed);
    TrainConfig model = config.model;
    model.seed = seed;
    results.push_back(cross_validate_c(ds, split, grid, model, config.setting));
    write_cv(config.output_dir / ("cv_seed" + std::to_string(seed) + ".csv"), results.back());
  }
  return results;
}

double auc_from_score_file(const std::filesystem::path& path, bool per_relation) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("rel,i,j,score,label", 0) != 0) {
    throw ParseError(1, "expected header 'rel,i,j,score,label'");
  }
  std::map<int, std::pair<std::vector<double>, std::vector<int>>> groups;
  std::vector<double> all_scores;
  std::vector<int> all_labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell[5];
    for (auto& c : cell) {
      if (!std::getline(ss, c, ',')) throw ParseError(line_no, "expected 5 comma-separated columns");
    }
    try {
      const int rel = std::stoi(cell[0]);
      const double score = std::stod(cell[3]);
      const int label = std::stoi(cell[4]);
      if (label != 1 && label != -1) throw ParseError(line_no, "label must be +1 or -1");
      groups[rel].first.push_back(score);
      groups[rel].second.push_back(label);
      all_scores.push_back(score);
      all_labels.push_back(label);
    } catch (const std::logic_error&) {
      throw ParseError(line_no, "malformed number");
    }
  }
  if (!per_relation) return auc(all_scores, all_labels);
  std::vector<double> per;
  for (const auto& [rel, g] : groups) {
    try {
      per.push_back(auc(g.first, g.second));
    } catch (const UndefinedMetricError&) {
    }
  }
  if (per.empty()) throw UndefinedMetricError("no relation has both classes");
  return mean_of(per);
}

}  // namespace medlfrm
