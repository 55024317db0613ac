// medlfrm: fit, cross-validate, generate synthetic data, score dumps.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "medlfrm/auc.hpp"
#include "medlfrm/dataset.hpp"
#include "medlfrm/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

int cmd_fit(const std::string& config_path) {
  const auto config = medlfrm::load_experiment_config(config_path);
  const auto summary = medlfrm::run_experiment(config);
  std::printf("mode=%s setting=%s seeds=%zu auc=%.4f +- %.4f output=%s\n", medlfrm::to_string(config.model.mode).c_str(),
              medlfrm::to_string(config.setting).c_str(), summary.runs.size(), summary.auc_mean, summary.auc_std,
              config.output_dir.string().c_str());
  return kOk;
}

int cmd_cv(const std::string& config_path) {
  const auto config = medlfrm::load_experiment_config(config_path);
  const auto results = medlfrm::run_cross_validation(config);
  for (std::size_t s = 0; s < results.size(); ++s) {
    std::printf("seed=%llu best_C=%g\n", static_cast<unsigned long long>(config.seeds[s]), results[s].best_c);
  }
  return kOk;
}

int cmd_synth(int n, int k, std::uint64_t seed, const std::string& out, double density, double scale, double noise) {
  const auto data = medlfrm::synth_generate(n, k, seed, density, scale, noise);
  medlfrm::save_dataset(out, data.dataset);
  std::printf("wrote %zu links over %d entities to %s (positive rate %.3f)\n", data.dataset.size(), n, out.c_str(),
              data.link_density);
  return kOk;
}

int cmd_eval(const std::string& scores, bool per_relation) {
  std::printf("%.12g\n", medlfrm::auc_from_score_file(scores, per_relation));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Max-margin nonparametric latent feature models for link prediction"};
  app.require_subcommand(1);

  std::string config_path;
  auto* fit = app.add_subcommand("fit", "run an experiment config over all seeds");
  fit->add_option("config", config_path, "experiment JSON")->required();

  auto* cv = app.add_subcommand("cv", "cross-validate C only");
  cv->add_option("config", config_path, "experiment JSON")->required();

  int n = 0, k = 0;
  std::uint64_t seed = 0;
  std::string out;
  double density = 0.3, scale = 1.0, noise = 0.1;
  auto* synth = app.add_subcommand("synth", "write a planted-feature synthetic dataset");
  synth->add_option("n", n, "entities")->required()->check(CLI::PositiveNumber);
  synth->add_option("k", k, "true features")->required()->check(CLI::PositiveNumber);
  synth->add_option("seed", seed)->required();
  synth->add_option("out", out, "output dataset file")->required();
  synth->add_option("--density", density, "feature density")->capture_default_str();
  synth->add_option("--weight-scale", scale, "std of W entries")->capture_default_str();
  synth->add_option("--noise", noise, "noise std relative to the discriminant std")->capture_default_str();

  std::string scores;
  bool per_relation = false;
  auto* eval = app.add_subcommand("eval", "AUC of a rel,i,j,score,label dump");
  eval->add_option("scores", scores, "scores CSV")->required()->check(CLI::ExistingFile);
  eval->add_flag("--per-relation", per_relation, "mean of per-relation AUCs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*fit) return cmd_fit(config_path);
    if (*cv) return cmd_cv(config_path);
    if (*synth) return cmd_synth(n, k, seed, out, density, scale, noise);
    if (*eval) return cmd_eval(scores, per_relation);
  } catch (const medlfrm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const medlfrm::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
