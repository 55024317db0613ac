#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "medlfrm/stick.hpp"

namespace medlfrm {

enum class Mode { kMedLFRM, kBayesMedLFRM };
enum class Setting { kSingle, kGlobal };

std::string to_string(Mode mode);
std::string to_string(Setting setting);
Mode parse_mode(const std::string& text);
Setting parse_setting(const std::string& text);

// Bernoulli means psi_ik of q(Z_ik), N x K, entries in [0, 1].
struct FeaturePosterior {
  Eigen::MatrixXd psi;

  int n_entities() const { return static_cast<int>(psi.rows()); }
  int truncation() const { return static_cast<int>(psi.cols()); }
  // #{k : max_i psi_ik > 0.5}
  int active_features() const;
};

// Gaussian posterior over one relation's weights: W ~ N(lambda, 1/precision)
// and eta ~ N(kappa, 1/precision) entrywise.
struct WeightPosterior {
  Eigen::MatrixXd lambda;  // K x K
  Eigen::VectorXd kappa;   // D
  double precision = 1.0;
  bool symmetric = false;
};

// Normal-Gamma hyperprior over the common weight mean mu and precision tau:
// mu | tau ~ N(mu0, 1/(n0 tau)), tau ~ Gamma(nu0/2, scale 2/s0).
struct HyperPrior {
  double mu0 = 0.0;
  double n0 = 1.0;
  double nu0 = 2.0;
  double s0 = 1.0;

  void validate() const;
};

struct HyperPosterior {
  double mu = 0.0;
  double n = 1.0;
  double nu = 2.0;
  double s = 1.0;

  static HyperPosterior from_prior(const HyperPrior& prior) {
    return {prior.mu0, prior.n0, prior.nu0, prior.s0};
  }
};

struct TrainConfig {
  int truncation = 50;         // K
  double alpha = 3.0;          // IBP concentration
  double c = 1.0;              // risk weight (MedLFRM only)
  double pos_cost_ratio = 1.0; // slack cost of positive links relative to negatives
  double ell = 9.0;            // hinge margin
  int max_outer = 50;
  int psi_sweeps = 3;
  double objective_tol = 1e-4; // relative change
  int stall_iterations = 3;    // consecutive iterations below objective_tol
  double svm_tol = 1e-4;
  int svm_max_sweeps = 200;     // per outer iteration, warm started
  std::uint64_t seed = 0;
  Mode mode = Mode::kMedLFRM;
  bool symmetric = false;
  HyperPrior hyper_prior{};

  // Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

// Full variational state. weights holds one entry per relation.
struct ModelState {
  FeaturePosterior features;
  std::vector<WeightPosterior> weights;
  StickPosterior sticks;
  std::optional<HyperPosterior> hyper;
};

struct TraceRecord {
  int iteration = 0;
  double objective = 0.0;
  double hinge_risk = 0.0;
  double test_auc = std::numeric_limits<double>::quiet_NaN();
  int active_features = 0;
  bool svm_converged = true;
  std::optional<HyperPosterior> hyper;  // BayesMedLFRM only
};

struct TrainedModel {
  ModelState state;
  std::vector<TraceRecord> trace;  // iteration 0 is the initial state
  bool solver_converged = true;    // every SVM substep met its tolerance
  bool objective_converged = false;
};

}  // namespace medlfrm
