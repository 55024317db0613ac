#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "medlfrm/dataset.hpp"
#include "medlfrm/svm.hpp"
#include "medlfrm/types.hpp"

namespace medlfrm {

class ObservedLinks;

struct HyperMoments {
  double e_mu = 0.0;
  double e_tau = 1.0;
  std::optional<double> var_mu;  // empty when nu <= 2
};

// Mean-field update of q(mu, tau) given Gaussian weight posteriors. Every
// entry of lambda and kappa is one pseudo-observation of N(mu, 1/tau) with
// posterior variance 1/lambda_prec (which may be +infinity).
HyperPosterior update_hyper(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& kappa,
                            double lambda_prec, const HyperPrior& prior);
HyperPosterior update_hyper(std::span<const WeightPosterior> weights, const HyperPrior& prior);

// E[mu] = mu, E[tau] = nu / s, Var(mu) = s / (n (nu - 2)).
HyperMoments hyper_moments(const HyperPosterior& hp);

// ell_ij = ell - E[mu] y_ij (sum(Zbar_ij) + sum(X_ij)). No clamping.
std::vector<double> adaptive_margins(double e_mu, double ell, std::span<const int> labels,
                                     std::span<const double> zbar_sums, std::span<const double> x_sums);

// Re-centred SVM for relation r: margins from adaptive_margins and boxes
// weight / E[tau]. Its solution w' maps back through unpack_weights plus
// E[mu] on every entry.
SvmProblem bayes_svm_problem(const ModelState& state, const ObservedLinks& obs, int relation,
                             bool symmetric, const HyperMoments& moments);

// KL of q(Theta) q(mu, tau) against p0(Theta | mu, tau) p0(mu, tau).
double bayes_weight_kl(std::span<const WeightPosterior> weights, const HyperPosterior& hp,
                       const HyperPrior& prior);

// BayesMedLFRM: MedLFRM's outer loop with the re-centred SVM step, unit risk
// weight, and a q(mu, tau) refresh after every SVM step.
TrainedModel fit_bayes(const RelationalDataset& ds, const SplitMask& split, const TrainConfig& config,
                       std::span<const std::size_t> probe = {});

}  // namespace medlfrm
