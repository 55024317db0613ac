#include "medlfrm/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "medlfrm/model.hpp"
#include "medlfrm/special.hpp"

namespace medlfrm {

namespace {

template <class Visit>
void for_each_weight(std::span<const WeightPosterior> weights, Visit&& visit) {
  for (const auto& wp : weights) {
    for (Eigen::Index c = 0; c < wp.lambda.cols(); ++c) {
      for (Eigen::Index r = 0; r < wp.lambda.rows(); ++r) visit(wp.lambda(r, c), wp.precision);
    }
    for (Eigen::Index d = 0; d < wp.kappa.size(); ++d) visit(wp.kappa[d], wp.precision);
  }
}

HyperPosterior conjugate_update(std::span<const WeightPosterior> weights, const HyperPrior& prior) {
  prior.validate();
  double count = 0.0;
  double sum = 0.0;
  double variance = 0.0;
  for_each_weight(weights, [&](double value, double precision) {
    if (!(precision > 0.0)) throw std::invalid_argument("update_hyper: precision must be positive");
    count += 1.0;
    sum += value;
    variance += 1.0 / precision;
  });
  // E[sum (x - xbar)^2] = scatter of the means + (1 - 1/count) sum var(x).
  const double mean_variance = count > 0.0 ? variance * (1.0 - 1.0 / count) : 0.0;
  if (count == 0.0) return HyperPosterior::from_prior(prior);
  const double mean = sum / count;
  double scatter = 0.0;
  for_each_weight(weights, [&](double value, double) { scatter += (value - mean) * (value - mean); });

  HyperPosterior hp;
  hp.n = prior.n0 + count;
  hp.nu = prior.nu0 + count;
  hp.mu = (prior.n0 * prior.mu0 + count * mean) / hp.n;
  hp.s = prior.s0 + scatter + prior.n0 * count * (mean - prior.mu0) * (mean - prior.mu0) / hp.n + mean_variance;
  return hp;
}

class BayesStep final : public ParameterStep {
 public:
  explicit BayesStep(const TrainConfig& config) : config_(config) {}

  void initialize(ModelState& state) override {
    state.hyper = HyperPosterior::from_prior(config_.hyper_prior);
    const double e_tau = hyper_moments(*state.hyper).e_tau;
    for (auto& wp : state.weights) wp.precision = e_tau;
  }

  bool update(ModelState& state, const ObservedLinks& obs, Rng& rng) override {
    const auto& ds = obs.dataset();
    const int K = state.features.truncation();
    const int D = ds.feature_dim();
    const HyperMoments moments = hyper_moments(*state.hyper);
    duals_.resize(static_cast<std::size_t>(ds.n_relations()));
    bool all_converged = true;
    for (int r = 0; r < ds.n_relations(); ++r) {
      WeightPosterior& wp = state.weights[r];
      if (obs.by_relation(r).empty()) {
        wp.lambda.setConstant(K, K, moments.e_mu);
        wp.kappa.setConstant(D, moments.e_mu);
        wp.precision = moments.e_tau;
        continue;
      }
      SvmProblem prob = bayes_svm_problem(state, obs, r, config_.symmetric, moments);
      prob.tol = config_.svm_tol;
      prob.max_sweeps = config_.svm_max_sweeps;
      prob.seed = rng.next();
      std::optional<Eigen::VectorXd> warm;
      if (duals_[r].size() == static_cast<Eigen::Index>(prob.size())) {
        warm = duals_[r];
        for (Eigen::Index m = 0; m < warm->size(); ++m) (*warm)[m] = std::min((*warm)[m], prob.boxes[m]);
      }
      const SvmSolution sol = solve(prob, warm);
      all_converged = all_converged && sol.converged;
      duals_[r] = sol.duals;
      wp = unpack_weights(sol.weights, K, D, config_.symmetric);
      wp.lambda.array() += moments.e_mu;
      wp.kappa.array() += moments.e_mu;
      wp.precision = moments.e_tau;
    }
    state.hyper = update_hyper(state.weights, config_.hyper_prior);
    return all_converged;
  }

  double weight_kl(const ModelState& state) const override {
    return bayes_weight_kl(state.weights, *state.hyper, config_.hyper_prior);
  }

  double risk_weight() const override { return 1.0; }

 private:
  TrainConfig config_;
  std::vector<Eigen::VectorXd> duals_;
};

}  // namespace

HyperPosterior update_hyper(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& kappa, double lambda_prec,
                            const HyperPrior& prior) {
  WeightPosterior wp;
  wp.lambda = lambda;
  wp.kappa = kappa;
  wp.precision = lambda_prec;
  return conjugate_update(std::span<const WeightPosterior>(&wp, 1), prior);
}

HyperPosterior update_hyper(std::span<const WeightPosterior> weights, const HyperPrior& prior) {
  return conjugate_update(weights, prior);
}

HyperMoments hyper_moments(const HyperPosterior& hp) {
  if (!(hp.n > 0.0) || !(hp.nu > 0.0) || !(hp.s > 0.0)) {
    throw std::invalid_argument("hyper posterior: n, nu and s must be positive");
  }
  HyperMoments m;
  m.e_mu = hp.mu;
  m.e_tau = hp.nu / hp.s;
  if (hp.nu > 2.0) m.var_mu = hp.s / (hp.n * (hp.nu - 2.0));
  return m;
}

std::vector<double> adaptive_margins(double e_mu, double ell, std::span<const int> labels,
                                     std::span<const double> zbar_sums, std::span<const double> x_sums) {
  if (zbar_sums.size() != labels.size() || (!x_sums.empty() && x_sums.size() != labels.size())) {
    throw std::invalid_argument("adaptive_margins: inputs differ in length");
  }
  std::vector<double> out(labels.size());
  for (std::size_t m = 0; m < labels.size(); ++m) {
    const double x = x_sums.empty() ? 0.0 : x_sums[m];
    out[m] = ell - e_mu * labels[m] * (zbar_sums[m] + x);
  }
  return out;
}

SvmProblem bayes_svm_problem(const ModelState& state, const ObservedLinks& obs, int relation, bool symmetric,
                             const HyperMoments& moments) {
  const auto& ds = obs.dataset();
  SvmProblem prob = build_svm_problem(state, obs, relation, symmetric);
  const auto& examples = obs.by_relation(relation);
  const auto& psi = state.features.psi;
  std::vector<double> zsum(examples.size());
  std::vector<double> xsum(examples.size(), 0.0);
  for (std::size_t m = 0; m < examples.size(); ++m) {
    const auto& l = ds.link(examples[m]);
    zsum[m] = zbar_sum(psi.row(l.source).transpose(), psi.row(l.target).transpose(), l.source == l.target);
    for (double v : ds.pair_features(l.source, l.target)) xsum[m] += v;
  }
  prob.margins = adaptive_margins(moments.e_mu, obs.ell(), prob.labels, zsum, xsum);
  for (auto& box : prob.boxes) box /= moments.e_tau;
  return prob;
}

double bayes_weight_kl(std::span<const WeightPosterior> weights, const HyperPosterior& hp,
                       const HyperPrior& prior) {
  const HyperMoments m = hyper_moments(hp);
  const double e_log_tau = digamma(0.5 * hp.nu) - std::log(0.5 * hp.s);
  double total = 0.0;
  for_each_weight(weights, [&](double value, double precision) {
    const double dev = value - m.e_mu;
    total += 0.5 * std::log(precision) - 0.5 - 0.5 * e_log_tau +
             0.5 * m.e_tau * (dev * dev + 1.0 / precision) + 0.5 / hp.n;
  });
  // KL(Gamma(a, rate b) || Gamma(a0, rate b0)).
  const double a = 0.5 * hp.nu, b = 0.5 * hp.s;
  const double a0 = 0.5 * prior.nu0, b0 = 0.5 * prior.s0;
  const double kl_gamma = (a - a0) * digamma(a) - std::lgamma(a) + std::lgamma(a0) + a0 * (std::log(b) - std::log(b0)) +
                          a * (b0 - b) / b;
  const double shift = hp.mu - prior.mu0;
  const double kl_mean = 0.5 * (std::log(hp.n / prior.n0) + prior.n0 / hp.n - 1.0 + prior.n0 * m.e_tau * shift * shift);
  return total + kl_gamma + kl_mean;
}

TrainedModel fit_bayes(const RelationalDataset& ds, const SplitMask& split, const TrainConfig& config,
                       std::span<const std::size_t> probe) {
  if (config.mode != Mode::kBayesMedLFRM) {
    throw std::invalid_argument("fit_bayes: config.mode must be BayesMedLFRM");
  }
  BayesStep step(config);
  return run_alternation(ds, split, config, probe, step);
}

}  // namespace medlfrm
