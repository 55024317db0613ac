#pragma once

#include <vector>

#include <Eigen/Dense>

namespace medlfrm {

struct BetaParams {
  double a = 1.0;
  double b = 1.0;
};

// Truncated stick-breaking posterior q(nu_k) = Beta(gamma_k1, gamma_k2),
// k = 1..K, under the IBP prior nu_k ~ Beta(alpha, 1).
struct StickPosterior {
  std::vector<BetaParams> gamma;
  double alpha = 3.0;

  int truncation() const { return static_cast<int>(gamma.size()); }

  // gamma_k = (alpha, 1) for every k.
  static StickPosterior prior(int truncation, double alpha);
};

// Multinomial lower bound on E[log(1 - prod_{j<=k} nu_j)] with its
// auxiliary distribution q over 1..k.
struct TailBound {
  int k = 0;
  double value = 0.0;
  std::vector<double> q;
};

// E[log nu_k] = digamma(gamma_k1) - digamma(gamma_k1 + gamma_k2).
std::vector<double> expected_log_nu(const StickPosterior& sp);

// Bound for the product of the first k sticks, 1 <= k <= K. Exact for k = 1.
TailBound tail_bound(const StickPosterior& sp, int k);
// Bounds for k = 1..K.
std::vector<TailBound> tail_bounds(const StickPosterior& sp);

// Prior log-odds of Z_ik = 1 under the bound:
// sum_{j<=k} E[log nu_j] - L_k, for k = 1..K.
std::vector<double> prior_logits(const StickPosterior& sp);

// Closed-form Beta update given feature means psi (N x K). The auxiliary
// multinomials are taken at the incoming gamma.
StickPosterior update_gamma(const StickPosterior& sp, const Eigen::MatrixXd& psi);

// KL(Beta(q.a, q.b) || Beta(p.a, p.b)).
double kl_beta(BetaParams q, BetaParams p);

// KL of q(nu) q(Z) against the stick-breaking prior, with the tail bound in
// place of E[log(1 - prod nu)]; an upper bound on the exact KL.
double kl_stick(const StickPosterior& sp, const Eigen::MatrixXd& psi);

}  // namespace medlfrm
