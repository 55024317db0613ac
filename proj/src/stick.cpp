#include "medlfrm/stick.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "medlfrm/special.hpp"

namespace medlfrm {

namespace {

void validate(const StickPosterior& sp) {
  if (sp.gamma.empty()) throw std::invalid_argument("stick posterior: truncation must be >= 1");
  if (!(sp.alpha > 0.0)) throw std::invalid_argument("stick posterior: alpha must be positive");
  for (const auto& g : sp.gamma) {
    if (!(g.a > 0.0) || !(g.b > 0.0) || !std::isfinite(g.a) || !std::isfinite(g.b)) {
      throw std::invalid_argument("stick posterior: Beta parameters must be positive");
    }
  }
}

// Digamma tables shared by the bound computations.
struct StickDigammas {
  std::vector<double> d1, d2, d12;

  explicit StickDigammas(const StickPosterior& sp) {
    const auto K = sp.gamma.size();
    d1.resize(K);
    d2.resize(K);
    d12.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
      d1[k] = digamma(sp.gamma[k].a);
      d2[k] = digamma(sp.gamma[k].b);
      d12[k] = digamma(sp.gamma[k].a + sp.gamma[k].b);
    }
  }
};

TailBound bound_from(const StickDigammas& dg, int k) {
  TailBound tb;
  tb.k = k;
  std::vector<double> exponent(static_cast<std::size_t>(k));
  double prefix_d1 = 0.0;
  double prefix_d12 = 0.0;
  for (int m = 0; m < k; ++m) {
    prefix_d12 += dg.d12[m];
    exponent[m] = dg.d2[m] + prefix_d1 - prefix_d12;
    prefix_d1 += dg.d1[m];
  }
  const double top = *std::max_element(exponent.begin(), exponent.end());
  double total = 0.0;
  tb.q.resize(exponent.size());
  for (std::size_t m = 0; m < exponent.size(); ++m) {
    tb.q[m] = std::exp(exponent[m] - top);
    total += tb.q[m];
  }
  double value = 0.0;
  for (std::size_t m = 0; m < exponent.size(); ++m) {
    tb.q[m] /= total;
    value += tb.q[m] * exponent[m] - xlogx(tb.q[m]);
  }
  tb.value = value;
  return tb;
}

void check_psi(const StickPosterior& sp, const Eigen::MatrixXd& psi) {
  if (psi.cols() != sp.truncation()) {
    throw std::invalid_argument("feature posterior has " + std::to_string(psi.cols()) +
                                " columns, stick posterior has " +
                                std::to_string(sp.truncation()));
  }
}

}  // namespace

StickPosterior StickPosterior::prior(int truncation, double alpha) {
  if (truncation < 1) throw std::invalid_argument("truncation must be >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  StickPosterior sp;
  sp.alpha = alpha;
  sp.gamma.assign(static_cast<std::size_t>(truncation), BetaParams{alpha, 1.0});
  return sp;
}

std::vector<double> expected_log_nu(const StickPosterior& sp) {
  validate(sp);
  std::vector<double> out(sp.gamma.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = digamma(sp.gamma[k].a) - digamma(sp.gamma[k].a + sp.gamma[k].b);
  }
  return out;
}

TailBound tail_bound(const StickPosterior& sp, int k) {
  validate(sp);
  if (k < 1 || k > sp.truncation()) {
    throw std::invalid_argument("tail_bound: k must lie in [1, " +
                                std::to_string(sp.truncation()) + "]");
  }
  return bound_from(StickDigammas(sp), k);
}

std::vector<TailBound> tail_bounds(const StickPosterior& sp) {
  validate(sp);
  const StickDigammas dg(sp);
  std::vector<TailBound> out;
  out.reserve(sp.gamma.size());
  for (int k = 1; k <= sp.truncation(); ++k) out.push_back(bound_from(dg, k));
  return out;
}

std::vector<double> prior_logits(const StickPosterior& sp) {
  const auto elog = expected_log_nu(sp);
  const auto bounds = tail_bounds(sp);
  std::vector<double> out(elog.size());
  double cumulative = 0.0;
  for (std::size_t k = 0; k < elog.size(); ++k) {
    cumulative += elog[k];
    out[k] = cumulative - bounds[k].value;
  }
  return out;
}

StickPosterior update_gamma(const StickPosterior& sp, const Eigen::MatrixXd& psi) {
  validate(sp);
  check_psi(sp, psi);
  const int K = sp.truncation();
  const auto n = static_cast<double>(psi.rows());
  const auto bounds = tail_bounds(sp);

  // on[m] = sum_i psi_im, off[m] = N - on[m].
  std::vector<double> on(K), off(K);
  for (int m = 0; m < K; ++m) {
    on[m] = psi.rows() > 0 ? psi.col(m).sum() : 0.0;
    off[m] = n - on[m];
  }

  StickPosterior out;
  out.alpha = sp.alpha;
  out.gamma.resize(K);
  for (int k = 0; k < K; ++k) {
    double a = sp.alpha;
    double b = 1.0;
    for (int m = k; m < K; ++m) {
      a += on[m];
      // q_m(j) for j = k+1..m (0-based: k+1..m).
      double upper = 0.0;
      for (int j = k + 1; j <= m; ++j) upper += bounds[m].q[j];
      a += off[m] * upper;
      b += off[m] * bounds[m].q[k];
    }
    out.gamma[k] = BetaParams{a, b};
  }
  return out;
}

double kl_beta(BetaParams q, BetaParams p) {
  const double dsum = digamma(q.a + q.b);
  return log_beta(p.a, p.b) - log_beta(q.a, q.b) + (q.a - p.a) * (digamma(q.a) - dsum) +
         (q.b - p.b) * (digamma(q.b) - dsum);
}

double kl_stick(const StickPosterior& sp, const Eigen::MatrixXd& psi) {
  validate(sp);
  check_psi(sp, psi);
  const int K = sp.truncation();
  const BetaParams prior{sp.alpha, 1.0};
  double total = 0.0;
  for (const auto& g : sp.gamma) total += kl_beta(g, prior);

  const auto elog = expected_log_nu(sp);
  const auto bounds = tail_bounds(sp);
  double cumulative = 0.0;
  for (int k = 0; k < K; ++k) {
    cumulative += elog[k];
    for (Eigen::Index i = 0; i < psi.rows(); ++i) {
      const double p = psi(i, k);
      total += xlogx(p) + xlogx(1.0 - p) - p * cumulative - (1.0 - p) * bounds[k].value;
    }
  }
  return total;
}

}  // namespace medlfrm
