#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "medlfrm/dataset.hpp"
#include "medlfrm/random.hpp"
#include "medlfrm/svm.hpp"
#include "medlfrm/types.hpp"

namespace medlfrm {

using ConstVectorRef = Eigen::Ref<const Eigen::VectorXd>;

// E[Z_i W Z_j^T] under independent Bernoulli(psi) features and mean lambda.
// For i = j the diagonal uses E[Z_ik^2] = psi_ik.
double tr_term(const Eigen::MatrixXd& lambda, const ConstVectorRef& psi_i,
               const ConstVectorRef& psi_j, bool same_entity);

// Sum of all entries of E[Z_j^T Z_i].
double zbar_sum(const ConstVectorRef& psi_i, const ConstVectorRef& psi_j, bool same_entity);

// Length of the latent block of the SVM feature map: K^2, or K(K+1)/2 when
// the weight matrix is constrained to be symmetric.
int latent_feature_dim(int truncation, bool symmetric);

// Writes the latent block of the SVM feature map for pair (i, j) so that
// <w, out> = tr_term(lambda(w), psi_i, psi_j, same). In symmetric mode the
// off-diagonal coordinates carry (Zbar_kl + Zbar_lk)/sqrt(2), which keeps
// |w|^2 equal to the Frobenius norm of the symmetric lambda.
void latent_features(const ConstVectorRef& psi_i, const ConstVectorRef& psi_j, bool same_entity,
                     bool symmetric, std::span<double> out);

// Inverse of the feature map layout: SVM weights -> (lambda, kappa).
WeightPosterior unpack_weights(const Eigen::VectorXd& w, int truncation, int feature_dim,
                               bool symmetric);

// Expected discriminant f(X_ij) = tr_term + kappa^T X_ij for one relation.
double discriminant(const RelationalDataset& ds, const ModelState& state, int relation,
                    int source, int target);

// Training links with their hinge margin ell and slack weights (pos_weight
// for positive links, 1 for negatives), indexed per entity.
class ObservedLinks {
 public:
  ObservedLinks(const RelationalDataset& ds, std::span<const std::size_t> links, double ell,
                double pos_weight = 1.0);

  const RelationalDataset& dataset() const { return *ds_; }
  const std::vector<std::size_t>& links() const { return links_; }
  const std::vector<std::size_t>& by_relation(int relation) const { return by_relation_.at(relation); }
  double ell() const { return ell_; }
  double pos_weight() const { return pos_weight_; }
  double weight(std::size_t link) const { return ds_->link(link).label > 0 ? pos_weight_ : 1.0; }

  // Links i -> j (j != i), j -> i (j != i) and i -> i touching entity i.
  const std::vector<std::size_t>& outgoing(int entity) const { return outgoing_.at(entity); }
  const std::vector<std::size_t>& incoming(int entity) const { return incoming_.at(entity); }
  const std::vector<std::size_t>& self(int entity) const { return self_.at(entity); }

 private:
  const RelationalDataset* ds_;
  std::vector<std::size_t> links_;
  std::vector<std::vector<std::size_t>> by_relation_;
  std::vector<std::vector<std::size_t>> outgoing_, incoming_, self_;
  double ell_;
  double pos_weight_;
};

// sum over observed links of weight * max(0, ell - y f).
double hinge_risk(const ModelState& state, const ObservedLinks& obs);

// Subgradient of hinge_risk in psi_ik, with the active set taken at the
// current state (links with y f <= ell).
double psi_gradient(const ModelState& state, const ObservedLinks& obs, int entity, int feature);

// Exact minimization of the objective over psi_ik with everything else
// fixed. The result satisfies psi_ik = sigmoid(prior_logit_k - c * g) for a
// subgradient g of the risk at the new value, which is the plain
// sigmoid(prior_logit_k - c * psi_gradient) update whenever no hinge
// changes state. Clamped into (0, 1). prior_logits comes from
// stick::prior_logits at the current sticks.
double update_psi(ModelState& state, const ObservedLinks& obs, int entity, int feature, double c,
                  std::span<const double> prior_logits);

// One pass of update_psi over all (i, k), entity by entity, with cached
// discriminants. Never increases the objective.
void sweep_psi(ModelState& state, const ObservedLinks& obs, double c);

// Variational objective of MedLFRM: kl_stick + 1/2 sum_r (|lambda_r|^2 +
// |kappa_r|^2) + c * hinge_risk. Constant terms of the Gaussian KL are dropped.
double objective(const ModelState& state, const ObservedLinks& obs, double c);

// SVM for relation r at the current feature posterior: one example per
// observed link of r with the latent block followed by X_ij.
SvmProblem build_svm_problem(const ModelState& state, const ObservedLinks& obs, int relation,
                             bool symmetric);

// Alternating p(Theta) step used by the outer loop. Implementations own any
// warm-start state carried between outer iterations.
class ParameterStep {
 public:
  virtual ~ParameterStep() = default;
  virtual void initialize(ModelState& state) { (void)state; }
  // Updates state.weights (and any hyper state); returns false when some
  // SVM solve stopped before meeting its tolerance.
  virtual bool update(ModelState& state, const ObservedLinks& obs, Rng& rng) = 0;
  // KL terms of the objective that involve Theta and hyperparameters.
  virtual double weight_kl(const ModelState& state) const = 0;
  // Multiplier of hinge_risk in the objective and in the psi updates.
  virtual double risk_weight() const = 0;
};

// Shared outer loop: initialize, then per outer iteration update the sticks
// and sweep psi, then run the parameter step and record the trace.
TrainedModel run_alternation(const RelationalDataset& ds, const SplitMask& split,
                             const TrainConfig& config, std::span<const std::size_t> probe,
                             ParameterStep& step);

// Fits MedLFRM (or BayesMedLFRM when config.mode says so) on split.observed.
// probe, if nonempty, lists link indices whose AUC is tracked per iteration.
TrainedModel fit(const RelationalDataset& ds, const SplitMask& split, const TrainConfig& config,
                 std::span<const std::size_t> probe = {});

struct Prediction {
  std::vector<double> scores;
  std::vector<int> signs;  // sign(score) with sign(0) = -1
};

// Scores the (relation, source, target) of each link; labels are ignored.
Prediction predict(const RelationalDataset& ds, const ModelState& state, std::span<const Link> pairs);
Prediction predict(const RelationalDataset& ds, const ModelState& state,
                   std::span<const std::size_t> link_indices);

}  // namespace medlfrm
