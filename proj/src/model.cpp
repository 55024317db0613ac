#include "medlfrm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "medlfrm/auc.hpp"
#include "medlfrm/bayes.hpp"
#include "medlfrm/special.hpp"
#include "medlfrm/stick.hpp"

namespace medlfrm {

namespace {

constexpr double kPsiFloor = 1e-12;

double clamp_psi(double p) { return std::clamp(p, kPsiFloor, 1.0 - kPsiFloor); }

double feature_offset(const RelationalDataset& ds, const WeightPosterior& wp, int source, int target) {
  if (wp.kappa.size() == 0) return 0.0;
  const auto x = ds.pair_features(source, target);
  if (x.empty()) return 0.0;
  return wp.kappa.dot(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
}

// d f_ii / d psi_ik for a self link.
double self_link_slope(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& psi_i, int k) {
  return lambda.row(k).dot(psi_i) + lambda.col(k).dot(psi_i) - 2.0 * lambda(k, k) * psi_i[k] +
         lambda(k, k);
}

// y f of one link as an affine function of a single psi_ik:
// margin(x) = base + slope * x.
struct HingePiece {
  double base = 0.0;
  double slope = 0.0;
  double weight = 1.0;
};

// argmin over x in (0, 1) of
//   -prior x + x log x + (1 - x) log(1 - x) + c sum_m w_m max(0, ell - base_m - slope_m x).
// The objective is convex; on each segment between hinge kinks the
// stationary point is sigmoid(prior - c G) with G the segment's slope of the
// risk, so walking the sorted kinks finds the minimizer exactly.
double minimize_coordinate(double prior_logit, double c, double ell, std::span<const HingePiece> pieces,
                           std::vector<std::pair<double, double>>& events) {
  events.clear();
  double g = 0.0;
  for (const auto& p : pieces) {
    if (p.slope == 0.0) continue;
    const double t = (ell - p.base) / p.slope;
    const double step = p.weight * std::abs(p.slope);
    if (p.slope > 0.0) {
      if (t > 0.0) {
        g -= step;
        if (t < 1.0) events.emplace_back(t, step);
      }
    } else if (t <= 0.0) {
      g += step;
    } else if (t < 1.0) {
      events.emplace_back(t, step);
    }
  }
  std::sort(events.begin(), events.end());
  double prev = 0.0;
  for (const auto& [t, inc] : events) {
    const double x = sigmoid(prior_logit - c * g);
    if (x <= prev) return clamp_psi(prev);
    if (x < t) return clamp_psi(x);
    g += inc;
    prev = t;
  }
  return clamp_psi(std::max(sigmoid(prior_logit - c * g), prev));
}

class MedLfrmStep final : public ParameterStep {
 public:
  explicit MedLfrmStep(const TrainConfig& config) : config_(config) {}

  bool update(ModelState& state, const ObservedLinks& obs, Rng& rng) override {
    const auto& ds = obs.dataset();
    const int K = state.features.truncation();
    const int D = ds.feature_dim();
    duals_.resize(static_cast<std::size_t>(ds.n_relations()));
    bool all_converged = true;
    for (int r = 0; r < ds.n_relations(); ++r) {
      if (obs.by_relation(r).empty()) {
        state.weights[r].lambda.setZero(K, K);
        state.weights[r].kappa.setZero(D);
        continue;
      }
      SvmProblem prob = build_svm_problem(state, obs, r, config_.symmetric);
      for (auto& box : prob.boxes) box *= config_.c;
      prob.tol = config_.svm_tol;
      prob.max_sweeps = config_.svm_max_sweeps;
      prob.seed = rng.next();
      std::optional<Eigen::VectorXd> warm;
      if (duals_[r].size() == static_cast<Eigen::Index>(prob.size())) warm = duals_[r];
      const SvmSolution sol = solve(prob, warm);
      all_converged = all_converged && sol.converged;
      duals_[r] = sol.duals;
      state.weights[r] = unpack_weights(sol.weights, K, D, config_.symmetric);
    }
    return all_converged;
  }

  double weight_kl(const ModelState& state) const override {
    double total = 0.0;
    for (const auto& wp : state.weights) total += 0.5 * (wp.lambda.squaredNorm() + wp.kappa.squaredNorm());
    return total;
  }

  double risk_weight() const override { return config_.c; }

 private:
  TrainConfig config_;
  std::vector<Eigen::VectorXd> duals_;
};

double probe_auc(const RelationalDataset& ds, const ModelState& state, std::span<const std::size_t> probe) {
  if (probe.empty()) return std::numeric_limits<double>::quiet_NaN();
  const Prediction pred = predict(ds, state, probe);
  std::vector<int> labels;
  labels.reserve(probe.size());
  for (auto idx : probe) labels.push_back(ds.link(idx).label);
  try {
    return auc(pred.scores, labels);
  } catch (const UndefinedMetricError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

std::string to_string(Mode mode) { return mode == Mode::kMedLFRM ? "MedLFRM" : "BayesMedLFRM"; }

std::string to_string(Setting setting) { return setting == Setting::kSingle ? "single" : "global"; }

Mode parse_mode(const std::string& text) {
  if (text == "MedLFRM") return Mode::kMedLFRM;
  if (text == "BayesMedLFRM") return Mode::kBayesMedLFRM;
  throw std::invalid_argument("unknown mode '" + text + "' (expected MedLFRM or BayesMedLFRM)");
}

Setting parse_setting(const std::string& text) {
  if (text == "single") return Setting::kSingle;
  if (text == "global") return Setting::kGlobal;
  throw std::invalid_argument("unknown setting '" + text + "' (expected single or global)");
}

int FeaturePosterior::active_features() const {
  int count = 0;
  for (Eigen::Index k = 0; k < psi.cols(); ++k) {
    if (psi.rows() > 0 && psi.col(k).maxCoeff() > 0.5) ++count;
  }
  return count;
}

void HyperPrior::validate() const {
  if (!(n0 > 0.0) || !(nu0 > 0.0) || !(s0 > 0.0) || !std::isfinite(mu0)) {
    throw std::invalid_argument("hyper prior: n0, nu0 and s0 must be positive");
  }
}

void TrainConfig::validate() const {
  if (truncation < 1) throw std::invalid_argument("config: K must be >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("config: alpha must be positive");
  if (mode == Mode::kMedLFRM && !(c > 0.0)) throw std::invalid_argument("config: C must be positive");
  if (!(pos_cost_ratio > 0.0)) throw std::invalid_argument("config: pos_cost_ratio must be positive");
  if (!(ell > 0.0)) throw std::invalid_argument("config: ell must be positive");
  if (max_outer < 0) throw std::invalid_argument("config: max_outer must be >= 0");
  if (psi_sweeps < 1) throw std::invalid_argument("config: psi_sweeps must be >= 1");
  if (!(objective_tol >= 0.0)) throw std::invalid_argument("config: objective_tol must be >= 0");
  if (stall_iterations < 1) throw std::invalid_argument("config: stall_iterations must be >= 1");
  if (!(svm_tol > 0.0)) throw std::invalid_argument("config: svm_tol must be positive");
  if (svm_max_sweeps < 1) throw std::invalid_argument("config: svm_max_sweeps must be >= 1");
  hyper_prior.validate();
}

double tr_term(const Eigen::MatrixXd& lambda, const ConstVectorRef& psi_i, const ConstVectorRef& psi_j,
               bool same_entity) {
  const auto K = lambda.rows();
  if (lambda.cols() != K || psi_i.size() != K || psi_j.size() != K) {
    throw std::invalid_argument("tr_term: dimension mismatch");
  }
  double value = psi_i.dot(lambda * psi_j);
  if (same_entity) {
    for (Eigen::Index k = 0; k < K; ++k) value += lambda(k, k) * psi_i[k] * (1.0 - psi_i[k]);
  }
  return value;
}

double zbar_sum(const ConstVectorRef& psi_i, const ConstVectorRef& psi_j, bool same_entity) {
  double value = psi_i.sum() * psi_j.sum();
  if (same_entity) value += (psi_i.array() * (1.0 - psi_i.array())).sum();
  return value;
}

int latent_feature_dim(int truncation, bool symmetric) {
  return symmetric ? truncation * (truncation + 1) / 2 : truncation * truncation;
}

void latent_features(const ConstVectorRef& psi_i, const ConstVectorRef& psi_j, bool same_entity,
                     bool symmetric, std::span<double> out) {
  const auto K = static_cast<int>(psi_i.size());
  if (psi_j.size() != K || static_cast<int>(out.size()) != latent_feature_dim(K, symmetric)) {
    throw std::invalid_argument("latent_features: dimension mismatch");
  }
  auto zbar = [&](int k, int l) {
    return (same_entity && k == l) ? psi_i[k] : psi_i[k] * psi_j[l];
  };
  std::size_t idx = 0;
  if (!symmetric) {
    for (int k = 0; k < K; ++k) {
      for (int l = 0; l < K; ++l) out[idx++] = zbar(k, l);
    }
    return;
  }
  for (int k = 0; k < K; ++k) {
    out[idx++] = zbar(k, k);
    for (int l = k + 1; l < K; ++l) out[idx++] = (zbar(k, l) + zbar(l, k)) * (1.0 / std::numbers::sqrt2);
  }
}

WeightPosterior unpack_weights(const Eigen::VectorXd& w, int truncation, int feature_dim, bool symmetric) {
  const int latent = latent_feature_dim(truncation, symmetric);
  if (w.size() != latent + feature_dim) throw std::invalid_argument("unpack_weights: dimension mismatch");
  WeightPosterior wp;
  wp.symmetric = symmetric;
  wp.lambda.resize(truncation, truncation);
  Eigen::Index idx = 0;
  if (!symmetric) {
    for (int k = 0; k < truncation; ++k) {
      for (int l = 0; l < truncation; ++l) wp.lambda(k, l) = w[idx++];
    }
  } else {
    for (int k = 0; k < truncation; ++k) {
      wp.lambda(k, k) = w[idx++];
      for (int l = k + 1; l < truncation; ++l) {
        wp.lambda(k, l) = wp.lambda(l, k) = w[idx++] * (1.0 / std::numbers::sqrt2);
      }
    }
  }
  wp.kappa = w.tail(feature_dim);
  return wp;
}

double discriminant(const RelationalDataset& ds, const ModelState& state, int relation, int source,
                    int target) {
  if (relation < 0 || relation >= static_cast<int>(state.weights.size())) {
    throw std::out_of_range("discriminant: relation index out of range");
  }
  const auto& psi = state.features.psi;
  if (source < 0 || source >= psi.rows() || target < 0 || target >= psi.rows()) {
    throw std::out_of_range("discriminant: entity index out of range");
  }
  const auto& wp = state.weights[relation];
  return tr_term(wp.lambda, psi.row(source).transpose(), psi.row(target).transpose(), source == target) +
         feature_offset(ds, wp, source, target);
}

ObservedLinks::ObservedLinks(const RelationalDataset& ds, std::span<const std::size_t> links, double ell,
                             double pos_weight)
    : ds_(&ds), links_(links.begin(), links.end()), ell_(ell), pos_weight_(pos_weight) {
  const auto n = static_cast<std::size_t>(ds.n_entities());
  by_relation_.resize(static_cast<std::size_t>(ds.n_relations()));
  outgoing_.resize(n);
  incoming_.resize(n);
  self_.resize(n);
  for (auto idx : links_) {
    if (idx >= ds.size()) throw std::out_of_range("observed link index out of range");
    const auto& l = ds.link(idx);
    by_relation_[l.relation].push_back(idx);
    if (l.source == l.target) {
      self_[l.source].push_back(idx);
    } else {
      outgoing_[l.source].push_back(idx);
      incoming_[l.target].push_back(idx);
    }
  }
}

double hinge_risk(const ModelState& state, const ObservedLinks& obs) {
  const auto& ds = obs.dataset();
  double risk = 0.0;
  for (auto idx : obs.links()) {
    const auto& l = ds.link(idx);
    const double f = discriminant(ds, state, l.relation, l.source, l.target);
    risk += obs.weight(idx) * std::max(0.0, obs.ell() - l.label * f);
  }
  return risk;
}

double psi_gradient(const ModelState& state, const ObservedLinks& obs, int entity, int feature) {
  const auto& ds = obs.dataset();
  const auto& psi = state.features.psi;
  if (entity < 0 || entity >= psi.rows() || feature < 0 || feature >= psi.cols()) {
    throw std::out_of_range("psi_gradient: index out of range");
  }
  double grad = 0.0;
  for (auto idx : obs.outgoing(entity)) {
    const auto& l = ds.link(idx);
    if (l.label * discriminant(ds, state, l.relation, l.source, l.target) > obs.ell()) continue;
    const auto& lambda = state.weights[l.relation].lambda;
    grad -= obs.weight(idx) * l.label * lambda.row(feature).dot(psi.row(l.target));
  }
  for (auto idx : obs.incoming(entity)) {
    const auto& l = ds.link(idx);
    if (l.label * discriminant(ds, state, l.relation, l.source, l.target) > obs.ell()) continue;
    const auto& lambda = state.weights[l.relation].lambda;
    grad -= obs.weight(idx) * l.label * psi.row(l.source).dot(lambda.col(feature));
  }
  if (!obs.self(entity).empty()) {
    const Eigen::VectorXd psi_i = psi.row(entity).transpose();
    for (auto idx : obs.self(entity)) {
      const auto& l = ds.link(idx);
      if (l.label * discriminant(ds, state, l.relation, l.source, l.target) > obs.ell()) continue;
      grad -= obs.weight(idx) * l.label * self_link_slope(state.weights[l.relation].lambda, psi_i, feature);
    }
  }
  return grad;
}

double update_psi(ModelState& state, const ObservedLinks& obs, int entity, int feature, double c,
                  std::span<const double> prior_logits) {
  if (static_cast<int>(prior_logits.size()) != state.features.truncation()) {
    throw std::invalid_argument("update_psi: prior logits have the wrong length");
  }
  const auto& ds = obs.dataset();
  auto& psi = state.features.psi;
  if (entity < 0 || entity >= psi.rows() || feature < 0 || feature >= psi.cols()) {
    throw std::out_of_range("update_psi: index out of range");
  }
  const double old = psi(entity, feature);
  const Eigen::VectorXd psi_i = psi.row(entity).transpose();
  std::vector<HingePiece> pieces;
  auto add = [&](std::size_t idx, double slope) {
    const auto& l = ds.link(idx);
    const double yf = l.label * discriminant(ds, state, l.relation, l.source, l.target);
    const double ys = l.label * slope;
    pieces.push_back({yf - ys * old, ys, obs.weight(idx)});
  };
  for (auto idx : obs.outgoing(entity)) {
    const auto& l = ds.link(idx);
    add(idx, state.weights[l.relation].lambda.row(feature).dot(psi.row(l.target)));
  }
  for (auto idx : obs.incoming(entity)) {
    const auto& l = ds.link(idx);
    add(idx, psi.row(l.source).dot(state.weights[l.relation].lambda.col(feature)));
  }
  for (auto idx : obs.self(entity)) {
    add(idx, self_link_slope(state.weights[ds.link(idx).relation].lambda, psi_i, feature));
  }
  std::vector<std::pair<double, double>> events;
  const double value = minimize_coordinate(prior_logits[feature], c, obs.ell(), pieces, events);
  psi(entity, feature) = value;
  return value;
}

void sweep_psi(ModelState& state, const ObservedLinks& obs, double c) {
  const auto& ds = obs.dataset();
  auto& psi = state.features.psi;
  const auto N = psi.rows();
  const auto K = psi.cols();
  const int R = ds.n_relations();
  const auto prior = prior_logits(state.sticks);

  // Columns of right[r] are lambda_r psi_j^T, columns of left[r] are
  // lambda_r^T psi_j^T (i.e. (psi_j lambda_r)^T).
  std::vector<Eigen::MatrixXd> right(R), left(R);
  for (int r = 0; r < R; ++r) {
    right[r] = state.weights[r].lambda * psi.transpose();
    left[r] = state.weights[r].lambda.transpose() * psi.transpose();
  }
  std::vector<double> offset(ds.size(), 0.0);
  if (ds.has_features()) {
    for (auto idx : obs.links()) {
      const auto& l = ds.link(idx);
      offset[idx] = feature_offset(ds, state.weights[l.relation], l.source, l.target);
    }
  }

  Eigen::VectorXd psi_i(K);
  // Links touching the current entity: index, label, y f, and the column
  // of right/left holding d f / d psi_i (null for self links).
  struct Touch {
    std::size_t idx;
    int label;
    double yf;
    const double* col;
  };
  std::vector<Touch> touching;
  std::vector<HingePiece> pieces;
  std::vector<std::pair<double, double>> events;
  for (Eigen::Index i = 0; i < N; ++i) {
    const int entity = static_cast<int>(i);
    psi_i = psi.row(i).transpose();
    touching.clear();
    for (auto idx : obs.outgoing(entity)) {
      const auto& l = ds.link(idx);
      const double* col = right[l.relation].col(l.target).data();
      const double f = Eigen::Map<const Eigen::VectorXd>(col, K).dot(psi_i) + offset[idx];
      touching.push_back({idx, l.label, l.label * f, col});
    }
    for (auto idx : obs.incoming(entity)) {
      const auto& l = ds.link(idx);
      const double* col = left[l.relation].col(l.source).data();
      const double f = Eigen::Map<const Eigen::VectorXd>(col, K).dot(psi_i) + offset[idx];
      touching.push_back({idx, l.label, l.label * f, col});
    }
    for (auto idx : obs.self(entity)) {
      const auto& l = ds.link(idx);
      const double f = tr_term(state.weights[l.relation].lambda, psi_i, psi_i, true) + offset[idx];
      touching.push_back({idx, l.label, l.label * f, nullptr});
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      const double old = psi_i[k];
      pieces.resize(touching.size());
      for (std::size_t m = 0; m < touching.size(); ++m) {
        const auto& t = touching[m];
        const double slope =
            t.col != nullptr
                ? t.col[k]
                : self_link_slope(state.weights[ds.link(t.idx).relation].lambda, psi_i, static_cast<int>(k));
        const double ys = t.label * slope;
        pieces[m] = {t.yf - ys * old, ys, obs.weight(t.idx)};
      }
      psi_i[k] = minimize_coordinate(prior[k], c, obs.ell(), pieces, events);
      const double delta = psi_i[k] - old;
      if (delta != 0.0) {
        for (std::size_t m = 0; m < touching.size(); ++m) touching[m].yf += pieces[m].slope * delta;
      }
    }
    psi.row(i) = psi_i.transpose();
    for (int r = 0; r < R; ++r) {
      right[r].col(i).noalias() = state.weights[r].lambda * psi_i;
      left[r].col(i).noalias() = state.weights[r].lambda.transpose() * psi_i;
    }
  }
}

double objective(const ModelState& state, const ObservedLinks& obs, double c) {
  double weight_term = 0.0;
  for (const auto& wp : state.weights) weight_term += 0.5 * (wp.lambda.squaredNorm() + wp.kappa.squaredNorm());
  return kl_stick(state.sticks, state.features.psi) + weight_term + c * hinge_risk(state, obs);
}

SvmProblem build_svm_problem(const ModelState& state, const ObservedLinks& obs, int relation, bool symmetric) {
  const auto& ds = obs.dataset();
  const auto& examples = obs.by_relation(relation);
  const auto& psi = state.features.psi;
  const int K = state.features.truncation();
  const int latent = latent_feature_dim(K, symmetric);
  const int D = ds.feature_dim();

  SvmProblem prob;
  prob.features.setZero(static_cast<Eigen::Index>(examples.size()), latent + D);
  prob.labels.reserve(examples.size());
  prob.margins.assign(examples.size(), obs.ell());
  prob.boxes.reserve(examples.size());
  Eigen::VectorXd psi_i(K), psi_j(K);
  for (std::size_t m = 0; m < examples.size(); ++m) {
    const auto& l = ds.link(examples[m]);
    psi_i = psi.row(l.source).transpose();
    psi_j = psi.row(l.target).transpose();
    double* row = prob.features.row(static_cast<Eigen::Index>(m)).data();
    latent_features(psi_i, psi_j, l.source == l.target, symmetric,
                    std::span<double>(row, static_cast<std::size_t>(latent)));
    const auto x = ds.pair_features(l.source, l.target);
    std::copy(x.begin(), x.end(), row + latent);
    prob.labels.push_back(l.label);
    prob.boxes.push_back(obs.weight(examples[m]));
  }
  return prob;
}

TrainedModel run_alternation(const RelationalDataset& ds, const SplitMask& split, const TrainConfig& config,
                             std::span<const std::size_t> probe, ParameterStep& step) {
  config.validate();
  if (split.observed.empty()) throw std::invalid_argument("fit: observed set is empty");
  const ObservedLinks obs(ds, split.observed, config.ell, config.pos_cost_ratio);
  const int N = ds.n_entities();
  const int K = config.truncation;
  const int D = ds.feature_dim();
  Rng rng(config.seed);

  TrainedModel model;
  ModelState& state = model.state;
  state.features.psi.resize(N, K);
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < K; ++k) state.features.psi(i, k) = 0.5 + rng.uniform(0.0, 0.001);
  }
  state.weights.resize(static_cast<std::size_t>(ds.n_relations()));
  for (auto& wp : state.weights) {
    wp.symmetric = config.symmetric;
    wp.lambda.resize(K, K);
    for (int k = 0; k < K; ++k) {
      for (int l = 0; l < K; ++l) wp.lambda(k, l) = rng.uniform(0.0, 0.1);
    }
    if (config.symmetric) {
      const Eigen::MatrixXd upper = wp.lambda.selfadjointView<Eigen::Upper>();
      wp.lambda = upper;
    }
    wp.kappa.setZero(D);
  }
  state.sticks = StickPosterior::prior(K, config.alpha);
  step.initialize(state);

  auto record = [&](int iteration, bool svm_ok) {
    TraceRecord rec;
    rec.iteration = iteration;
    rec.hinge_risk = hinge_risk(state, obs);
    rec.objective = kl_stick(state.sticks, state.features.psi) + step.weight_kl(state) +
                    step.risk_weight() * rec.hinge_risk;
    rec.test_auc = probe_auc(ds, state, probe);
    rec.active_features = state.features.active_features();
    rec.svm_converged = svm_ok;
    rec.hyper = state.hyper;
    model.trace.push_back(rec);
  };
  record(0, true);

  int stalled = 0;
  for (int t = 1; t <= config.max_outer; ++t) {
    for (int s = 0; s < config.psi_sweeps; ++s) {
      state.sticks = update_gamma(state.sticks, state.features.psi);
      sweep_psi(state, obs, step.risk_weight());
    }
    const bool svm_ok = step.update(state, obs, rng);
    model.solver_converged = model.solver_converged && svm_ok;
    record(t, svm_ok);

    const double prev = model.trace[model.trace.size() - 2].objective;
    const double curr = model.trace.back().objective;
    const double change = std::abs(curr - prev) / std::max(std::abs(prev), 1e-12);
    stalled = change < config.objective_tol ? stalled + 1 : 0;
    if (stalled >= config.stall_iterations) {
      model.objective_converged = true;
      break;
    }
  }
  return model;
}

TrainedModel fit(const RelationalDataset& ds, const SplitMask& split, const TrainConfig& config,
                 std::span<const std::size_t> probe) {
  if (config.mode == Mode::kBayesMedLFRM) return fit_bayes(ds, split, config, probe);
  MedLfrmStep step(config);
  return run_alternation(ds, split, config, probe, step);
}

Prediction predict(const RelationalDataset& ds, const ModelState& state, std::span<const Link> pairs) {
  Prediction out;
  out.scores.reserve(pairs.size());
  out.signs.reserve(pairs.size());
  for (const auto& p : pairs) {
    const double f = discriminant(ds, state, p.relation, p.source, p.target);
    out.scores.push_back(f);
    out.signs.push_back(f > 0.0 ? 1 : -1);
  }
  return out;
}

Prediction predict(const RelationalDataset& ds, const ModelState& state, std::span<const std::size_t> link_indices) {
  std::vector<Link> pairs;
  pairs.reserve(link_indices.size());
  for (auto idx : link_indices) pairs.push_back(ds.link(idx));
  return predict(ds, state, pairs);
}

}  // namespace medlfrm
