#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "medlfrm/auc.hpp"
#include "medlfrm/bayes.hpp"
#include "medlfrm/dataset.hpp"
#include "medlfrm/model.hpp"
#include "medlfrm/special.hpp"
#include "medlfrm/stick.hpp"
#include "medlfrm/svm.hpp"

namespace py = pybind11;
using namespace medlfrm;

namespace {

py::dict trace_dict(const std::vector<TraceRecord>& trace) {
  std::vector<int> it, active;
  std::vector<double> obj, risk, test_auc;
  for (const auto& r : trace) {
    it.push_back(r.iteration);
    obj.push_back(r.objective);
    risk.push_back(r.hinge_risk);
    test_auc.push_back(r.test_auc);
    active.push_back(r.active_features);
  }
  py::dict d;
  d["iteration"] = it;
  d["objective"] = obj;
  d["hinge_risk"] = risk;
  d["test_auc"] = test_auc;
  d["active_features"] = active;
  return d;
}

}  // namespace

PYBIND11_MODULE(_medlfrm, m) {
  m.doc() = "MedLFRM / BayesMedLFRM link prediction";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError", PyExc_ValueError);

  py::class_<Link>(m, "Link")
      .def(py::init([](int r, int i, int j, int y) { return Link{r, i, j, y}; }), py::arg("relation"),
           py::arg("source"), py::arg("target"), py::arg("label") = 1)
      .def_readwrite("relation", &Link::relation)
      .def_readwrite("source", &Link::source)
      .def_readwrite("target", &Link::target)
      .def_readwrite("label", &Link::label)
      .def("__repr__", [](const Link& l) {
        return "Link(" + std::to_string(l.relation) + ", " + std::to_string(l.source) + ", " +
               std::to_string(l.target) + ", " + std::to_string(l.label) + ")";
      });

  py::class_<RelationalDataset>(m, "Dataset")
      .def(py::init<int, int, int>(), py::arg("n_entities"), py::arg("n_relations"), py::arg("feature_dim") = 0)
      .def_property_readonly("n_entities", &RelationalDataset::n_entities)
      .def_property_readonly("n_relations", &RelationalDataset::n_relations)
      .def_property_readonly("feature_dim", &RelationalDataset::feature_dim)
      .def("add_link", &RelationalDataset::add_link, py::arg("relation"), py::arg("source"), py::arg("target"),
           py::arg("label"))
      .def("set_pair_features",
           [](RelationalDataset& ds, int i, int j, const std::vector<double>& x) { ds.set_pair_features(i, j, x); })
      .def_property_readonly("links", &RelationalDataset::links)
      .def("__len__", &RelationalDataset::size)
      .def("save", [](const RelationalDataset& ds, const std::string& path) { save_dataset(path, ds); });

  m.def("load_dataset", [](const std::string& path) { return load_dataset(path); });

  py::class_<SplitMask>(m, "SplitMask")
      .def_readonly("observed", &SplitMask::observed)
      .def_readonly("heldout", &SplitMask::heldout)
      .def_readonly("seed", &SplitMask::seed);
  m.def("split_holdout", &split_holdout, py::arg("dataset"), py::arg("fraction") = 0.2, py::arg("seed") = 0);

  m.def(
      "synth_generate",
      [](int n, int k, std::uint64_t seed, double density, double scale, double noise) {
        const SyntheticData s = synth_generate(n, k, seed, density, scale, noise);
        return py::make_tuple(s.dataset, s.z, s.w);
      },
      py::arg("n"), py::arg("k_true"), py::arg("seed"), py::arg("feature_density") = 0.3,
      py::arg("weight_scale") = 1.0, py::arg("noise_ratio") = 0.1,
      "Returns (dataset, Z, W) of a planted-feature benchmark.");

  py::enum_<Mode>(m, "Mode").value("MedLFRM", Mode::kMedLFRM).value("BayesMedLFRM", Mode::kBayesMedLFRM);
  m.attr("MedLFRM") = Mode::kMedLFRM;
  m.attr("BayesMedLFRM") = Mode::kBayesMedLFRM;

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("K", &TrainConfig::truncation)
      .def_readwrite("alpha", &TrainConfig::alpha)
      .def_readwrite("C", &TrainConfig::c)
      .def_readwrite("pos_cost_ratio", &TrainConfig::pos_cost_ratio)
      .def_readwrite("ell", &TrainConfig::ell)
      .def_readwrite("max_outer", &TrainConfig::max_outer)
      .def_readwrite("psi_sweeps", &TrainConfig::psi_sweeps)
      .def_readwrite("objective_tol", &TrainConfig::objective_tol)
      .def_readwrite("svm_tol", &TrainConfig::svm_tol)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("mode", &TrainConfig::mode)
      .def_readwrite("symmetric", &TrainConfig::symmetric);

  py::class_<TrainedModel>(m, "TrainedModel")
      .def_property_readonly("psi", [](const TrainedModel& t) { return t.state.features.psi; })
      .def_property_readonly("lambdas",
                             [](const TrainedModel& t) {
                               std::vector<Eigen::MatrixXd> out;
                               for (const auto& w : t.state.weights) out.push_back(w.lambda);
                               return out;
                             })
      .def_property_readonly("trace", [](const TrainedModel& t) { return trace_dict(t.trace); })
      .def_readonly("solver_converged", &TrainedModel::solver_converged)
      .def_readonly("objective_converged", &TrainedModel::objective_converged);

  m.def(
      "fit",
      [](const RelationalDataset& ds, const SplitMask& split, const TrainConfig& config, bool probe_heldout) {
        py::gil_scoped_release release;
        return fit(ds, split, config, probe_heldout ? std::span<const std::size_t>(split.heldout)
                                                    : std::span<const std::size_t>());
      },
      py::arg("dataset"), py::arg("split"), py::arg("config"), py::arg("probe_heldout") = false);

  m.def(
      "predict",
      [](const RelationalDataset& ds, const TrainedModel& model, const std::vector<std::size_t>& links) {
        return predict(ds, model.state, std::span<const std::size_t>(links)).scores;
      },
      py::arg("dataset"), py::arg("model"), py::arg("link_indices"));

  m.def(
      "auc", [](const std::vector<double>& s, const std::vector<int>& y) { return auc(s, y); }, py::arg("scores"),
      py::arg("labels"));

  m.def("digamma", &digamma);

  m.def(
      "tr_term",
      [](const Eigen::MatrixXd& lambda, const Eigen::VectorXd& psi_i, const Eigen::VectorXd& psi_j, bool same) {
        return tr_term(lambda, psi_i, psi_j, same);
      },
      py::arg("lam"), py::arg("psi_i"), py::arg("psi_j"), py::arg("same_entity") = false);

  m.def(
      "tail_bound",
      [](const std::vector<std::pair<double, double>>& gamma, int k) {
        StickPosterior sp;
        for (auto [a, b] : gamma) sp.gamma.push_back({a, b});
        const TailBound tb = tail_bound(sp, k);
        return py::make_tuple(tb.value, tb.q);
      },
      py::arg("gamma"), py::arg("k"), "Returns (bound, q) for 1-based k.");

  py::class_<SvmProblem>(m, "SvmProblem")
      .def(py::init([](const RowMatrix& x, std::vector<int> y, std::vector<double> margins, std::vector<double> boxes,
                       double tol) {
             SvmProblem p;
             p.features = x;
             p.labels = std::move(y);
             p.margins = std::move(margins);
             p.boxes = std::move(boxes);
             p.tol = tol;
             p.validate();
             return p;
           }),
           py::arg("features"), py::arg("labels"), py::arg("margins"), py::arg("boxes"), py::arg("tol") = 1e-4);

  m.def(
      "solve_svm",
      [](const SvmProblem& p) {
        const SvmSolution s = solve(p);
        py::dict d;
        d["weights"] = s.weights;
        d["duals"] = s.duals;
        d["primal"] = s.primal_obj;
        d["dual"] = s.dual_obj;
        d["converged"] = s.converged;
        return d;
      },
      py::arg("problem"));

  m.def(
      "update_hyper",
      [](const Eigen::MatrixXd& lambda, const Eigen::VectorXd& kappa, double prec, double mu0, double n0, double nu0,
         double s0) {
        const HyperPosterior hp = update_hyper(lambda, kappa, prec, HyperPrior{mu0, n0, nu0, s0});
        return py::make_tuple(hp.mu, hp.n, hp.nu, hp.s);
      },
      py::arg("lam"), py::arg("kappa"), py::arg("precision"), py::arg("mu0") = 0.0, py::arg("n0") = 1.0,
      py::arg("nu0") = 2.0, py::arg("s0") = 1.0, "Returns (mu, n, nu, s).");
}
