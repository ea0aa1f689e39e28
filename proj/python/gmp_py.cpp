#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "gmp/cagp.hpp"
#include "gmp/config.hpp"
#include "gmp/errors.hpp"
#include "gmp/experiment.hpp"
#include "gmp/grad_check.hpp"
#include "gmp/igdm.hpp"
#include "gmp/synthdata.hpp"
#include "gmp/trainer.hpp"

namespace py = pybind11;
using namespace gmp;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ad::Tensor to_tensor(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return ad::Tensor::matrix(rows, cols, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const ad::Tensor& t) {
  Array out({t.rows(), t.cols()});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::dict pair(const PerModality<double>& p) {
  py::dict d;
  d["v"] = p.v;
  d["a"] = p.a;
  return d;
}

py::dict summary_dict(const RunSummary& s) {
  py::dict d;
  d["strategy"] = std::string(to_string(s.strategy));
  d["seed"] = s.seed;
  d["best_epoch"] = s.best_epoch;
  d["source_val_acc"] = s.source_val_acc;
  d["target_acc"] = s.target_acc;
  d["branch_acc_v"] = s.branch_acc_v;
  d["branch_acc_a"] = s.branch_acc_a;
  d["mean_abs_rho_dev"] = s.mean_abs_rho_dev;
  d["mean_abs_sigma_dev"] = s.mean_abs_sigma_dev;
  d["conflict_rate"] = pair(s.conflict_rate);
  d["steps"] = s.steps;
  d["dataset_hash"] = s.dataset_hash;
  return d;
}

py::dict batch_dict(const MultimodalBatch& b) {
  py::dict d;
  d["x_v"] = to_array(b.x_v);
  d["x_a"] = to_array(b.x_a);
  d["y"] = b.y;
  d["d"] = b.d;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gradient modulation and projection for multimodal domain generalisation";

  // Translators run most-recent first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("strategies", [] {
    std::vector<std::string> out;
    for (Strategy s : kAllStrategies) out.emplace_back(to_string(s));
    return out;
  });

  // Confidence and modulation.
  m.def(
      "semantic_confidence",
      [](const Array& logits, const std::vector<int>& labels) { return igdm::semantic_confidence(to_tensor(logits), labels); },
      py::arg("logits"), py::arg("labels"));
  m.def(
      "domain_confidence",
      [](const Array& logits, const std::vector<int>& domains) { return igdm::domain_confidence(to_tensor(logits), domains); },
      py::arg("logits"), py::arg("domains"));
  m.def(
      "discrepancy_ratios",
      [](const std::vector<double>& q_v, const std::vector<double>& q_a, const std::vector<double>& c_v,
         const std::vector<double>& c_a) {
        const auto s = igdm::discrepancy_ratios(q_v, q_a, c_v, c_a);
        py::dict d;
        d["rho"] = pair(s.rho);
        d["sigma"] = pair(s.sigma);
        return d;
      },
      py::arg("q_v"), py::arg("q_a"), py::arg("c_v"), py::arg("c_a"));
  m.def("suppression_coefficient", &igdm::suppression_coefficient, py::arg("ratio"), py::arg("alpha"));

  // Projection.
  m.def(
      "detect_conflict",
      [](const std::vector<double>& g_c, const std::vector<double>& g_d) { return cagp::detect_conflict(g_c, g_d); },
      py::arg("g_c"), py::arg("g_d"));
  m.def(
      "project_orthogonal",
      [](const std::vector<double>& strong, const std::vector<double>& weak) {
        return cagp::project_orthogonal(strong, weak);
      },
      py::arg("strong"), py::arg("weak"));
  m.def(
      "apply_cagp",
      [](const std::vector<double>& g_c, const std::vector<double>& g_d, double gamma) {
        const auto o = cagp::apply_cagp(g_c, g_d, gamma);
        py::dict d;
        d["conflict"] = o.conflict;
        d["projected_task"] = std::string(cagp::to_string(o.projected_task));
        d["classification"] = o.classification;
        d["domain"] = o.domain;
        d["total"] = o.total;
        return d;
      },
      py::arg("g_c"), py::arg("g_d"), py::arg("gamma"));
  m.def(
      "predicted_loss_change",
      [](const std::vector<double>& g_c, const std::vector<double>& g_d, double eta) {
        return predicted_loss_change(g_c, g_d, eta);
      },
      py::arg("g_c"), py::arg("g_d"), py::arg("eta"));

  // Configuration, data and runs.
  m.def("canonical_config", [](const std::string& text) { return to_config_text(parse_config(text)); },
        py::arg("text"));
  m.def(
      "generate_splits",
      [](const std::string& config_text) {
        const auto splits = make_splits(parse_config(config_text));
        py::dict d;
        d["train"] = batch_dict(splits.train);
        d["source_val"] = batch_dict(splits.source_val);
        d["target_test"] = batch_dict(splits.target_test);
        d["hash"] = synth::hash_splits(splits);
        return d;
      },
      py::arg("config_text"));
  m.def(
      "run_experiment",
      [](const std::string& config_text, py::object strategy) {
        auto cfg = parse_config(config_text);
        if (!strategy.is_none()) cfg.train.strategy = parse_strategy(strategy.cast<std::string>());
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg);
        }
        py::dict d = summary_dict(r.summary);
        py::list epochs;
        for (const auto& e : r.epochs) {
          py::dict row;
          row["epoch"] = e.epoch;
          row["source_val_acc"] = e.source_val_acc;
          row["target_acc"] = e.target_acc;
          row["branch_acc_v"] = e.branch_acc_v;
          row["branch_acc_a"] = e.branch_acc_a;
          epochs.append(row);
        }
        d["epochs"] = epochs;
        py::list rho;
        for (const auto& s : r.steps) rho.append(pair(s.rho));
        d["rho"] = rho;
        return d;
      },
      py::arg("config_text"), py::arg("strategy") = py::none());
  m.def(
      "grad_check",
      [](std::uint64_t seed, double tolerance) {
        gradcheck::GradCheckConfig cfg;
        cfg.seed = seed;
        cfg.tolerance = tolerance;
        gradcheck::GradCheckReport r;
        {
          py::gil_scoped_release release;
          r = gradcheck::run(cfg);
        }
        py::dict d;
        d["passed"] = r.passed;
        d["max_rel_error"] = r.max_rel_error;
        d["blocks"] = r.blocks.size();
        d["seconds"] = r.seconds;
        return d;
      },
      py::arg("seed") = 0, py::arg("tolerance") = 1e-4);
}
