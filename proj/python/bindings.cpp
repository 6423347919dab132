#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pathweaver/experiment.hpp"
#include "pathweaver/graphops.hpp"
#include "pathweaver/oracle.hpp"
#include "pathweaver/regularizers.hpp"
#include "pathweaver/rnn.hpp"

namespace py = pybind11;
using namespace pathweaver;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Matrix from_numpy(const Array& a) {
  if (a.ndim() == 1) {
    const auto n = static_cast<std::size_t>(a.shape(0));
    return Matrix(n, 1, std::vector<double>(a.data(), a.data() + n));
  }
  if (a.ndim() != 2) throw ContractViolation("expected a 1-d or 2-d array");
  const auto r = static_cast<std::size_t>(a.shape(0));
  const auto c = static_cast<std::size_t>(a.shape(1));
  return Matrix(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

py::dict dataset_dict(const Dataset& d) {
  Array x({d.samples, d.seq_len, d.features});
  std::copy(d.inputs.begin(), d.inputs.end(), x.mutable_data());
  py::dict out;
  out["inputs"] = x;
  out["targets"] = to_numpy(d.targets);
  out["train"] = d.split.train;
  out["val"] = d.split.val;
  out["test"] = d.split.test;
  return out;
}

py::object json_to_py(const Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

RnnParams grad_of(const RegTerm& r) { return r.gradient; }

}  // namespace

PYBIND11_MODULE(_pathweaver, m) {
  m.doc() = "Multi-hop path analysis and regularisation of modular recurrent networks.";

  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UndefinedCorrelation>(m, "UndefinedCorrelation", PyExc_ArithmeticError);
  py::register_exception<UnsupportedTask>(m, "UnsupportedTask", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<TrainingDiverged>(m, "TrainingDiverged", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  py::enum_<TaskKind>(m, "TaskKind")
      .value("module_averaging", TaskKind::ModuleAveraging)
      .value("subtraction", TaskKind::Subtraction)
      .value("addition", TaskKind::Addition)
      .value("multiplication", TaskKind::Multiplication)
      .value("on_off_averaging", TaskKind::OnOffAveraging);

  py::enum_<RegKind>(m, "RegKind")
      .value("none", RegKind::None)
      .value("l1", RegKind::L1Whh)
      .value("resolvent", RegKind::ResolventIO);

  py::class_<TaskSpec>(m, "TaskSpec")
      .def(py::init<>())
      .def_readwrite("kind", &TaskSpec::kind)
      .def_readwrite("modules", &TaskSpec::modules)
      .def_readwrite("features", &TaskSpec::features)
      .def_readwrite("seq_len", &TaskSpec::seq_len)
      .def_readwrite("samples", &TaskSpec::samples)
      .def_readwrite("sigma_mu", &TaskSpec::sigma_mu)
      .def_readwrite("sigma_eps", &TaskSpec::sigma_eps)
      .def_readwrite("seed", &TaskSpec::seed)
      .def_property_readonly("features_all", &TaskSpec::features_all)
      .def("validate", &TaskSpec::validate);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("beta", &TrainConfig::beta)
      .def_readwrite("reg", &TrainConfig::reg)
      .def_readwrite("alpha", &TrainConfig::alpha)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("hidden", &TrainConfig::hidden);

  py::class_<RnnParams>(m, "RnnParams")
      .def(py::init([](const Array& w_ih, const Array& w_hh, const Array& w_ho, const Array& b_h,
                       const Array& b_o) {
             RnnParams p{from_numpy(w_ih), from_numpy(w_hh), from_numpy(w_ho), from_numpy(b_h),
                         from_numpy(b_o)};
             p.check_shapes();
             return p;
           }),
           py::arg("w_ih"), py::arg("w_hh"), py::arg("w_ho"), py::arg("b_h"), py::arg("b_o"))
      .def_property_readonly("w_ih", [](const RnnParams& p) { return to_numpy(p.w_ih); })
      .def_property_readonly("w_hh", [](const RnnParams& p) { return to_numpy(p.w_hh); })
      .def_property_readonly("w_ho", [](const RnnParams& p) { return to_numpy(p.w_ho); })
      .def_property_readonly("b_h", [](const RnnParams& p) { return to_numpy(p.b_h); })
      .def_property_readonly("b_o", [](const RnnParams& p) { return to_numpy(p.b_o); })
      .def_property_readonly("shape", [](const RnnParams& p) {
        return py::make_tuple(p.inputs(), p.hidden(), p.outputs());
      });

  m.def("init_params", &init_params, py::arg("seed"), py::arg("inputs"), py::arg("hidden"),
        py::arg("outputs"));

  // numerics
  m.def("spectral_radius", [](const Array& a) { return spectral_radius(from_numpy(a)); });
  m.def("pearson", [](const Array& a, const Array& b) {
    return pearson(from_numpy(a), from_numpy(b));
  });
  m.def("matpow", [](const Array& a, int k) { return to_numpy(matpow(from_numpy(a), k)); });

  // tasks and oracle
  m.def("generate", [](const TaskSpec& s) { return dataset_dict(make_dataset(s)); },
        "Generates and splits a dataset; inputs have shape (samples, seq_len, features).");
  m.def("structure_matrices", [](std::size_t modules) {
    const StructureMatrices s = structure_matrices(modules);
    return py::make_tuple(to_numpy(s.g_mod), to_numpy(s.g_add), to_numpy(s.a_sub),
                          to_numpy(s.a_add));
  });
  m.def("design_matrix", [](const TaskSpec& s) { return to_numpy(design_matrix(s)); });
  m.def("optimal_map", [](const TaskSpec& s) { return to_numpy(optimal_map(s).weights); },
        "Optimal input x output feature map.");

  // training
  m.def(
      "forward",
      [](const RnnParams& p, const Array& x) {
        if (x.ndim() != 3) throw ContractViolation("forward: inputs must be (batch, seq_len, features)");
        SequenceBatch b;
        b.batch = static_cast<std::size_t>(x.shape(0));
        b.seq_len = static_cast<std::size_t>(x.shape(1));
        b.features = static_cast<std::size_t>(x.shape(2));
        b.inputs.assign(x.data(), x.data() + x.size());
        b.targets = Matrix(b.batch, p.outputs());
        return to_numpy(forward(p, b).outputs);
      },
      py::arg("params"), py::arg("inputs"));
  m.def(
      "train",
      [](const TaskSpec& spec, const TrainConfig& cfg) {
        RunResult r;
        {
          py::gil_scoped_release release;
          r = train(spec, cfg);
        }
        py::dict out;
        out["train_loss"] = r.train_loss;
        out["val_loss"] = r.val_loss;
        out["test_loss"] = r.test_loss;
        out["sparsity"] = r.sparsity;
        out["initial_params"] = r.initial_params;
        out["params"] = r.final_params;
        out["initial_val_mse"] = r.initial_val_mse;
        out["val_mse"] = r.final_val_mse;
        out["test_mse"] = r.final_test_mse;
        return out;
      },
      py::arg("spec"), py::arg("config"));

  // graph analysis
  m.def("assemble", [](const RnnParams& p) { return to_numpy(assemble(p).w); },
        "Whole-network adjacency; entry (u, v) is the weight of edge u -> v.");
  m.def(
      "hop_io",
      [](const RnnParams& p, int k, bool normalized) {
        AdjacencyGraph g = assemble(p);
        if (normalized) g = normalize(g);
        return to_numpy(hop_io(g, k).values);
      },
      py::arg("params"), py::arg("k"), py::arg("normalized") = true);
  m.def(
      "resolvent_io",
      [](const RnnParams& p, double alpha, int k_min, int k_max, bool normalized) {
        return to_numpy(resolvent_io(assemble(p), alpha, k_min, k_max, normalized).values);
      },
      py::arg("params"), py::arg("alpha") = 0.8, py::arg("k_min") = 2, py::arg("k_max") = 6,
      py::arg("normalized") = true);
  m.def(
      "communicability_io",
      [](const RnnParams& p, int terms) { return to_numpy(communicability_io(assemble(p), terms).values); },
      py::arg("params"), py::arg("terms") = 30);
  m.def(
      "block_contrast",
      [](const Array& map, std::size_t modules, std::size_t features) {
        return block_contrast(from_numpy(map), modules, features);
      },
      py::arg("map"), py::arg("modules"), py::arg("features"));
  m.def(
      "hop_magnitude_profile",
      [](const RnnParams& p, double alpha, int k_min, int k_max, bool normalized) {
        std::vector<std::pair<int, double>> out;
        for (const auto& h : hop_magnitude_profile(assemble(p), alpha, k_min, k_max, normalized))
          out.emplace_back(h.k, h.magnitude);
        return out;
      },
      py::arg("params"), py::arg("alpha") = 0.8, py::arg("k_min") = 1, py::arg("k_max") = 6,
      py::arg("normalized") = false);

  // regularisers
  m.def("l1_whh", [](const RnnParams& p) {
    const RegTerm r = l1_whh(p);
    return py::make_tuple(r.value, grad_of(r));
  });
  m.def(
      "resolvent_penalty",
      [](const RnnParams& p, double alpha, std::size_t seq_len) {
        const RegTerm r = resolvent_penalty(p, alpha, seq_len);
        return py::make_tuple(r.value, grad_of(r));
      },
      py::arg("params"), py::arg("alpha") = 0.8, py::arg("seq_len") = 5);

  // experiments
  m.def("parse_config", [](const std::string& text, const std::string& experiment) {
    return json_to_py(config_to_json(parse_config(text, experiment)));
  });
  const auto runner = [](AggregateReport (*fn)(const ExperimentConfig&, const std::filesystem::path&),
                         const char* name) {
    return [fn, name](const std::string& config_json, const std::filesystem::path& out) {
      const ExperimentConfig c = parse_config(config_json, name);
      AggregateReport r;
      {
        py::gil_scoped_release release;
        r = fn(c, out);
      }
      return json_to_py(r.to_json());
    };
  };
  m.def("run_fig3", runner(&run_fig3, "fig3"), py::arg("config_json") = "",
        py::arg("out") = std::filesystem::path());
  m.def("run_fig4", runner(&run_fig4, "fig4"), py::arg("config_json") = "",
        py::arg("out") = std::filesystem::path());
  m.def("run_fig5", runner(&run_fig5, "fig5"), py::arg("config_json") = "",
        py::arg("out") = std::filesystem::path());
  m.def(
      "run_single",
      [](const std::string& config_json, const std::filesystem::path& out) {
        const ExperimentConfig c = parse_config(config_json, "single");
        SingleResult r;
        {
          py::gil_scoped_release release;
          r = run_single(c, out);
        }
        return json_to_py(r.analysis);
      },
      py::arg("config_json") = "", py::arg("out") = std::filesystem::path());
}
