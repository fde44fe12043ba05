#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "fedsense/channel.hpp"
#include "fedsense/checkpoint.hpp"
#include "fedsense/dataset.hpp"
#include "fedsense/error.hpp"
#include "fedsense/federated.hpp"
#include "fedsense/geometry.hpp"
#include "fedsense/harness.hpp"
#include "fedsense/training.hpp"
#include "fedsense/waveform.hpp"

namespace py = pybind11;
using namespace fedsense;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

SimulationConfig to_config(const py::object& cfg) {
  if (cfg.is_none()) return SimulationConfig{};
  return cfg.cast<SimulationConfig>();
}

// Examples as (x[count, 2, M], labels[count]).
py::tuple examples_to_numpy(const std::vector<dataset::Example>& ex) {
  const std::size_t m = ex.empty() ? 0 : ex.front().length();
  py::array_t<float> x({ex.size(), std::size_t{2}, m});
  py::array_t<std::uint8_t> y(ex.size());
  auto xm = x.mutable_unchecked<3>();
  auto ym = y.mutable_unchecked<1>();
  for (std::size_t i = 0; i < ex.size(); ++i) {
    std::memcpy(xm.mutable_data(i, 0, 0), ex[i].x.data(), ex[i].x.size() * sizeof(float));
    ym(i) = ex[i].label;
  }
  return py::make_tuple(x, y);
}

std::vector<dataset::Example> numpy_to_examples(const FloatArray& x,
                                                const py::array_t<std::uint8_t>& y) {
  if (x.ndim() != 3 || x.shape(1) != 2) {
    throw ShapeMismatch("expected x with shape (count, 2, M)");
  }
  const auto count = static_cast<std::size_t>(x.shape(0));
  const auto m = static_cast<std::size_t>(x.shape(2));
  if (static_cast<std::size_t>(y.size()) != count) {
    throw ShapeMismatch("one label per example is required");
  }
  std::vector<dataset::Example> out(count);
  const float* src = x.data();
  for (std::size_t i = 0; i < count; ++i) {
    out[i].x.assign(src + i * 2 * m, src + (i + 1) * 2 * m);
    out[i].label = y.data()[i];
  }
  return out;
}

py::dict weights_to_dict(const nn::ModelWeights& w) {
  py::dict d;
  for (std::size_t t = 0; t < nn::kParamCount; ++t) {
    const auto& info = nn::param_info(t);
    std::vector<py::ssize_t> shape(info.shape.begin(), info.shape.begin() + info.rank);
    py::array_t<float> a(shape);
    std::memcpy(a.mutable_data(), w.tensors[t].data(), w.tensors[t].size() * sizeof(float));
    d[py::str(std::string(info.name))] = a;
  }
  return d;
}

nn::ModelWeights dict_to_weights(const py::dict& d, std::size_t signal_length) {
  auto w = nn::ModelWeights::zeros(signal_length);
  for (std::size_t t = 0; t < nn::kParamCount; ++t) {
    const std::string name(nn::param_info(t).name);
    if (!d.contains(name)) throw ShapeMismatch("missing tensor " + name);
    const auto a = d[py::str(name)].cast<FloatArray>();
    if (static_cast<std::size_t>(a.size()) != w.tensors[t].size()) {
      throw ShapeMismatch("tensor " + name + " has the wrong size");
    }
    std::memcpy(w.tensors[t].data(), a.data(), w.tensors[t].size() * sizeof(float));
  }
  return w;
}

py::dict round_to_dict(const federated::RoundResult& r) {
  py::dict d;
  d["round"] = r.round;
  d["aggregator"] = std::string(to_string(r.aggregator));
  d["accuracies"] = r.accuracies;
  d["mean_accuracy"] = r.mean_accuracy;
  d["snr_db"] = r.snr_db;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Federated spectrum sensing simulator";

  auto base = py::register_exception<Error>(m, "FedsenseError");
  py::register_exception<PackingFailure>(m, "PackingFailure", base);
  py::register_exception<DegenerateGeometry>(m, "DegenerateGeometry", base);
  py::register_exception<InvalidDistance>(m, "InvalidDistance", base);
  py::register_exception<NegativeStd>(m, "NegativeStd", base);
  py::register_exception<LengthMismatch>(m, "LengthMismatch", base);
  py::register_exception<InvalidWaveform>(m, "InvalidWaveform", base);
  py::register_exception<EmptyDataset>(m, "EmptyDataset", base);
  py::register_exception<InvalidLength>(m, "InvalidLength", base);
  py::register_exception<ShapeMismatch>(m, "ShapeMismatch", base);
  py::register_exception<EmptyUpdateSet>(m, "EmptyUpdateSet", base);
  py::register_exception<NonPositiveSnr>(m, "NonPositiveSnr", base);
  py::register_exception<ValidationError>(m, "ValidationError", base);
  py::register_exception<IoError>(m, "IoError", base);
  py::register_exception<ParseError>(m, "ParseError", base);

  py::class_<SimulationConfig>(m, "SimulationConfig")
      .def(py::init<>())
      .def_static("desk_scale", &SimulationConfig::desk_scale)
      .def_static("parse", [](const std::string& text) { return harness::parse_config(text); })
      .def_static("load", [](const std::string& path) { return harness::load_config(path); })
      .def("serialize", &harness::serialize_config)
      .def("validate", &SimulationConfig::validate)
      .def_readwrite("settings", &SimulationConfig::settings)
      .def_readwrite("num_uavs", &SimulationConfig::num_uavs)
      .def_readwrite("seed", &SimulationConfig::seed)
      .def_readwrite("workers", &SimulationConfig::workers)
      .def_readwrite("d_min", &SimulationConfig::d_min)
      .def_property(
          "data_per_uav", [](const SimulationConfig& c) { return c.data.data_per_uav; },
          [](SimulationConfig& c, std::size_t v) { c.data.data_per_uav = v; })
      .def_property(
          "ptx_dbm", [](const SimulationConfig& c) { return c.radio.ptx_dbm; },
          [](SimulationConfig& c, double v) { c.radio.ptx_dbm = v; })
      .def_property(
          "k_rician", [](const SimulationConfig& c) { return c.radio.k_rician; },
          [](SimulationConfig& c, double v) { c.radio.k_rician = v; })
      .def_property(
          "m_samples", [](const SimulationConfig& c) { return c.radio.m_samples; },
          [](SimulationConfig& c, std::size_t v) { c.radio.m_samples = v; })
      .def_property(
          "fs_hz", [](const SimulationConfig& c) { return c.radio.fs_hz; },
          [](SimulationConfig& c, double v) { c.radio.fs_hz = v; })
      .def_property(
          "max_epochs", [](const SimulationConfig& c) { return c.train.max_epochs; },
          [](SimulationConfig& c, std::size_t v) { c.train.max_epochs = v; })
      .def_property(
          "aggregator", [](const SimulationConfig& c) { return std::string(to_string(c.aggregator)); },
          [](SimulationConfig& c, const std::string& v) { c.aggregator = parse_aggregator(v); })
      .def("__eq__", [](const SimulationConfig& a, const SimulationConfig& b) { return a == b; })
      .def("__repr__", [](const SimulationConfig& c) {
        return "<SimulationConfig N=" + std::to_string(c.num_uavs) +
               " B=" + std::to_string(c.data.data_per_uav) +
               " M=" + std::to_string(c.radio.m_samples) +
               " settings=" + std::to_string(c.settings) + ">";
      });

  // geometry
  m.def(
      "sample_uav_positions",
      [](std::size_t n, double d_min, double x_max, double y_max, double z_max,
         std::uint64_t seed) {
        Rng rng(seed);
        const auto pts = geometry::sample_uav_positions(n, d_min, {x_max, y_max, z_max}, rng);
        py::array_t<double> out({pts.size(), std::size_t{3}});
        auto a = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < pts.size(); ++i) {
          a(i, 0) = pts[i].x;
          a(i, 1) = pts[i].y;
          a(i, 2) = pts[i].z;
        }
        return out;
      },
      py::arg("n"), py::arg("d_min"), py::arg("x_max") = 5000.0, py::arg("y_max") = 5000.0,
      py::arg("z_max") = 120.0, py::arg("seed") = 1,
      "Matern hardcore UAV positions as an (n, 3) array.");

  // channel
  m.def(
      "mean_path_loss_db",
      [](double d, double theta) { return channel::mean_path_loss_db(d, theta, {}); },
      py::arg("d"), py::arg("theta_deg"));
  m.def(
      "rician_fading",
      [](double k, std::size_t count, std::uint64_t seed) {
        Rng rng(seed);
        py::array_t<std::complex<double>> out(count);
        auto a = out.mutable_unchecked<1>();
        for (std::size_t i = 0; i < count; ++i) a(i) = channel::rician_fading(k, rng);
        return out;
      },
      py::arg("k"), py::arg("count"), py::arg("seed") = 1);
  m.def(
      "snr",
      [](double ptx_dbm, double pl_db, double n0_dbm) {
        const auto r = channel::snr(ptx_dbm, pl_db, n0_dbm);
        return py::make_tuple(r.rx_power_w, r.snr_linear);
      },
      py::arg("ptx_dbm"), py::arg("pl_db"), py::arg("n0_dbm") = -93.0,
      "(received power in W, linear SNR)");

  // waveform
  m.def(
      "random_waveform",
      [](std::size_t m_samples, double fs_hz, std::uint64_t seed) {
        Rng rng(seed);
        const auto spec = waveform::random_spec(rng, m_samples, fs_hz);
        const auto s = waveform::synthesize(spec, m_samples, fs_hz);
        return py::make_tuple(std::string(waveform::to_string(spec.kind)),
                              py::array_t<std::complex<double>>(s.size(), s.data()));
      },
      py::arg("m_samples"), py::arg("fs_hz"), py::arg("seed") = 1,
      "(kind name, unit-power complex samples)");

  // dataset
  m.def(
      "client_dataset",
      [](const py::object& cfg_obj, std::size_t setting, std::size_t uav) {
        const auto cfg = to_config(cfg_obj);
        cfg.validate();
        const federated::Streams streams(cfg.seed);
        const auto scene = dataset::make_scene(cfg, streams.setting(setting));
        const auto ds = dataset::make_client_dataset(scene, uav, cfg, streams.data(setting, uav));
        py::dict d;
        d["train"] = examples_to_numpy(ds.train);
        d["test"] = examples_to_numpy(ds.test);
        d["snr_linear"] = ds.snr_linear;
        return d;
      },
      py::arg("cfg") = py::none(), py::arg("setting") = 0, py::arg("uav") = 0,
      "Training and held-out windows of one UAV in one setting.");

  // neural network
  py::class_<nn::ModelWeights>(m, "ModelWeights")
      .def_readonly("signal_length", &nn::ModelWeights::signal_length)
      .def("learnable_count", &nn::ModelWeights::learnable_count)
      .def("to_dict", &weights_to_dict)
      .def_static("from_dict", &dict_to_weights, py::arg("tensors"), py::arg("signal_length"))
      .def("save", [](const nn::ModelWeights& w, const std::string& p) { nn::save_checkpoint(p, w); })
      .def_static("load", [](const std::string& p) { return nn::load_checkpoint(p); })
      .def("__eq__", [](const nn::ModelWeights& a, const nn::ModelWeights& b) { return a == b; });

  m.def(
      "init_model",
      [](std::size_t m_samples, std::uint64_t seed) {
        Rng rng(seed);
        return nn::init_model(m_samples, rng);
      },
      py::arg("m_samples"), py::arg("seed") = 1);
  m.def(
      "predict",
      [](const nn::ModelWeights& w, const FloatArray& x) {
        std::vector<py::ssize_t> shape = {x.shape(0)};
        const auto ex = numpy_to_examples(x, py::array_t<std::uint8_t>(shape));
        const auto p = nn::predict(w, ex);
        return py::array_t<float>(p.size(), p.data());
      },
      py::arg("weights"), py::arg("x"));
  m.def(
      "evaluate",
      [](const nn::ModelWeights& w, const FloatArray& x, const py::array_t<std::uint8_t>& y) {
        return nn::evaluate(w, numpy_to_examples(x, y));
      },
      py::arg("weights"), py::arg("x"), py::arg("labels"));
  m.def(
      "train_local",
      [](const nn::ModelWeights& w0, const FloatArray& x, const py::array_t<std::uint8_t>& y,
         std::uint64_t seed, std::size_t max_epochs) {
        const auto ex = numpy_to_examples(x, y);
        nn::TrainConfig hp;
        hp.max_epochs = max_epochs;
        Rng rng(seed);
        py::gil_scoped_release release;
        auto [w, report] = nn::train_local(w0, ex, hp, rng);
        py::gil_scoped_acquire acquire;
        py::dict r;
        r["epochs_run"] = report.epochs_run;
        r["final_loss"] = report.final_loss;
        r["stopped_early"] = report.stopped_early;
        r["train_accuracy"] = report.train_accuracy;
        return py::make_tuple(w, r);
      },
      py::arg("weights"), py::arg("x"), py::arg("labels"), py::arg("seed") = 1,
      py::arg("max_epochs") = 20);
  m.def(
      "gradient_check",
      [](std::uint64_t seed, std::size_t signal_length) {
        nn::GradientCheckConfig gc;
        gc.seed = seed;
        gc.signal_length = signal_length;
        const auto r = nn::gradient_check(gc);
        py::dict d;
        d["checked"] = r.checked;
        d["failures"] = r.failures;
        d["max_relative_error"] = r.max_relative_error;
        d["passed"] = r.passed();
        return d;
      },
      py::arg("seed") = 1, py::arg("signal_length") = 32);

  // federated
  auto updates_from = [](const std::vector<nn::ModelWeights>& ws,
                         const std::vector<std::size_t>& n, const std::vector<double>& g) {
    if (ws.size() != n.size() || ws.size() != g.size()) {
      throw ShapeMismatch("weights, sample counts and SNRs must have equal length");
    }
    std::vector<federated::ClientUpdate> u(ws.size());
    for (std::size_t i = 0; i < ws.size(); ++i) u[i] = {ws[i], n[i], g[i]};
    return u;
  };
  m.def(
      "fed_avg",
      [updates_from](const std::vector<nn::ModelWeights>& ws, const std::vector<std::size_t>& n) {
        return federated::fed_avg(updates_from(ws, n, std::vector<double>(ws.size(), 1.0)));
      },
      py::arg("weights"), py::arg("sample_counts"));
  m.def(
      "fed_snr",
      [updates_from](const std::vector<nn::ModelWeights>& ws, const std::vector<double>& g) {
        return federated::fed_snr(updates_from(ws, std::vector<std::size_t>(ws.size(), 1), g));
      },
      py::arg("weights"), py::arg("snr_linear"));
  m.def(
      "run_experiment",
      [](const py::object& cfg_obj) {
        const auto cfg = to_config(cfg_obj);
        federated::ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = federated::run_experiment(cfg);
        }
        py::list rounds;
        for (const auto& round : r.rounds) rounds.append(round_to_dict(round));
        py::dict d;
        d["rounds"] = rounds;
        d["headline_accuracy"] = federated::headline_accuracy(r.rounds);
        d["global"] = r.global;
        return d;
      },
      py::arg("cfg"));
  m.def(
      "baseline_independent",
      [](const py::object& cfg_obj) {
        const auto cfg = to_config(cfg_obj);
        federated::BaselineResult r;
        {
          py::gil_scoped_release release;
          r = federated::baseline_independent(cfg);
        }
        py::dict d;
        d["accuracies"] = r.accuracies;
        d["mean_accuracy"] = r.mean_accuracy;
        return d;
      },
      py::arg("cfg"));

  // harness
  m.def(
      "sweep",
      [](const py::object& cfg_obj, const std::string& axis, const std::vector<double>& values,
         const std::vector<std::uint64_t>& seeds, const std::vector<std::string>& methods) {
        const auto cfg = to_config(cfg_obj);
        harness::SweepOptions opts;
        if (!methods.empty()) {
          opts.methods.clear();
          for (const auto& name : methods) opts.methods.push_back(harness::parse_method(name));
        }
        harness::SweepResult r;
        {
          py::gil_scoped_release release;
          r = harness::sweep(cfg, harness::parse_axis(axis), values, seeds, opts);
        }
        return harness::format_csv(r);
      },
      py::arg("cfg"), py::arg("axis"), py::arg("values"), py::arg("seeds"),
      py::arg("methods") = std::vector<std::string>{}, "Sweep and return the CSV text.");
  m.def(
      "summarize",
      [](const std::vector<double>& samples) {
        const auto s = harness::summarize(samples);
        return py::make_tuple(s.mean, s.ci95);
      },
      py::arg("samples"), "(mean, Student-t 95% half-width)");
  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv = {"fedsense"};
        for (const auto& a : args) argv.push_back(a.c_str());
        return harness::cli_main(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns its exit code.");
}
