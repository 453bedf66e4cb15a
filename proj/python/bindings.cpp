#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "commands.hpp"
#include "foagp/effects.hpp"
#include "foagp/error.hpp"
#include "foagp/fit.hpp"
#include "foagp/io.hpp"
#include "foagp/sensitivity.hpp"
#include "foagp/simulators.hpp"

namespace py = pybind11;
using namespace foagp;

namespace {

Example example_from(int which) {
  if (which == 1) return Example::Example1;
  if (which == 2) return Example::Example2;
  throw Error(ErrorKind::InvalidInput, "example must be 1 or 2");
}

FitConfig make_config(const std::string& output_kernel, double period, int restarts,
                      std::uint64_t seed, const std::string& optimizer, bool force_dense,
                      int threads) {
  FitConfig cfg;
  cfg.output_family = parse_family(output_kernel);
  cfg.period = period;
  cfg.restarts = restarts;
  cfg.seed = seed;
  if (optimizer == "lbfgs") {
    cfg.optimizer = OptimizerKind::Lbfgs;
  } else if (optimizer == "simplex") {
    cfg.optimizer = OptimizerKind::Simplex;
  } else {
    throw Error(ErrorKind::InvalidInput, "optimizer must be lbfgs or simplex");
  }
  cfg.force_dense = force_dense;
  cfg.threads = threads;
  return cfg;
}

std::vector<EffectIndex> subsets_from(const FittedModel& m, const std::vector<std::string>& names) {
  std::vector<EffectIndex> out;
  for (const auto& n : names) out.push_back(EffectIndex::parse(n, m.dims()));
  return out;
}

py::dict named(const std::vector<EffectIndex>& subsets, const Eigen::VectorXd& values,
               Eigen::Index dims) {
  py::dict d;
  for (std::size_t k = 0; k < subsets.size(); ++k) {
    d[py::str(subsets[k].name(dims))] = values[static_cast<Eigen::Index>(k)];
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Functional-output orthogonal additive Gaussian processes";

  static py::exception<Error> error_type(mod, "FoagpError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error_type, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::class_<Dataset>(mod, "Dataset")
      .def(py::init([](Eigen::MatrixXd X, Eigen::VectorXd T, Eigen::VectorXd y) {
             Dataset d{std::move(X), std::move(T), std::move(y)};
             d.validate();
             return d;
           }),
           py::arg("X"), py::arg("T"), py::arg("y"))
      .def_readonly("X", &Dataset::X)
      .def_readonly("T", &Dataset::T)
      .def_readonly("y", &Dataset::y)
      .def("__len__", [](const Dataset& d) { return d.size(); });

  py::class_<GridDataset>(mod, "GridDataset")
      .def(py::init([](Eigen::MatrixXd chi, Eigen::VectorXd tau, Eigen::MatrixXd Y) {
             GridDataset g{std::move(chi), std::move(tau), std::move(Y)};
             g.validate();
             return g;
           }),
           py::arg("chi"), py::arg("tau"), py::arg("Y"))
      .def_readonly("chi", &GridDataset::chi)
      .def_readonly("tau", &GridDataset::tau)
      .def_readonly("Y", &GridDataset::Y)
      .def("flatten", [](const GridDataset& g) { return flatten(g); });

  mod.def(
      "simulate",
      [](int example, Eigen::Index n, std::optional<double> noise, std::uint64_t seed) {
        SimSpec spec;
        spec.example = example_from(example);
        spec.n_samples = n;
        spec.noise_sd = noise;
        spec.seed = seed;
        return split_train_test(gen_example(spec));
      },
      py::arg("example"), py::arg("n") = 2000, py::arg("noise") = py::none(), py::arg("seed") = 0,
      "Simulated example split into (train, test).");

  mod.def(
      "simulate_grid",
      [](Eigen::Index m, Eigen::Index n, Eigen::Index d, std::optional<double> noise,
         std::uint64_t seed) {
        SimSpec spec;
        spec.example = Example::SyntheticGrid;
        spec.m = m;
        spec.n = n;
        spec.dims = d;
        spec.noise_sd = noise;
        spec.seed = seed;
        return gen_grid(spec);
      },
      py::arg("m") = 50, py::arg("n") = 100, py::arg("d") = 2, py::arg("noise") = py::none(),
      py::arg("seed") = 0);

  py::class_<FittedModel>(mod, "Model")
      .def_property_readonly("dims", &FittedModel::dims)
      .def_property_readonly("size", &FittedModel::size)
      .def_property_readonly("is_grid", &FittedModel::is_grid)
      .def_property_readonly("delta", [](const FittedModel& m) { return m.params().delta; })
      .def_property_readonly("theta", [](const FittedModel& m) { return m.params().theta; })
      .def_property_readonly("sigma2", [](const FittedModel& m) { return m.params().sigma2; })
      .def_property_readonly("gamma", &FittedModel::gamma)
      .def_property_readonly("y_mean", &FittedModel::y_mean)
      .def_property_readonly("objective", &FittedModel::objective)
      .def(
          "predict",
          [](const FittedModel& m, const Eigen::MatrixXd& X, const Eigen::VectorXd& T) {
            if (X.rows() != T.size() || X.cols() != m.dims()) {
              throw Error(ErrorKind::Shape, "X must be len(T) x dims");
            }
            Eigen::VectorXd out(T.size());
            for (Eigen::Index r = 0; r < T.size(); ++r) out[r] = predict(m, X.row(r).transpose(), T[r]);
            return out;
          },
          py::arg("X"), py::arg("T"))
      .def(
          "predict_effect",
          [](const FittedModel& m, const std::string& name, const Eigen::MatrixXd& X,
             const Eigen::VectorXd& T) {
            if (X.rows() != T.size() || X.cols() != m.dims()) {
              throw Error(ErrorKind::Shape, "X must be len(T) x dims");
            }
            const EffectIndex u = EffectIndex::parse(name, m.dims());
            Eigen::VectorXd out(T.size());
            for (Eigen::Index r = 0; r < T.size(); ++r) {
              out[r] = predict_effect(m, u, X.row(r).transpose(), T[r]);
            }
            return out;
          },
          py::arg("name"), py::arg("X"), py::arg("T"))
      .def(
          "decompose",
          [](const FittedModel& m, const Eigen::MatrixXd& X, const Eigen::VectorXd& T,
             std::optional<int> max_order) {
            const EffectTable t =
                decompose(m, X, T, max_order.value_or(static_cast<int>(m.dims())));
            py::dict d;
            const auto names = t.names();
            for (std::size_t k = 0; k < names.size(); ++k) {
              d[py::str(names[k])] = Eigen::VectorXd(t.values.col(static_cast<Eigen::Index>(k)));
            }
            d["total"] = t.total;
            return d;
          },
          py::arg("X"), py::arg("T"), py::arg("max_order") = py::none(),
          "Effect values per subset name plus 'total'.")
      .def(
          "ecv",
          [](const FittedModel& m, std::optional<int> max_order) {
            const EcvIndices e = ecv_indices(m, max_order.value_or(default_max_order(m.dims())));
            return named(e.subsets, e.values, m.dims());
          },
          py::arg("max_order") = py::none())
      .def(
          "local_variance",
          [](const FittedModel& m, const std::string& name, const Eigen::VectorXd& t) {
            return VarianceEngine(m).local_variance_curve(EffectIndex::parse(name, m.dims()), t);
          },
          py::arg("name"), py::arg("t"))
      .def(
          "global_variance",
          [](const FittedModel& m, const std::string& name) {
            return global_variance(m, EffectIndex::parse(name, m.dims()));
          },
          py::arg("name"))
      .def(
          "local_sobol",
          [](const FittedModel& m, const Eigen::VectorXd& t, std::optional<int> max_order) {
            const LocalSobol s = local_sobol(m, max_order.value_or(default_max_order(m.dims())), t);
            py::dict d;
            for (std::size_t k = 0; k < s.subsets.size(); ++k) {
              d[py::str(s.subsets[k].name(m.dims()))] =
                  Eigen::VectorXd(s.values.col(static_cast<Eigen::Index>(k)));
            }
            return d;
          },
          py::arg("t"), py::arg("max_order") = py::none())
      .def("save", [](const FittedModel& m, const std::string& path) { save_model(path, m); },
           py::arg("path"))
      .def_static("load", &load_model, py::arg("path"));

  mod.def(
      "fit",
      [](const Dataset& data, const std::string& output_kernel, double period, int restarts,
         std::uint64_t seed, const std::string& optimizer, int threads) {
        const FitConfig cfg =
            make_config(output_kernel, period, restarts, seed, optimizer, false, threads);
        py::gil_scoped_release release;
        return fit(data, cfg);
      },
      py::arg("data"), py::arg("output_kernel") = "se", py::arg("period") = 1.0,
      py::arg("restarts") = 8, py::arg("seed") = 0, py::arg("optimizer") = "lbfgs",
      py::arg("threads") = 0);

  mod.def(
      "fit_grid",
      [](const GridDataset& grid, const std::string& output_kernel, double period, int restarts,
         std::uint64_t seed, const std::string& optimizer, bool force_dense, int threads) {
        const FitConfig cfg =
            make_config(output_kernel, period, restarts, seed, optimizer, force_dense, threads);
        py::gil_scoped_release release;
        return fit(grid, cfg);
      },
      py::arg("grid"), py::arg("output_kernel") = "se", py::arg("period") = 1.0,
      py::arg("restarts") = 8, py::arg("seed") = 0, py::arg("optimizer") = "lbfgs",
      py::arg("force_dense") = false, py::arg("threads") = 0);

  mod.def(
      "truth",
      [](int example) {
        const TruthBundle t = theoretical_truth(example_from(example));
        py::dict d;
        d["ecv_reported"] = named(t.subsets, t.ecv_reported, 2);
        d["ecv_computed"] = named(t.subsets, t.ecv_computed, 2);
        d["t_grid"] = t.t_grid;
        d["local_variance"] = t.local_variance;
        d["mean_effect"] = Eigen::VectorXd(t.mean_effect.col(0));
        return d;
      },
      py::arg("example"));

  mod.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a tool subcommand in-process; returns (status, stdout, stderr).");
}
