#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fsagp/config.hpp"
#include "fsagp/error.hpp"
#include "fsagp/pipeline.hpp"
#include "fsagp/simulation.hpp"

namespace py = pybind11;
using namespace fsagp;

namespace {

LocationSet sites_from(const Eigen::MatrixXd& xy, Metric metric) {
  if (xy.cols() != 2) throw DomainError("sites must be an n x 2 array");
  std::vector<Point> pts(static_cast<std::size_t>(xy.rows()));
  for (Eigen::Index i = 0; i < xy.rows(); ++i) pts[static_cast<std::size_t>(i)] = {xy(i, 0), xy(i, 1)};
  return LocationSet(std::move(pts), metric);
}

Eigen::MatrixXd coords(const LocationSet& s) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(s.size()), 2);
  for (std::size_t i = 0; i < s.size(); ++i) out.row(static_cast<Eigen::Index>(i)) << s[i].x, s[i].y;
  return out;
}

py::dict dataset_dict(const SpatialDataset& d) {
  py::dict out;
  out["sites"] = coords(d.sites);
  out["Y"] = d.Y;
  return out;
}

SpatialDataset prepared(const ModelConfig& cfg, const Eigen::MatrixXd& xy, const Eigen::MatrixXd& Y) {
  SpatialDataset d;
  d.sites = sites_from(xy, cfg.metric);
  d.Y = Y;
  attach_covariates(cfg, d);
  return d;
}

/// Factored data covariance for one model config over fixed sites.
class PyWorkspace {
 public:
  PyWorkspace(const std::string& config, const Eigen::MatrixXd& xy) {
    const ModelConfig cfg = parse_model_config(json::parse(config));
    SpatialDataset d = prepared(cfg, xy, Eigen::MatrixXd::Zero(xy.rows(), static_cast<Eigen::Index>(cfg.lmc.R)));
    const Scheme scheme = build_scheme(cfg.scheme.scheme, d.sites, cfg.seed);
    const Eigen::MatrixXd xa_knots =
        cfg.lmc.varying() ? knot_covariates(std::get<VaryingTransform>(cfg.lmc.transform).covariates, scheme.knots,
                                            d.sites, d.aux)
                          : Eigen::MatrixXd();
    ws_ = std::make_unique<LikelihoodWorkspace>(data_cov(scheme, {cfg.lmc, cfg.nugget}, d.sites, d.XA, xa_knots,
                                                         cfg.mcmc.factor));
  }

  double quad_form(const Eigen::VectorXd& v) const { return ws_->quad_form(v); }
  double logdet() const { return ws_->logdet(); }
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const { return ws_->solve(v); }
  Eigen::MatrixXd dense() const { return ws_->reconstruct_dense(); }
  std::size_t dim() const { return ws_->layout().dim(); }

 private:
  std::unique_ptr<LikelihoodWorkspace> ws_;
};

}  // namespace

PYBIND11_MODULE(_fsagp, m) {
  m.doc() = "Multivariate spatial GP fitting with full-scale covariance approximations.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

  m.def(
      "chordal_distance",
      [](double lat1, double lon1, double lat2, double lon2) { return chordal_distance({lat1, lon1}, {lat2, lon2}); },
      py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"));

  m.def(
      "simulate",
      [](const std::string& scenario) {
        const auto data = simulate_lmc(parse_scenario(json::parse(scenario)));
        py::dict out;
        out["train"] = dataset_dict(data.train);
        out["test_random"] = dataset_dict(data.test_random);
        out["test_hole"] = dataset_dict(data.test_hole);
        return out;
      },
      py::arg("scenario") = "{}", "Simulate train and test sets from a scenario JSON string.");

  m.def(
      "fit",
      [](const std::string& config, const Eigen::MatrixXd& sites, const Eigen::MatrixXd& Y) {
        const ModelConfig cfg = parse_model_config(json::parse(config));
        FitOutcome res;
        {
          py::gil_scoped_release release;
          res = fit(prepare_fit(cfg, prepared(cfg, sites, Y)));
        }
        py::dict out;
        out["names"] = res.chain.names;
        out["samples"] = res.chain.samples;
        out["loglik"] = res.chain.loglik_trace;
        out["acceptance_rates"] = res.chain.acceptance_rates;
        out["dic"] = res.dic.dic;
        out["p_d"] = res.dic.p_d;
        return out;
      },
      py::arg("config"), py::arg("sites"), py::arg("Y"), "Run MCMC for a model config JSON string.");

  m.def(
      "plugin_mspe",
      [](const std::string& scenario, const std::string& scheme) {
        const auto s = parse_scenario(json::parse(scenario));
        const auto rows = benchmark_mspe_time(s, {parse_scheme_config(json::parse(scheme))});
        return py::make_tuple(rows.front().mspe, rows.front().seconds);
      },
      py::arg("scenario"), py::arg("scheme"),
      "Plug-in BLUP MSPE on the hole design and wall time for one scheme config.");

  py::class_<PyWorkspace>(m, "Workspace")
      .def(py::init<const std::string&, const Eigen::MatrixXd&>(), py::arg("config"), py::arg("sites"))
      .def("quad_form", &PyWorkspace::quad_form)
      .def("logdet", &PyWorkspace::logdet)
      .def("solve", &PyWorkspace::solve)
      .def("dense", &PyWorkspace::dense)
      .def_property_readonly("dim", &PyWorkspace::dim);
}
