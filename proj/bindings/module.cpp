#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>

#include "geofactor/common.hpp"
#include "geofactor/covariance.hpp"
#include "geofactor/inference.hpp"
#include "geofactor/io.hpp"
#include "geofactor/sampler.hpp"
#include "geofactor/simulate.hpp"

namespace py = pybind11;
namespace gf = geofactor;

namespace {

// NaN-coded responses from python land become the 0/1 + mask pair.
gf::Dataset make_dataset(const Eigen::MatrixXd& y,
                         const Eigen::MatrixXd& coords,
                         const Eigen::MatrixXd& x,
                         std::vector<std::string> item_names,
                         std::vector<std::string> covariate_names) {
  gf::Dataset d;
  const int n = static_cast<int>(y.rows());
  const int q = static_cast<int>(y.cols());
  d.y.resize(n, q);
  d.obs_mask.resize(n, q);
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < n; ++i) {
      if (std::isnan(y(i, j))) {
        d.y(i, j) = 0;
        d.obs_mask(i, j) = 0;
      } else {
        d.y(i, j) = y(i, j) != 0.0 ? 1 : 0;
        d.obs_mask(i, j) = 1;
      }
    }
  d.coords = coords;
  if (x.size() > 0) {
    const gf::Standardized st = gf::standardize_covariates(x);
    d.X = st.X;
    d.x_mean = st.mean;
    d.x_sd = st.sd;
  } else {
    d.X.resize(n, 0);
    d.x_mean.resize(0);
    d.x_sd.resize(0);
  }
  if (item_names.empty())
    for (int j = 0; j < q; ++j)
      item_names.push_back("item_" + std::to_string(j + 1));
  if (covariate_names.empty())
    for (int k = 0; k < d.p(); ++k)
      covariate_names.push_back("cov_" + std::to_string(k + 1));
  d.item_names = std::move(item_names);
  d.covariate_names = std::move(covariate_names);
  d.validate();
  return d;
}

}  // namespace

PYBIND11_MODULE(_geofactor, m) {
  m.doc() = "Spatial item factor analysis: C++ core bindings";
  m.attr("__version__") = gf::kVersion;

  py::register_exception<gf::ValidationError>(m, "ValidationError",
                                              PyExc_ValueError);
  py::register_exception<gf::NumericalError>(m, "NumericalError",
                                             PyExc_ArithmeticError);

  py::class_<gf::Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("y"), py::arg("coords"),
           py::arg("x") = Eigen::MatrixXd(),
           py::arg("item_names") = std::vector<std::string>{},
           py::arg("covariate_names") = std::vector<std::string>{})
      .def_property_readonly("n", &gf::Dataset::n)
      .def_property_readonly("q", &gf::Dataset::q)
      .def_property_readonly("p", &gf::Dataset::p)
      .def_readonly("coords", &gf::Dataset::coords)
      .def_readonly("X", &gf::Dataset::X)
      .def_readonly("item_names", &gf::Dataset::item_names);

  py::class_<gf::ModelSpec>(m, "ModelSpec")
      .def_readonly("m", &gf::ModelSpec::m)
      .def_property_readonly("q", &gf::ModelSpec::q)
      .def_property_readonly("g", &gf::ModelSpec::g);

  py::class_<gf::SamplerConfig>(m, "SamplerConfig")
      .def_readwrite("iterations", &gf::SamplerConfig::iterations)
      .def_readwrite("burn_in", &gf::SamplerConfig::burn_in)
      .def_readwrite("thin", &gf::SamplerConfig::thin)
      .def_readwrite("seed", &gf::SamplerConfig::seed)
      .def_readwrite("chains", &gf::SamplerConfig::chains);

  py::class_<gf::ChainOutput>(m, "ChainOutput")
      .def_readonly("c", &gf::ChainOutput::c)
      .def_readonly("a", &gf::ChainOutput::a_star)
      .def_readonly("theta", &gf::ChainOutput::theta)
      .def_readonly("beta", &gf::ChainOutput::beta)
      .def_readonly("t", &gf::ChainOutput::t_free)
      .def_readonly("phi", &gf::ChainOutput::phi)
      .def_readonly("nu", &gf::ChainOutput::nu)
      .def_readonly("accept_prob", &gf::ChainOutput::accept_prob)
      .def_readonly("rescaled", &gf::ChainOutput::rescaled)
      .def_property_readonly("samples", &gf::ChainOutput::samples)
      .def("hash", [](const gf::ChainOutput& c) {
        return gf::hash_hex(c.hash());
      });

  m.def(
      "parse_config_text",
      [](const std::string& text, const std::vector<std::string>& items,
         int p) {
        const gf::ParsedConfig parsed =
            gf::parse_config_text(text, items, p);
        return py::make_tuple(parsed.spec, parsed.sampler);
      },
      py::arg("text"), py::arg("item_names"), py::arg("p") = 0);

  m.def(
      "fit",
      [](const gf::Dataset& data, const gf::ModelSpec& spec,
         const gf::SamplerConfig& config, int chain_id) {
        return gf::run_chain(data, spec, config, chain_id);
      },
      py::arg("data"), py::arg("spec"), py::arg("config"),
      py::arg("chain_id") = 0, py::call_guard<py::gil_scoped_release>());

  m.def("rescale", &gf::rescale_samples, py::arg("chain"));

  m.def(
      "dic",
      [](const gf::ChainOutput& chain, const gf::Dataset& data) {
        const gf::DicReport rep = gf::dic(chain, data);
        py::dict out;
        out["mean_deviance"] = rep.mean_deviance;
        out["deviance_at_mean"] = rep.deviance_at_mean;
        out["p_d"] = rep.p_d;
        out["dic"] = rep.dic;
        return out;
      },
      py::arg("chain"), py::arg("data"));

  m.def(
      "predict",
      [](const gf::ChainOutput& chain, const gf::Dataset& data,
         const Eigen::MatrixXd& new_coords, const Eigen::MatrixXd& new_x,
         std::uint64_t seed, bool allow_coincident) {
        gf::PredictOptions opt;
        opt.seed = seed;
        opt.allow_coincident = allow_coincident;
        const gf::PredictionResult pred =
            gf::predict_factors(chain, data, new_coords, new_x, opt);
        py::dict out;
        out["draws"] = pred.draws;
        out["median"] = pred.median;
        out["q05"] = pred.q05;
        out["q95"] = pred.q95;
        out["exceed0"] = pred.exceed0;
        return out;
      },
      py::arg("chain"), py::arg("data"), py::arg("new_coords"),
      py::arg("new_x") = Eigen::MatrixXd(), py::arg("seed") = 0,
      py::arg("allow_coincident") = false);

  m.def(
      "variogram",
      [](const Eigen::VectorXd& values, const Eigen::MatrixXd& coords,
         int bins, double max_dist) {
        const gf::Variogram v =
            gf::empirical_variogram(values, coords, bins, max_dist);
        py::dict out;
        out["centers"] = v.centers;
        out["gamma"] = v.gamma;
        out["pairs"] = v.pair_count;
        return out;
      },
      py::arg("values"), py::arg("coords"), py::arg("bins") = 15,
      py::arg("max_dist") = 0.0);

  m.def("exp_correlation", &gf::exp_correlation, py::arg("u"),
        py::arg("phi"));
  m.def(
      "cpc_transform",
      [](const Eigen::VectorXd& nu, int m) { return gf::cpc_transform(nu, m); },
      py::arg("nu"), py::arg("m"));
  m.def(
      "standardize",
      [](const Eigen::MatrixXd& raw) {
        const gf::Standardized st = gf::standardize_covariates(raw);
        return py::make_tuple(st.X, st.mean, st.sd);
      },
      py::arg("raw"));
}
