#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "dwlab/asymptotics.hpp"
#include "dwlab/coeffs.hpp"
#include "dwlab/error.hpp"
#include "dwlab/lab.hpp"
#include "dwlab/multiplier.hpp"
#include "dwlab/rates.hpp"
#include "dwlab/zones.hpp"

namespace py = pybind11;
using namespace dwlab;

namespace {

std::vector<std::vector<cplx>> to_rows(const Matrix2c& m) {
  return {{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}};
}

SupOptions sup_options(double tol, double xi_max) {
  SupOptions o;
  o.tol = tol;
  o.xi_max = xi_max;
  return o;
}

RateQuery make_query(int n, double p, double q, double r_p) {
  RateQuery r{n, p, q, r_p, 0, 0};
  r.validate();
  return r;
}

py::dict curve_dict(const DecayCurve& c) {
  py::dict d;
  d["times"] = c.times;
  d["values"] = c.values;
  d["argmax_xi"] = c.argmax_xi;
  d["norm"] = c.norm;
  d["warning"] = c.warning;
  return d;
}

DecayCurve curve_from(const std::vector<double>& times, const std::vector<double>& values) {
  DecayCurve c;
  c.times = times;
  c.values = values;
  c.argmax_xi.assign(times.size(), 0.0);
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Damped-wave decay laboratory";
  m.attr("__version__") = std::string(lab::kVersion);

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base);
  py::register_exception<RegimeError>(m, "RegimeError", base);
  py::register_exception<ZoneError>(m, "ZoneError", base);
  py::register_exception<QuadratureError>(m, "QuadratureError", base);
  py::register_exception<IntegrationError>(m, "IntegrationError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);

  py::class_<CoefficientProfile>(m, "Profile")
      .def_static("zero", &CoefficientProfile::zero)
      .def_static("constant", &CoefficientProfile::constant, py::arg("b0"))
      .def_static("scale_invariant", &CoefficientProfile::scale_invariant, py::arg("mu"))
      .def_static("power", &CoefficientProfile::power, py::arg("c"), py::arg("kappa"))
      .def_static("iterated_log", &CoefficientProfile::iterated_log, py::arg("mu"), py::arg("depth"))
      .def_static("integrable", &CoefficientProfile::integrable, py::arg("c"), py::arg("sigma"))
      .def_property_readonly("kind", [](const CoefficientProfile& p) { return std::string(to_string(p.kind())); })
      .def("__repr__", &CoefficientProfile::describe);

  m.def("eval_b", &eval_b, py::arg("profile"), py::arg("t"));
  m.def("eval_lambda", &eval_lambda, py::arg("profile"), py::arg("t"), py::arg("tol") = 1e-10);
  m.def("eval_primitive", &eval_primitive, py::arg("profile"), py::arg("t"), py::arg("tol") = 1e-10);
  m.def("eval_recip_primitive", &eval_recip_primitive, py::arg("profile"), py::arg("t"), py::arg("tol") = 1e-10);
  m.def("classify_regime", [](const CoefficientProfile& p) {
    const RegimeClass rc = classify_regime(p);
    py::dict d;
    d["kind"] = std::string(to_string(rc.kind));
    d["mu_eff"] = rc.mu_eff;
    d["tb_limit_value"] = rc.tb_limit_value;
    d["effective_geometry"] = rc.effective_geometry();
    return d;
  });

  m.def(
      "solve_fundamental",
      [](const CoefficientProfile& p, double xi, const std::vector<double>& times, double tol) {
        const FundamentalPair fp = solve_fundamental(p, FrequencyPoint(xi), 0.0, times, tol);
        std::vector<py::tuple> out;
        for (const auto& v : fp.values) out.push_back(py::make_tuple(v.phi1, v.phi2, v.dphi1, v.dphi2));
        return out;
      },
      py::arg("profile"), py::arg("xi"), py::arg("times"), py::arg("tol") = 1e-10,
      "(phi1, phi2, dphi1, dphi2) at each time, started at t = 0");
  m.def(
      "energy_multiplier",
      [](const CoefficientProfile& p, double xi, double t, double tol) {
        return to_rows(energy_multiplier(p, FrequencyPoint(xi), t, tol));
      },
      py::arg("profile"), py::arg("xi"), py::arg("t"), py::arg("tol") = 1e-10);
  m.def(
      "oracle_scale_invariant",
      [](double mu, double xi, double t) {
        const auto v = oracle_scale_invariant(mu, xi, t);
        return py::make_tuple(v.phi1, v.phi2, v.dphi1, v.dphi2);
      },
      py::arg("mu"), py::arg("xi"), py::arg("t"));
  m.def(
      "oracle_constant",
      [](double b0, double xi, double t) {
        const auto v = oracle_constant(b0, xi, t);
        return py::make_tuple(v.phi1, v.phi2, v.dphi1, v.dphi2);
      },
      py::arg("b0"), py::arg("xi"), py::arg("t"));

  m.def(
      "classify_point",
      [](const CoefficientProfile& p, double t, double xi, double N, double eps_red) {
        return std::string(to_string(classify_point(ZoneConfig::for_profile(p, N, eps_red), p, t, xi)));
      },
      py::arg("profile"), py::arg("t"), py::arg("xi"), py::arg("N") = 10.0, py::arg("eps_red") = 0.1);

  m.def(
      "l2_norm_curve",
      [](const CoefficientProfile& p, const std::vector<double>& times, double tol, double xi_max) {
        return curve_dict(l2_norm_curve(p, times, sup_options(tol, xi_max)));
      },
      py::arg("profile"), py::arg("times"), py::arg("tol") = 1e-8, py::arg("xi_max") = 0.0);
  m.def(
      "radial_l1_multiplier_norm",
      [](const CoefficientProfile& p, double t, int n, double tol) {
        return radial_l1_multiplier_norm(p, t, n, tol).value;
      },
      py::arg("profile"), py::arg("t"), py::arg("n"), py::arg("tol") = 1e-6);
  m.def(
      "fit_decay",
      [](const std::vector<double>& times, const std::vector<double>& values, const std::string& model,
         std::optional<double> t_min, std::optional<double> t_max) {
        const auto fm = fit_model_from_string(model);
        if (!fm) throw DomainError("fit_decay: unknown model '" + model + "'");
        std::optional<FitWindow> w;
        if (t_min || t_max) w = FitWindow{t_min.value_or(times.front()), t_max.value_or(times.back())};
        const FitResult f = fit_decay(curve_from(times, values), *fm, w);
        py::dict d;
        d["model"] = std::string(to_string(f.model));
        d["exponent"] = f.exponent;
        d["intercept"] = f.intercept;
        d["residual_rms"] = f.residual_rms;
        d["curvature"] = f.curvature;
        d["refused"] = f.refused;
        d["switched"] = f.switched;
        return d;
      },
      py::arg("times"), py::arg("values"), py::arg("model") = "PowerOfShifted", py::arg("t_min") = py::none(),
      py::arg("t_max") = py::none());
  m.def(
      "predicted_energy_exponent",
      [](const CoefficientProfile& p, int n, double pp, double q, double r_p) {
        const RatePrediction r = predicted_energy_rate(p, make_query(n, pp, q, r_p));
        py::dict d;
        d["variable"] = std::string(to_string(r.variable));
        d["exponent"] = r.exponent;
        d["exponent_in_t"] = r.exponent_in_t;
        d["bounded_only"] = r.bounded_only;
        return d;
      },
      py::arg("profile"), py::arg("n") = 3, py::arg("p") = 2.0, py::arg("q") = 2.0, py::arg("r_p") = 1.0);

  m.def(
      "parabolic_multiplier",
      [](const CoefficientProfile& p, double xi, double t) { return parabolic_multiplier(p, FrequencyPoint(xi), t); },
      py::arg("profile"), py::arg("xi"), py::arg("t"));
  m.def(
      "wave_operator",
      [](const CoefficientProfile& p, double xi, const std::vector<double>& probes, double tol) {
        const WaveOperatorEstimate w = wave_operator_approx(p, FrequencyPoint(xi), probes, tol);
        py::dict d;
        d["w_plus"] = to_rows(w.w_plus);
        d["det"] = w.det;
        d["certified"] = w.certified;
        d["diagnostic"] = w.diagnostic;
        return d;
      },
      py::arg("profile"), py::arg("xi"), py::arg("probe_times"), py::arg("tol") = 1e-10);

  m.def(
      "validate_config",
      [](const std::filesystem::path& path) {
        const lab::Config c = lab::load_config(path);
        lab::validate_config(c);
        return c.experiments.size();
      },
      py::arg("path"), "Number of experiments; raises ConfigError");
  m.def(
      "run_config",
      [](const std::filesystem::path& path, const std::filesystem::path& out, unsigned jobs) {
        const lab::Config c = lab::load_config(path);
        lab::validate_config(c);
        lab::RunOptions o;
        o.jobs = jobs;
        lab::ReportBundle bundle;
        {
          py::gil_scoped_release release;
          bundle = lab::run_config(c, o);
          lab::emit_reports(bundle, out);
        }
        py::dict statuses;
        for (const auto& r : bundle.results) statuses[py::str(r.name)] = std::string(lab::to_string(r.status));
        return py::make_tuple(lab::exit_code(bundle), statuses);
      },
      py::arg("path"), py::arg("out"), py::arg("jobs") = 1, "(exit code, {name: status})");
  m.def("list_profiles", &lab::list_profiles);
}
