#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wbh/corr.hpp"
#include "wbh/dist.hpp"
#include "wbh/error.hpp"
#include "wbh/io.hpp"
#include "wbh/procedure.hpp"
#include "wbh/sim.hpp"
#include "wbh/varselect.hpp"

namespace py = pybind11;

namespace {

wbh::MethodKind method_of(const std::string& mode, std::optional<double> m) {
    if (mode == "z") return wbh::MethodKind::z();
    if (mode == "t") {
        if (!m) throw wbh::InvalidInput("mode 't' requires m");
        return wbh::MethodKind::t(*m);
    }
    throw wbh::InvalidInput("mode must be 'z' or 't'");
}

std::vector<double> weights_of(const Eigen::MatrixXd& sigma) {
    const Eigen::VectorXd w = wbh::CorrelationModel(sigma).weights();
    return {w.data(), w.data() + w.size()};
}

std::string simulate_json(const std::string& text, std::size_t reps, std::uint64_t seed, std::size_t workers) {
    auto scenarios = wbh::io::parse_scenarios(text);
    wbh::io::apply_run_settings(scenarios, reps, seed);
    std::vector<wbh::SimulationReport> reports;
    {
        py::gil_scoped_release release;
        for (const auto& s : scenarios) reports.push_back(wbh::simulate(s, workers));
    }
    return wbh::io::reports_to_json(reports, seed);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Weighted step-up tests for correlated statistics";

    py::register_exception<wbh::InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<wbh::NumericalFailure>(m, "NumericalFailure", PyExc_ArithmeticError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const wbh::InvalidParameter& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const wbh::DecompositionFailure& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const wbh::DegenerateFit& e) {
            PyErr_SetString(PyExc_ArithmeticError, e.what());
        }
    });

    m.def("chi2_sf", &wbh::dist::chi2_sf, py::arg("x"), py::arg("dof"));
    m.def("chi2_isf", &wbh::dist::chi2_isf, py::arg("u"), py::arg("dof"));
    m.def("nc_chi2_sf", &wbh::dist::nc_chi2_sf, py::arg("x"), py::arg("dof"), py::arg("noncentrality"));
    m.def("f_sf", &wbh::dist::f_sf, py::arg("x"), py::arg("dof1"), py::arg("dof2"));
    m.def("f_isf", &wbh::dist::f_isf, py::arg("u"), py::arg("dof1"), py::arg("dof2"));

    m.def("correlation_weights", &weights_of, py::arg("sigma"),
          "w_i = 1 - R_i^2 for each coordinate of the covariance matrix.");
    m.def("equicorrelated_weight", &wbh::equicorrelated_weight, py::arg("d"), py::arg("rho"));

    m.def(
        "calibrate",
        [](const std::vector<double>& w, double alpha, const std::string& mode, std::optional<double> dof) {
            const auto c = wbh::calibrate(w, alpha, method_of(mode, dof));
            py::dict out;
            out["alpha1"] = c.alpha1;
            out["residual"] = c.residual;
            out["iterations"] = c.iterations;
            out["critical_constants"] = c.critical_constants();
            return out;
        },
        py::arg("weights"), py::arg("alpha"), py::arg("mode") = "z", py::arg("m") = py::none());
    m.def(
        "calibrate_alpha1",
        [](const std::vector<double>& w, double alpha, const std::string& mode, std::optional<double> dof) {
            return wbh::calibrate_alpha1(w, alpha, method_of(mode, dof));
        },
        py::arg("weights"), py::arg("alpha"), py::arg("mode") = "z", py::arg("m") = py::none());
    m.def(
        "transform_pvalue",
        [](double p, double w, const std::string& mode, std::optional<double> dof) {
            return wbh::transform_pvalue(p, w, method_of(mode, dof));
        },
        py::arg("p"), py::arg("w"), py::arg("mode") = "z", py::arg("m") = py::none());

    py::class_<wbh::StepUpOutcome>(m, "StepUpOutcome")
        .def_readonly("rejections", &wbh::StepUpOutcome::rejections)
        .def_readonly("rejected", &wbh::StepUpOutcome::rejected)
        .def_readonly("threshold", &wbh::StepUpOutcome::threshold)
        .def("__repr__", [](const wbh::StepUpOutcome& o) {
            return "StepUpOutcome(rejections=" + std::to_string(o.rejections) + ")";
        });

    m.def(
        "stepup",
        [](const std::vector<double>& p, const std::vector<double>& c) { return wbh::stepup(p, c); },
        py::arg("pvalues"), py::arg("constants"));
    m.def(
        "statistic_space_stepup",
        [](const std::vector<double>& t, double alpha1, const std::string& mode, std::optional<double> dof) {
            return wbh::statistic_space_stepup(t, alpha1, method_of(mode, dof));
        },
        py::arg("statistics"), py::arg("alpha1"), py::arg("mode") = "z", py::arg("m") = py::none());
    m.def(
        "simes_global",
        [](const std::vector<double>& p, double alpha1) { return wbh::simes_global(p, alpha1); },
        py::arg("transformed"), py::arg("alpha1"));
    m.def(
        "weighted_bh_z",
        [](const std::vector<double>& x, const Eigen::MatrixXd& sigma, double alpha) {
            return wbh::weighted_bh_z(x, sigma, alpha);
        },
        py::arg("x"), py::arg("sigma"), py::arg("alpha"));
    m.def(
        "weighted_bh_t",
        [](const std::vector<double>& x, double v, double dof, const Eigen::MatrixXd& sigma, double alpha) {
            return wbh::weighted_bh_t(x, v, dof, sigma, alpha);
        },
        py::arg("x"), py::arg("v"), py::arg("m"), py::arg("sigma"), py::arg("alpha"));

    py::class_<wbh::SelectionReport>(m, "Selection")
        .def_property_readonly("selected", [](const wbh::SelectionReport& r) { return r.outcome.rejected; })
        .def_property_readonly("beta_hat", [](const wbh::SelectionReport& r) { return r.fit.beta_hat; })
        .def_property_readonly("tau2_hat", [](const wbh::SelectionReport& r) { return r.fit.tau2_hat; })
        .def_readonly("t_squared", &wbh::SelectionReport::t_squared)
        .def_readonly("weights", &wbh::SelectionReport::weights)
        .def_readonly("pvalues", &wbh::SelectionReport::pvalues)
        .def_readonly("transformed", &wbh::SelectionReport::transformed)
        .def_property_readonly("alpha1", [](const wbh::SelectionReport& r) { return r.method.alpha1; });
    m.def(
        "select_variables",
        [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha) {
            return wbh::select_variables_report({x, y}, alpha);
        },
        py::arg("design"), py::arg("response"), py::arg("alpha"));

    m.def("simulate_json", &simulate_json, py::arg("scenario_json"), py::arg("reps") = 0, py::arg("seed") = 0,
          py::arg("workers") = 1);
}
