#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "xenopower/elicitation.hpp"
#include "xenopower/frailty.hpp"
#include "xenopower/io.hpp"
#include "xenopower/lmm.hpp"
#include "xenopower/power.hpp"

namespace py = pybind11;
using namespace xenopower;

namespace {

PowerJob make_job(ModelSpec model, std::vector<int> n, std::vector<int> m, int sim, double alpha,
                  std::uint64_t seed, int threads, double target_power) {
    PowerJob job;
    job.grid.n_values = std::move(n);
    job.grid.m_values = std::move(m);
    job.grid.sim = sim;
    job.grid.alpha = alpha;
    job.grid.seed = seed;
    job.model = std::move(model);
    job.worker_count = threads;
    job.target_power = target_power;
    return job;
}

PowerTable run(const PowerJob& job) {
    py::gil_scoped_release release;
    return run_power_grid(job);
}

} // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Monte Carlo power analysis for PDX experiments";

    // ValidationError derives from std::invalid_argument, which already maps to ValueError.
    py::register_exception<DataError>(mod, "DataError", PyExc_IOError);
    py::register_exception<FitError>(mod, "FitError", PyExc_RuntimeError);
    py::register_exception<EngineError>(mod, "EngineError", PyExc_RuntimeError);

    py::class_<AnovaParams>(mod, "AnovaParams")
        .def(py::init([](double beta0, double beta, double tau2, double sigma2) {
                 return AnovaParams{beta0, beta, tau2, sigma2};
             }),
             py::arg("beta0"), py::arg("beta"), py::arg("tau2"), py::arg("sigma2"))
        .def_readwrite("beta0", &AnovaParams::beta0)
        .def_readwrite("beta", &AnovaParams::beta)
        .def_readwrite("tau2", &AnovaParams::tau2)
        .def_readwrite("sigma2", &AnovaParams::sigma2)
        .def_property_readonly("icc", &AnovaParams::icc)
        .def("__repr__", [](const AnovaParams& p) {
            std::ostringstream s;
            s << "AnovaParams(beta0=" << p.beta0 << ", beta=" << p.beta << ", tau2=" << p.tau2
              << ", sigma2=" << p.sigma2 << ")";
            return s.str();
        });

    py::class_<FrailtyParams>(mod, "FrailtyParams")
        .def(py::init([](double lambda, double nu, double beta, double tau2, std::optional<double> ct) {
                 return FrailtyParams{lambda, nu, beta, tau2, ct.has_value(), ct.value_or(0.0)};
             }),
             py::arg("lambda_"), py::arg("nu"), py::arg("beta"), py::arg("tau2"), py::arg("ct") = py::none())
        .def_readwrite("lambda_", &FrailtyParams::lambda)
        .def_readwrite("nu", &FrailtyParams::nu)
        .def_readwrite("beta", &FrailtyParams::beta)
        .def_readwrite("tau2", &FrailtyParams::tau2)
        .def_readwrite("censor", &FrailtyParams::censor)
        .def_readwrite("ct", &FrailtyParams::ct)
        .def("__repr__", [](const FrailtyParams& p) {
            std::ostringstream s;
            s << "FrailtyParams(lambda_=" << p.lambda << ", nu=" << p.nu << ", beta=" << p.beta
              << ", tau2=" << p.tau2;
            if (p.censor) s << ", ct=" << p.ct;
            s << ")";
            return s.str();
        });

    py::class_<LmmFit>(mod, "LmmFit")
        .def_readonly("beta0_hat", &LmmFit::beta0_hat)
        .def_readonly("beta_hat", &LmmFit::beta_hat)
        .def_readonly("se_beta", &LmmFit::se_beta)
        .def_readonly("tau2_hat", &LmmFit::tau2_hat)
        .def_readonly("sigma2_hat", &LmmFit::sigma2_hat)
        .def_readonly("df", &LmmFit::df)
        .def_readonly("p_value", &LmmFit::p_value)
        .def_readonly("converged", &LmmFit::converged);

    py::class_<FrailtyFit>(mod, "FrailtyFit")
        .def_readonly("lambda_hat", &FrailtyFit::lambda_hat)
        .def_readonly("nu_hat", &FrailtyFit::nu_hat)
        .def_readonly("beta_hat", &FrailtyFit::beta_hat)
        .def_readonly("se_beta", &FrailtyFit::se_beta)
        .def_readonly("tau2_hat", &FrailtyFit::tau2_hat)
        .def_readonly("p_value", &FrailtyFit::p_value)
        .def_readonly("converged", &FrailtyFit::converged)
        .def_readonly("log_likelihood", &FrailtyFit::log_likelihood)
        .def_readonly("message", &FrailtyFit::message);

    py::class_<PowerRow>(mod, "PowerRow")
        .def_readonly("n", &PowerRow::n)
        .def_readonly("m", &PowerRow::m)
        .def_readonly("total_animals", &PowerRow::total_animals)
        .def_readonly("power", &PowerRow::power)
        .def_readonly("convergence_rate", &PowerRow::convergence_rate)
        .def_readonly("avg_censoring_rate", &PowerRow::avg_censoring_rate);

    mod.def("anova_from_medians", &elicit_anova_from_medians, py::arg("ctl_med"), py::arg("tx_med"),
            py::arg("icc") = kDefaultIcc, py::arg("sigma2") = kDefaultSigma2);
    mod.def("frailty_from_medians", &elicit_frailty_from_medians, py::arg("ctl_med"), py::arg("tx_med"),
            py::arg("nu") = kDefaultNu, py::arg("tau2") = kDefaultTau2);
    mod.def(
        "anova_from_pilot", [](const std::string& path) { return elicit_anova_from_pilot(read_pilot_csv(path)); },
        py::arg("path"));
    mod.def(
        "frailty_from_pilot",
        [](const std::string& path) { return elicit_frailty_from_pilot(read_pilot_csv(path)); }, py::arg("path"));
    mod.def(
        "fit_lmm_pilot", [](const std::string& path) { return fit_lmm(to_sample(read_pilot_csv(path))); },
        py::arg("path"));
    mod.def(
        "fit_frailty_pilot", [](const std::string& path) { return fit_frailty(to_sample(read_pilot_csv(path))); },
        py::arg("path"));

    mod.def(
        "power_grid",
        [](const std::variant<AnovaParams, FrailtyParams>& model, std::vector<int> n, std::vector<int> m, int sim,
           double alpha, std::uint64_t seed, int threads) {
            return run(make_job(model, std::move(n), std::move(m), sim, alpha, seed, threads, kDefaultTargetPower))
                .rows;
        },
        "Power (percent) for every (n, m) cell, ordered by n then m.", py::arg("model"), py::arg("n"), py::arg("m"),
        py::arg("sim") = 500, py::arg("alpha") = 0.05, py::arg("seed") = kDefaultSeed, py::arg("threads") = 0);

    mod.def(
        "power_csv",
        [](const std::variant<AnovaParams, FrailtyParams>& model, std::vector<int> n, std::vector<int> m, int sim,
           double alpha, std::uint64_t seed, int threads) {
            const PowerTable t =
                run(make_job(model, std::move(n), std::move(m), sim, alpha, seed, threads, kDefaultTargetPower));
            std::ostringstream out;
            write_power_csv(out, t);
            return out.str();
        },
        py::arg("model"), py::arg("n"), py::arg("m"), py::arg("sim") = 500, py::arg("alpha") = 0.05,
        py::arg("seed") = kDefaultSeed, py::arg("threads") = 0);

    mod.def(
        "power_json",
        [](const std::variant<AnovaParams, FrailtyParams>& model, std::vector<int> n, std::vector<int> m, int sim,
           double alpha, std::uint64_t seed, int threads, double target_power) {
            const PowerTable t =
                run(make_job(model, std::move(n), std::move(m), sim, alpha, seed, threads, target_power));
            return power_json(t, target_power, minimal_designs(t, target_power));
        },
        py::arg("model"), py::arg("n"), py::arg("m"), py::arg("sim") = 500, py::arg("alpha") = 0.05,
        py::arg("seed") = kDefaultSeed, py::arg("threads") = 0, py::arg("target_power") = kDefaultTargetPower);

    mod.def(
        "minimal_designs",
        [](const std::vector<PowerRow>& rows, double target_power) {
            PowerTable t;
            t.rows = rows;
            return minimal_designs(t, target_power);
        },
        py::arg("rows"), py::arg("target_power") = kDefaultTargetPower);
}
