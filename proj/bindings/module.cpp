// module.cpp -- Python bindings for the core simulator and calibration API.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dsprt/calibration.hpp"
#include "dsprt/config.hpp"
#include "dsprt/experiments.hpp"
#include "dsprt/models.hpp"
#include "dsprt/simkernel.hpp"
#include "dsprt/stats.hpp"

namespace py = pybind11;
using namespace dsprt;

namespace {

SystemConfig system_from_string(const std::string& text, std::uint64_t seed, int threads) {
    auto cfg = ConfigMap::parse_string(text);
    auto setup = build_system_from_config(cfg, seed, threads);
    cfg.check_all_consumed();
    return setup.sys;
}

}  // namespace

PYBIND11_MODULE(_dsprt, m) {
    m.doc() = "decentralized sequential hypothesis testing: simulation and calibration";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<CalibrationError>(m, "CalibrationError");

    // ---- models -----------------------------------------------------------
    py::class_<HypothesisModel>(m, "HypothesisModel")
        .def_static("brownian", &HypothesisModel::brownian, py::arg("mu"), py::arg("dt"))
        .def_static("gaussian", &HypothesisModel::gaussian, py::arg("mu"), py::arg("h"))
        .def_readonly("mu", &HypothesisModel::mu)
        .def_readonly("h", &HypothesisModel::h)
        .def("llr_mean", &HypothesisModel::llr_mean, py::arg("truth"))
        .def("llr_sd", &HypothesisModel::llr_sd);

    py::class_<ErrorLevels>(m, "ErrorLevels")
        .def(py::init<double, double>(), py::arg("alpha"), py::arg("beta"))
        .def_readonly("alpha", &ErrorLevels::alpha)
        .def_readonly("beta", &ErrorLevels::beta);

    py::class_<LocalThresholds>(m, "LocalThresholds")
        .def(py::init<double, double>(), py::arg("delta_lo"), py::arg("delta_hi"))
        .def_readonly("delta_lo", &LocalThresholds::delta_lo)
        .def_readonly("delta_hi", &LocalThresholds::delta_hi);

    m.def("h_function", &h_function, py::arg("x"), py::arg("y"));
    m.def(
        "wald_thresholds",
        [](const ErrorLevels& lv) {
            const auto w = wald_thresholds(lv);
            return py::make_tuple(w.A, w.B);
        },
        py::arg("levels"), "Returns (A, B).");
    m.def(
        "sprt_performance_brownian",
        [](const std::vector<double>& mu, const ErrorLevels& lv) {
            const auto p = sprt_performance_brownian(mu, lv);
            py::dict d;
            d["e0_delay"] = p.e0_delay;
            d["e1_delay"] = p.e1_delay;
            d["kl0"] = p.kl0;
            d["kl1"] = p.kl1;
            return d;
        },
        py::arg("mu"), py::arg("levels"));

    // ---- calibration ------------------------------------------------------
    py::class_<QuantizationTable>(m, "QuantizationTable")
        .def_readonly("lambda_lo", &QuantizationTable::lambda_lo)
        .def_readonly("lambda_hi", &QuantizationTable::lambda_hi)
        .def_readonly("p0_bit1", &QuantizationTable::p0_bit1)
        .def_readonly("p1_bit1", &QuantizationTable::p1_bit1)
        .def_readonly("i0", &QuantizationTable::i0)
        .def_readonly("i1", &QuantizationTable::i1)
        .def_readonly("theta0", &QuantizationTable::theta0)
        .def_readonly("theta1", &QuantizationTable::theta1)
        .def_readonly("theta_hat", &QuantizationTable::theta_hat)
        .def_readonly("mean_period0", &QuantizationTable::mean_period0)
        .def_readonly("mean_period1", &QuantizationTable::mean_period1)
        .def_readonly("n_mc", &QuantizationTable::n_mc)
        .def_readonly("se_lambda_lo", &QuantizationTable::se_lambda_lo)
        .def_readonly("se_lambda_hi", &QuantizationTable::se_lambda_hi)
        .def_readonly("se_i0", &QuantizationTable::se_i0)
        .def_readonly("se_i1", &QuantizationTable::se_i1)
        .def_readonly("se_theta", &QuantizationTable::se_theta);

    m.def("estimate_quantization", &estimate_quantization, py::arg("model"),
          py::arg("thresholds"), py::arg("n_mc"), py::arg("seed"), py::arg("threads") = 1,
          py::call_guard<py::gil_scoped_release>());
    m.def(
        "kl_lower_bounds",
        [](const LocalThresholds& th) {
            const auto b = kl_lower_bounds(th);
            return py::make_tuple(b.i0_lb, b.i1_lb);
        },
        py::arg("thresholds"), "Returns (i0_lb, i1_lb).");
    m.def("lorden_overshoot_bound", &lorden_overshoot_bound, py::arg("model"), py::arg("r"));
    m.def("threshold_for_mean_period", &threshold_for_mean_period, py::arg("model"),
          py::arg("truth"), py::arg("target_period"), py::arg("n_mc"), py::arg("seed"),
          py::arg("tol") = 1e-3, py::call_guard<py::gil_scoped_release>());
    m.def("threshold_size_advisor", &threshold_size_advisor, py::arg("theta_hat"),
          py::arg("alpha"));

    py::class_<CalibratedThresholds>(m, "CalibratedThresholds")
        .def_readonly("a_tilde", &CalibratedThresholds::a_tilde)
        .def_readonly("b_tilde", &CalibratedThresholds::b_tilde)
        .def_readonly("achieved_alpha", &CalibratedThresholds::achieved_alpha)
        .def_readonly("achieved_beta", &CalibratedThresholds::achieved_beta)
        .def_readonly("envelope_a", &CalibratedThresholds::envelope_a)
        .def_readonly("envelope_b", &CalibratedThresholds::envelope_b);

    m.def("calibrate_fusion_thresholds", &calibrate_fusion_thresholds, py::arg("system"),
          py::arg("levels"), py::arg("n_mc"), py::arg("seed"), py::arg("threads") = 1,
          py::call_guard<py::gil_scoped_release>());

    // ---- simulation -------------------------------------------------------
    py::class_<SystemConfig>(m, "SystemConfig")
        .def_readonly("K", &SystemConfig::K)
        .def_readwrite("truth", &SystemConfig::truth)
        .def_readwrite("max_steps", &SystemConfig::max_steps)
        .def("validate", &SystemConfig::validate)
        .def_property_readonly("a_tilde",
                               [](const SystemConfig& s) { return s.fusion.a_tilde; })
        .def_property_readonly("b_tilde",
                               [](const SystemConfig& s) { return s.fusion.b_tilde; });

    m.def("system_from_config", &system_from_string, py::arg("text"), py::arg("seed") = 1,
          py::arg("threads") = 1,
          "Builds a runnable system from `key = value` config text.");

    py::class_<TrialResult>(m, "TrialResult")
        .def_readonly("decision", &TrialResult::decision)
        .def_readonly("stop_time", &TrialResult::stop_time)
        .def_readonly("u_at_stop", &TrialResult::u_at_stop)
        .def_readonly("u_tilde_at_stop", &TrialResult::u_tilde_at_stop)
        .def_readonly("msg_counts", &TrialResult::msg_counts)
        .def("aborted", &TrialResult::aborted);

    m.def("run_dsprt_trial",
          [](const SystemConfig& sys, std::uint64_t seed, std::uint64_t index) {
              return run_dsprt_trial(sys, seed, index);
          },
          py::arg("system"), py::arg("seed"), py::arg("index"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_centralized_sprt_trial", &run_centralized_sprt_trial, py::arg("system"),
          py::arg("A"), py::arg("B"), py::arg("seed"), py::arg("index"),
          py::call_guard<py::gil_scoped_release>());

    // ---- sweep and checks -------------------------------------------------
    m.def(
        "run_sweep_csv",
        [](const std::string& text, std::uint64_t seed, int threads) {
            auto cfg = ConfigMap::parse_string(text);
            auto spec = sweep_spec_from_config(cfg);
            cfg.check_all_consumed();
            std::vector<SweepRow> rows;
            {
                py::gil_scoped_release release;
                rows = run_sweep(spec, seed, threads);
            }
            std::ostringstream os;
            write_sweep_csv(os, rows);
            return os.str();
        },
        py::arg("text"), py::arg("seed") = 1, py::arg("threads") = 1,
        "Runs a sweep described by config text; returns the CSV as a string.");

    m.def(
        "run_theory_checks",
        [](std::uint64_t quant_n_mc, std::uint64_t calib_n_mc, std::uint64_t trials,
           std::uint64_t seed, int threads) {
            CheckOptions opt;
            opt.quant_n_mc = quant_n_mc;
            opt.calib_n_mc = calib_n_mc;
            opt.trials = trials;
            opt.seed = seed;
            opt.threads = threads;
            std::vector<CheckResult> res;
            {
                py::gil_scoped_release release;
                res = run_theory_checks(opt);
            }
            py::list out;
            for (const auto& c : res) {
                py::dict d;
                d["name"] = c.name;
                d["pass"] = c.pass;
                d["margin"] = c.margin;
                d["detail"] = c.detail;
                out.append(d);
            }
            return out;
        },
        py::arg("quant_n_mc") = 200'000, py::arg("calib_n_mc") = 100'000,
        py::arg("trials") = 20'000, py::arg("seed") = 1, py::arg("threads") = 1);

    m.def("format_g9", &format_g9, py::arg("x"));
}
