// dsprt -- command-line front end: quantization calibration, trial
// simulation, scheme sweeps, and bound verification.
//
// exit codes: 0 success, 1 usage/config error, 2 bound-check failure,
// 3 calibration failure
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dsprt/experiments.hpp"
#include "dsprt/parallel.hpp"

namespace {

struct Common {
    std::string config;
    std::uint64_t seed = 1;
    std::uint64_t trials = 0;  // 0 = use config / built-in default
    std::string out;
    int threads = 1;
};

void add_common(CLI::App* app, Common& c, bool config_required) {
    auto* copt = app->add_option("--config", c.config, "key = value config file");
    if (config_required) copt->required();
    app->add_option("--seed", c.seed, "root RNG seed");
    app->add_option("--trials", c.trials, "Monte Carlo trial count override");
    app->add_option("--out", c.out, "output CSV path (default: stdout)");
    app->add_option("--threads", c.threads, "worker thread count")
        ->check(CLI::PositiveNumber);
}

// stream the CSV to --out or stdout
template <typename WriteFn>
void emit(const Common& c, WriteFn&& write) {
    if (c.out.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream os(c.out, std::ios::binary);
    if (!os) throw dsprt::ConfigError("cannot open output file: " + c.out);
    write(os);
}

int cmd_calibrate(const Common& c) {
    auto cfg = dsprt::ConfigMap::parse_file(c.config);
    // thresholds/levels keys are accepted so one config can drive both
    // `calibrate` and `simulate`
    auto setup = dsprt::build_system_from_config(cfg, c.seed, c.threads);
    cfg.check_all_consumed();

    auto tables = setup.tables;
    if (tables.empty()) {
        // continuous mode: estimate the message statistics on the Euler chain
        const std::uint64_t n_mc = c.trials > 0 ? c.trials : 50'000;
        std::uint64_t s = c.seed;
        for (int i = 0; i < setup.sys.K; ++i)
            tables.push_back(dsprt::estimate_quantization(
                setup.sys.models[static_cast<std::size_t>(i)],
                setup.sys.local[static_cast<std::size_t>(i)], n_mc,
                dsprt::splitmix64(s += 1), c.threads));
    }
    emit(c, [&](std::ostream& os) {
        dsprt::write_quantization_csv(os, tables, setup.sys.local);
    });
    if (setup.calibrated)
        std::cerr << "calibrated fusion thresholds: a=" << setup.calib.a_tilde
                  << " b=" << setup.calib.b_tilde
                  << " (envelopes " << setup.calib.envelope_a << ", "
                  << setup.calib.envelope_b << ")\n";
    return 0;
}

int cmd_simulate(const Common& c) {
    auto cfg = dsprt::ConfigMap::parse_file(c.config);
    auto setup = dsprt::build_system_from_config(cfg, c.seed, c.threads);
    cfg.check_all_consumed();
    if (setup.sys.fusion.degenerate())
        std::cerr << "warning: one message batch can clear both fusion thresholds; "
                     "the test is degenerate at these levels\n";

    const std::uint64_t n = c.trials > 0 ? c.trials : 1'000;
    auto results = dsprt::parallel_trials<dsprt::TrialResult>(
        n, c.threads, [&](std::uint64_t idx) {
            return dsprt::run_dsprt_trial(setup.sys, c.seed, idx);
        });
    emit(c, [&](std::ostream& os) { dsprt::write_trials_csv(os, results); });
    return 0;
}

int cmd_sweep(const Common& c) {
    auto cfg = dsprt::ConfigMap::parse_file(c.config);
    auto spec = dsprt::sweep_spec_from_config(cfg);
    cfg.check_all_consumed();
    if (c.trials > 0) spec.trials = c.trials;
    auto rows = dsprt::run_sweep(spec, c.seed, c.threads, &std::cerr);
    emit(c, [&](std::ostream& os) { dsprt::write_sweep_csv(os, rows); });
    return 0;
}

int cmd_check(const Common& c) {
    dsprt::CheckOptions opt;
    opt.seed = c.seed;
    opt.threads = c.threads;
    if (!c.config.empty()) {
        auto cfg = dsprt::ConfigMap::parse_file(c.config);
        opt.quant_n_mc = cfg.get_u64("quant_n_mc", opt.quant_n_mc);
        opt.calib_n_mc = cfg.get_u64("calib_n_mc", opt.calib_n_mc);
        opt.trials = cfg.get_u64("trials", opt.trials);
        cfg.check_all_consumed();
    }
    if (c.trials > 0) opt.trials = c.trials;

    auto checks = dsprt::run_theory_checks(opt, &std::cerr);
    if (!c.out.empty())
        emit(c, [&](std::ostream& os) { dsprt::write_checks_csv(os, checks); });
    int failures = 0;
    for (const auto& r : checks)
        if (!r.pass) ++failures;
    std::cerr << checks.size() - static_cast<std::size_t>(failures) << "/" << checks.size()
              << " checks passed\n";
    return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"decentralized sequential test simulator and calibration tool"};
    app.require_subcommand(1);

    Common cal, sim, swp, chk;
    auto* c1 = app.add_subcommand("calibrate", "estimate per-sensor message statistics");
    add_common(c1, cal, true);
    auto* c2 = app.add_subcommand("simulate", "run trials and log one row per trial");
    add_common(c2, sim, true);
    auto* c3 = app.add_subcommand("sweep", "compare schemes over an error-level grid");
    add_common(c3, swp, true);
    auto* c4 = app.add_subcommand("check", "verify the analytic bounds by Monte Carlo");
    add_common(c4, chk, false);

    try {
        app.parse(argc, argv);
        if (c1->parsed()) return cmd_calibrate(cal);
        if (c2->parsed()) return cmd_simulate(sim);
        if (c3->parsed()) return cmd_sweep(swp);
        return cmd_check(chk);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const dsprt::CalibrationError& e) {
        std::cerr << "calibration error: " << e.what() << "\n";
        return 3;
    } catch (const dsprt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
