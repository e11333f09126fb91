// experiments.hpp -- sweep runner (scheme comparison over an error-level
// grid), empirical verification of the analytic bounds, and the CSV writers
// used by the command-line tool.
#pragma once
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dsprt/calibration.hpp"
#include "dsprt/config.hpp"
#include "dsprt/simkernel.hpp"

namespace dsprt {

enum class Scheme {
    Dsprt,        // 1-bit asynchronous messages, fusion-center test
    SprtCont,     // centralized test on the full observation stream
    SprtSampled,  // centralized test on synchronous samples, period matched
};

Scheme scheme_from_string(const std::string& s);
const char* scheme_name(Scheme s);

// ---------------------------------------------------------------------------
// single-system setup (simulate / calibrate subcommands)

struct SimulateSetup {
    SystemConfig sys;
    std::vector<QuantizationTable> tables;  // discrete mode only
    CalibratedThresholds calib;             // when thresholds = calibrate
    bool calibrated = false;
};

// Builds a runnable system from a `key = value` config.  Recognized keys:
//   mode (continuous|discrete), k, mu (list or scalar), dt, h,
//   delta (symmetric) or delta_lo / delta_hi (lists or scalars),
//   alpha, beta, truth, max_steps, thresholds (envelope|calibrate),
//   quant_n_mc, calib_n_mc
SimulateSetup build_system_from_config(ConfigMap& cfg, std::uint64_t seed, int threads);

// ---------------------------------------------------------------------------
// centralized-threshold calibration (shared by sweep and acceptance checks)

// Smallest centralized-SPRT thresholds certified (one-sided 95% Wilson) to
// meet the target error levels, searched over a box slightly larger than the
// analytic thresholds.  One LLR increment per sensor per step.
CalibratedThresholds calibrate_centralized_thresholds(
    const std::vector<HypothesisModel>& models, const ErrorLevels& levels,
    std::uint64_t n_mc, std::uint64_t seed, int threads = 1);

// ---------------------------------------------------------------------------
// sweep

struct SweepSpec {
    TimeMode mode = TimeMode::Continuous;
    int K = 2;
    std::vector<double> mu;
    double dt = 1e-3;  // continuous-mode step
    double h = 1.0;    // discrete-mode sampling period
    std::vector<double> delta_grid;  // symmetric local thresholds
    std::vector<double> alpha_grid;  // beta = alpha
    std::vector<Scheme> schemes;
    double sampled_h = 0.0;  // 0 => match the mean messaging period per delta
    std::uint64_t trials = 20'000;  // per hypothesis per row
    std::uint64_t calib_n_mc = 200'000;
    std::uint64_t quant_n_mc = 200'000;
};

SweepSpec sweep_spec_from_config(ConfigMap& cfg);

struct SweepRow {
    std::string scheme;
    double delta = 0.0;      // local threshold (0 for centralized schemes)
    double period = 0.0;     // sampling period / step of the scheme
    double alpha = 0.0, beta = 0.0;        // targets
    double a_thresh = 0.0, b_thresh = 0.0;  // thresholds actually used
    double mean_delay = 0.0, se_delay = 0.0;
    double kl0 = 0.0, se_kl0 = 0.0;  // -E0[u_T], E1[u_T]
    double kl1 = 0.0, se_kl1 = 0.0;
    double err_alpha = 0.0, se_alpha = 0.0;  // achieved error rates
    double err_beta = 0.0, se_beta = 0.0;
    double msgs_per_time = 0.0;
    std::uint64_t n_trials = 0;  // per hypothesis
    std::uint64_t seed = 0;
};

std::vector<SweepRow> run_sweep(const SweepSpec& spec, std::uint64_t seed, int threads,
                                std::ostream* log = nullptr);

// ---------------------------------------------------------------------------
// theory checks

struct CheckResult {
    std::string name;
    bool pass = false;
    double margin = 0.0;  // slack of the inequality (>= 0 when it holds)
    std::string detail;
};

struct CheckOptions {
    std::uint64_t quant_n_mc = 200'000;
    std::uint64_t calib_n_mc = 100'000;
    std::uint64_t trials = 20'000;
    std::uint64_t seed = 1;
    int threads = 1;
};

// Monte Carlo verification of every analytic inequality the calibration
// relies on, over a small matrix of sampling periods and local thresholds.
std::vector<CheckResult> run_theory_checks(const CheckOptions& opt,
                                           std::ostream* log = nullptr);

// Delay-optimal local threshold size scaling: sqrt(theta * |log alpha|).
inline double threshold_size_advisor(double theta_hat, double alpha) {
    if (!(theta_hat > 0.0) || !(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("threshold_size_advisor: need theta > 0, alpha in (0,1)");
    return std::sqrt(theta_hat * std::abs(std::log(alpha)));
}

// ---------------------------------------------------------------------------
// CSV output (9 significant digits, deterministic byte-for-byte)

std::string format_g9(double x);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
void write_trials_csv(std::ostream& os, const std::vector<TrialResult>& trials);
void write_quantization_csv(std::ostream& os, const std::vector<QuantizationTable>& tables,
                            const std::vector<LocalThresholds>& local);
void write_checks_csv(std::ostream& os, const std::vector<CheckResult>& checks);

}  // namespace dsprt
