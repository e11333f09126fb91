// calibration.hpp -- Monte Carlo estimation of the bit log-likelihood
// weights, message K-L numbers, overshoot size, the analytic overshoot
// bound, and fusion-threshold calibration against target error levels.
#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>

#include "dsprt/models.hpp"
#include "dsprt/sensor.hpp"
#include "dsprt/simkernel.hpp"

namespace dsprt {

struct QuantizationTable {
    double lambda_lo = 0.0;  // -log P1(z=0)/P0(z=0)
    double lambda_hi = 0.0;  //  log P1(z=1)/P0(z=1)
    double p0_bit1 = 0.0;    // P0(z=1)
    double p1_bit1 = 0.0;    // P1(z=1)
    double i0 = 0.0;         // -E0[lambda]
    double i1 = 0.0;         //  E1[lambda]
    double theta0 = 0.0;     // E0|eta|
    double theta1 = 0.0;     // E1|eta|
    double theta_hat = 0.0;  // max_j Ej|eta|
    double mean_period0 = 0.0;  // mean intersampling period (steps)
    double mean_period1 = 0.0;
    std::uint64_t n_mc = 0;
    std::uint64_t seed = 0;
    // plug-in / delta-method standard errors
    double se_lambda_lo = 0.0, se_lambda_hi = 0.0;
    double se_i0 = 0.0, se_i1 = 0.0;
    double se_theta0 = 0.0, se_theta1 = 0.0, se_theta = 0.0;
    double se_period0 = 0.0, se_period1 = 0.0;
};

struct CalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One local SPRT cycle: exit side, duration and overshoot.
struct CycleOutcome {
    int bit;
    long steps;
    double overshoot;
};

CycleOutcome run_local_cycle(const HypothesisModel& model, const LocalThresholds& th,
                             int truth, NormalSampler& rng, long max_steps = 100'000'000);

QuantizationTable estimate_quantization(const HypothesisModel& model,
                                        const LocalThresholds& th, std::uint64_t n_mc,
                                        std::uint64_t seed, int threads = 1);

// Closed-form lower bounds for the message K-L numbers.
struct KlBounds {
    double i0_lb;
    double i1_lb;
};
KlBounds kl_lower_bounds(const LocalThresholds& th);

// Threshold-free upper bound on the maximal average overshoot: sum of the
// two one-sided moment bounds of order r.
double lorden_overshoot_bound(const HypothesisModel& model, int r);
// One-sided term for hypothesis j only.
double lorden_overshoot_bound_one_sided(const HypothesisModel& model, int r, int j);

struct CalibratedThresholds {
    double a_tilde = 0.0;
    double b_tilde = 0.0;
    double achieved_alpha = 0.0;  // conservative MC estimate at calibration
    double achieved_beta = 0.0;
    double envelope_a = 0.0;  // |log beta| + C
    double envelope_b = 0.0;  // |log alpha| + C
    std::uint64_t n_mc = 0;
};

// Smallest thresholds whose one-sided 95% Wilson upper bound on the achieved
// error stays at or below the target, found by bisection over
// [0, |log beta|+C] x [0, |log alpha|+C] on Monte Carlo error estimates.
// cfg's fusion thresholds are ignored; its weights, models and local
// thresholds define the system.
CalibratedThresholds calibrate_fusion_thresholds(const SystemConfig& cfg,
                                                 const ErrorLevels& levels,
                                                 std::uint64_t n_mc, std::uint64_t seed,
                                                 int threads = 1);

// Numeric inverse of the mean-intersampling-period map: the symmetric local
// threshold whose MC mean period matches `target_period` (in time units).
double threshold_for_mean_period(const HypothesisModel& model, int truth,
                                 double target_period, std::uint64_t n_mc,
                                 std::uint64_t seed, double tol = 1e-3);

}  // namespace dsprt
