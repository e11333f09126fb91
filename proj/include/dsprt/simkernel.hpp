// simkernel.hpp -- drives complete trials: advances global discrete time,
// steps all sensors, routes messages to the fusion center, and tracks the
// exact centralized statistic u_t alongside the fusion approximation.
#pragma once
#include <cstdint>
#include <vector>

#include "dsprt/fusion.hpp"
#include "dsprt/models.hpp"
#include "dsprt/sensor.hpp"

namespace dsprt {

enum class TimeMode { Continuous, Discrete };

struct SystemConfig {
    int K = 1;
    std::vector<HypothesisModel> models;    // one per sensor, equal step length
    std::vector<LocalThresholds> local;     // one per sensor
    FusionConfig fusion;                    // thresholds + per-message weights
    int truth = 1;
    TimeMode mode = TimeMode::Continuous;
    long max_steps = 0;                     // trial abort horizon (steps)

    double time_per_step() const { return models.front().h; }
    void validate() const;
};

// Fills fusion weights for the configured mode: local thresholds in
// continuous mode, the supplied bit-LLR weights in discrete mode.
std::vector<FusionWeights> continuous_weights(const std::vector<LocalThresholds>& local);

// Default abort horizon: ~200x the predicted mean decision delay.
long default_max_steps(const SystemConfig& cfg);

struct CycleRecord {
    int bit;
    long period_steps;
    double overshoot;
};

struct TrialResult {
    int decision = 2;  // 0, 1, or 2 = aborted at the horizon
    double stop_time = 0.0;
    double u_at_stop = 0.0;
    double u_tilde_at_stop = 0.0;
    std::vector<long> msg_counts;
    std::vector<double> overshoot_abs_sums;
    std::uint64_t seed = 0;
    // tracking diagnostics (filled when TrialOptions::track_gap)
    double max_tracking_gap = 0.0;   // max_t |u_t - u~_t|
    double max_abs_step_llr = 0.0;   // max per-sensor single-step |l|
    // per-sensor cycle logs (filled when TrialOptions::collect_cycles)
    std::vector<std::vector<CycleRecord>> cycles;

    bool aborted() const { return decision == 2; }
};

struct TrialOptions {
    bool collect_cycles = false;
    bool one_extra_cycle = false;  // complete cycle m_T+1 at every sensor
    bool track_gap = false;
};

TrialResult run_dsprt_trial(const SystemConfig& cfg, std::uint64_t root_seed,
                            std::uint64_t trial_index, const TrialOptions& opt = {});

// Centralized SPRT on the exact global LLR with thresholds (-A, B).
TrialResult run_centralized_sprt_trial(const SystemConfig& cfg, double A, double B,
                                       std::uint64_t root_seed, std::uint64_t trial_index);

// Centralized SPRT applied to synchronously sampled data with period h
// (each step contributes one N(mu*h, h)-sampled LLR increment per sensor).
TrialResult run_deterministic_sampling_sprt_trial(const SystemConfig& cfg, double period_h,
                                                  double A, double B, std::uint64_t root_seed,
                                                  std::uint64_t trial_index);

// Path extremes of the fusion statistic inside the absorbing box
// (-a_box, b_box): enough to read off the error indicator of every smaller
// threshold pair from a single trajectory.
struct BoxExtremes {
    double min_u_tilde = 0.0;  // over the pre-exit path, including the exit jump
    double max_u_tilde = 0.0;
    int exit_side = 2;         // 0 = bottom, 1 = top, 2 = aborted
};

BoxExtremes run_dsprt_extremes_trial(const SystemConfig& cfg, std::uint64_t root_seed,
                                     std::uint64_t trial_index);

// Empirical check of the renewal identity
//   E[sum_{n=1}^{m_T+1} z_n] = E[z_1] (E[m_T] + 1)
// for a per-cycle payload z, plus the bounded-payload slack estimate.
enum class Payload { One, Lambda, AbsOvershoot, Period };

struct WaldIdentityReport {
    struct PerSensor {
        double lhs = 0.0;        // E-hat[sum_{n<=m+1} z]
        double rhs = 0.0;        // E-hat[z_1] (E-hat[m] + 1)
        double diff = 0.0;
        double se = 0.0;         // delta-method SE of diff
        bool bounded = false;    // payload admits the 2M slack bound
        double slack = 0.0;      // |E-hat[sum_{n<=m} z] - E-hat[z_1] E-hat[m]|
        double slack_bound = 0.0;  // 2M
    };
    Payload payload = Payload::One;
    std::uint64_t n_trials = 0;
    std::vector<PerSensor> sensors;
};

WaldIdentityReport wald_identity_check(const SystemConfig& cfg, std::uint64_t seed,
                                       std::uint64_t n_trials, Payload payload,
                                       int threads = 1);

}  // namespace dsprt
