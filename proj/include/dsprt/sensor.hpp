// sensor.hpp -- level-triggered (Lebesgue) sampler: a local repeated SPRT
// that emits a 1-bit message whenever its restarted LLR accumulator exits
// (-delta_lo, delta_hi).
#pragma once
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

namespace dsprt {

struct LocalThresholds {
    double delta_lo;  // lower exit level (positive number)
    double delta_hi;  // upper exit level

    LocalThresholds(double lo, double hi) : delta_lo(lo), delta_hi(hi) {
        if (!(lo > 0.0) || !(hi > 0.0))
            throw std::invalid_argument("LocalThresholds: both thresholds must be > 0");
    }
};

struct Message {
    int sensor;          // sensor index in [0,K)
    int bit;             // exit side: 1 above, 0 below
    long period_steps;   // intersampling period, in steps
    double emit_time;    // simulation time of the emission
    double overshoot = 0.0;  // simulator-side diagnostic, not transmitted
};

struct SensorState {
    double accum = 0.0;            // LLR since last emission
    long steps_since_emit = 0;
    long emit_count = 0;
    double overshoot_abs_sum = 0.0;
};

// Overshoot of a completed excursion, signed: negative on a lower exit,
// positive on an upper exit, zero on an exact hit.
inline double overshoot_of(double increment_total, const LocalThresholds& th) {
    if (increment_total >= th.delta_hi) return increment_total - th.delta_hi;
    if (increment_total <= -th.delta_lo) return increment_total + th.delta_lo;
    throw std::logic_error("overshoot_of: accumulator still inside the interval");
}

// Advance the local statistic by one LLR increment.  Returns the emitted
// message on an exit (closed boundaries), nothing otherwise.  The accumulator
// restarts at exactly 0 after an emission; the overshoot is recorded
// separately and discarded from the statistic.
inline std::optional<Message> sensor_step(SensorState& state, double llr_inc,
                                          const LocalThresholds& th,
                                          int sensor_index, double emit_time) {
    if (!std::isfinite(llr_inc))
        throw std::invalid_argument("sensor_step: non-finite LLR increment");
    state.accum += llr_inc;
    state.steps_since_emit += 1;
    if (state.accum > -th.delta_lo && state.accum < th.delta_hi) return std::nullopt;

    const double eta = overshoot_of(state.accum, th);
    Message msg{sensor_index, state.accum >= th.delta_hi ? 1 : 0,
                state.steps_since_emit, emit_time, eta};
    state.overshoot_abs_sum += std::abs(eta);
    state.accum = 0.0;
    state.steps_since_emit = 0;
    state.emit_count += 1;
    return msg;
}

}  // namespace dsprt
