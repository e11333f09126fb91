// fusion.hpp -- fusion-center SPRT on the piecewise-constant statistic built
// from 1-bit sensor messages.
#pragma once
#include <algorithm>
#include <span>
#include <stdexcept>
#include <vector>

#include "dsprt/sensor.hpp"

namespace dsprt {

// Per-message update weights.  Continuous mode uses the local thresholds
// (delta_lo, delta_hi); discrete mode uses the bit log-likelihood ratios
// (lambda_lo, lambda_hi).
struct FusionWeights {
    double w_lo;  // subtracted on bit 0
    double w_hi;  // added on bit 1
};

struct FusionConfig {
    double a_tilde = 1.0;  // lower stopping threshold (positive number)
    double b_tilde = 1.0;  // upper stopping threshold
    std::vector<FusionWeights> weights;  // one entry per sensor

    FusionConfig() = default;
    FusionConfig(double a, double b, std::vector<FusionWeights> w)
        : a_tilde(a), b_tilde(b), weights(std::move(w)) {
        if (!(a_tilde > 0.0) || !(b_tilde > 0.0))
            throw std::invalid_argument("FusionConfig: thresholds must be > 0");
        for (const auto& fw : weights)
            if (!(fw.w_lo > 0.0) || !(fw.w_hi > 0.0))
                throw std::invalid_argument("FusionConfig: weights must be > 0");
    }

    // Sum of all weights; bounds any simultaneous jump of the statistic.
    double max_total_jump() const {
        double c = 0.0;
        for (const auto& fw : weights) c += fw.w_lo + fw.w_hi;
        return c;
    }

    // The test degenerates when one batch can clear both thresholds.
    bool degenerate() const {
        const double c = max_total_jump();
        return c >= (a_tilde < b_tilde ? a_tilde : b_tilde);
    }
};

enum class FusionStatus { Running, Decided0, Decided1 };

struct FusionState {
    double u_tilde = 0.0;
    std::vector<long> msg_counts;
    FusionStatus status = FusionStatus::Running;
    double decision_time = 0.0;

    explicit FusionState(int num_sensors) : msg_counts(num_sensors, 0) {}
};

inline FusionStatus fusion_apply(FusionState& state, const Message& msg,
                                 const FusionConfig& config) {
    if (state.status != FusionStatus::Running)
        throw std::logic_error("fusion_apply: message applied after decision");
    const auto& w = config.weights.at(static_cast<std::size_t>(msg.sensor));
    state.u_tilde += msg.bit ? w.w_hi : -w.w_lo;
    state.msg_counts[static_cast<std::size_t>(msg.sensor)] += 1;
    if (state.u_tilde >= config.b_tilde) {
        state.status = FusionStatus::Decided1;
        state.decision_time = msg.emit_time;
    } else if (state.u_tilde <= -config.a_tilde) {
        state.status = FusionStatus::Decided0;
        state.decision_time = msg.emit_time;
    }
    return state.status;
}

// Apply a batch of simultaneous messages in ascending sensor index,
// stopping at the first threshold crossing within the batch.
inline FusionStatus fusion_batch(FusionState& state, std::span<const Message> msgs,
                                 const FusionConfig& config) {
    if (msgs.empty()) return state.status;
    const double t = msgs.front().emit_time;
    bool sorted = true;
    for (std::size_t k = 0; k < msgs.size(); ++k) {
        if (msgs[k].emit_time != t)
            throw std::invalid_argument("fusion_batch: messages differ in emit_time");
        if (k > 0 && msgs[k].sensor < msgs[k - 1].sensor) sorted = false;
    }
    if (sorted) {
        for (const auto& m : msgs)
            if (fusion_apply(state, m, config) != FusionStatus::Running) break;
    } else {
        std::vector<Message> ordered(msgs.begin(), msgs.end());
        std::stable_sort(ordered.begin(), ordered.end(),
                         [](const Message& a, const Message& b) { return a.sensor < b.sensor; });
        for (const auto& m : ordered)
            if (fusion_apply(state, m, config) != FusionStatus::Running) break;
    }
    return state.status;
}

}  // namespace dsprt
