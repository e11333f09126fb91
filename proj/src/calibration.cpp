#include "dsprt/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "dsprt/parallel.hpp"
#include "dsprt/stats.hpp"

namespace dsprt {

CycleOutcome run_local_cycle(const HypothesisModel& model, const LocalThresholds& th,
                             int truth, NormalSampler& rng, long max_steps) {
    const double drift = model.llr_mean(truth);
    const double scale = model.llr_sd();
    double accum = 0.0;
    for (long step = 1; step <= max_steps; ++step) {
        accum += drift + scale * rng();
        if (accum >= th.delta_hi) return {1, step, accum - th.delta_hi};
        if (accum <= -th.delta_lo) return {0, step, accum + th.delta_lo};
    }
    throw std::runtime_error("run_local_cycle: no exit within max_steps");
}

namespace {

struct CycleAccum {
    std::uint64_t n = 0;
    std::uint64_t bit1 = 0;
    RunningStat abs_eta;
    RunningStat period;

    void merge(const CycleAccum& o) {
        n += o.n;
        bit1 += o.bit1;
        abs_eta.merge(o.abs_eta);
        period.merge(o.period);
    }
};

CycleAccum run_cycles(const HypothesisModel& model, const LocalThresholds& th, int truth,
                      std::uint64_t n_mc, std::uint64_t seed, int threads) {
    auto block = [&](std::uint64_t begin, std::uint64_t end) {
        CycleAccum acc;
        for (std::uint64_t i = begin; i < end; ++i) {
            NormalSampler rng(substream_seed(seed, i, static_cast<std::uint64_t>(truth)));
            const auto c = run_local_cycle(model, th, truth, rng);
            acc.n += 1;
            acc.bit1 += static_cast<std::uint64_t>(c.bit);
            acc.abs_eta.add(std::abs(c.overshoot));
            acc.period.add(static_cast<double>(c.steps));
        }
        return acc;
    };
    if (threads <= 1) return block(0, n_mc);
    std::vector<CycleAccum> parts(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (n_mc + static_cast<std::uint64_t>(threads) - 1) /
                                static_cast<std::uint64_t>(threads);
    for (int w = 0; w < threads; ++w) {
        const std::uint64_t b = static_cast<std::uint64_t>(w) * chunk;
        const std::uint64_t e = std::min(n_mc, b + chunk);
        pool.emplace_back([&, w, b, e]() {
            if (b < e) parts[static_cast<std::size_t>(w)] = block(b, e);
        });
    }
    for (auto& t : pool) t.join();
    CycleAccum acc;
    for (const auto& p : parts) acc.merge(p);
    return acc;
}

}  // namespace

QuantizationTable estimate_quantization(const HypothesisModel& model, const LocalThresholds& th,
                                        std::uint64_t n_mc, std::uint64_t seed, int threads) {
    if (n_mc < 10'000)
        throw std::invalid_argument("estimate_quantization: n_mc must be >= 10^4");

    const auto acc0 = run_cycles(model, th, 0, n_mc, seed, threads);
    const auto acc1 = run_cycles(model, th, 1, n_mc, seed, threads);

    const double n = static_cast<double>(n_mc);
    const double p0 = static_cast<double>(acc0.bit1) / n;  // P0(z=1)
    const double p1 = static_cast<double>(acc1.bit1) / n;  // P1(z=1)
    if (p0 <= 0.0 || p0 >= 1.0 || p1 <= 0.0 || p1 >= 1.0)
        throw CalibrationError(
            "estimate_quantization: an exit-side probability estimated at 0 or 1; "
            "increase n_mc for these local thresholds");
    const double q0 = 1.0 - p0, q1 = 1.0 - p1;

    QuantizationTable t;
    t.n_mc = n_mc;
    t.seed = seed;
    t.p0_bit1 = p0;
    t.p1_bit1 = p1;
    t.lambda_hi = std::log(p1 / p0);
    t.lambda_lo = std::log(q0 / q1);
    t.se_lambda_hi = std::sqrt(q1 / (n * p1) + q0 / (n * p0));
    t.se_lambda_lo = std::sqrt(p0 / (n * q0) + p1 / (n * q1));

    // I0 = KL(Bern(p0) || Bern(p1)), I1 = KL(Bern(p1) || Bern(p0))
    t.i0 = q0 * std::log(q0 / q1) + p0 * std::log(p0 / p1);
    t.i1 = p1 * std::log(p1 / p0) + q1 * std::log(q1 / q0);
    {
        const double d00 = std::log(p0 * q1 / (q0 * p1));
        const double d01 = q0 / q1 - p0 / p1;
        t.se_i0 = std::sqrt(d00 * d00 * p0 * q0 / n + d01 * d01 * p1 * q1 / n);
        const double d11 = std::log(p1 * q0 / (q1 * p0));
        const double d10 = q1 / q0 - p1 / p0;
        t.se_i1 = std::sqrt(d11 * d11 * p1 * q1 / n + d10 * d10 * p0 * q0 / n);
    }

    t.theta0 = acc0.abs_eta.mean();
    t.theta1 = acc1.abs_eta.mean();
    t.se_theta0 = acc0.abs_eta.se();
    t.se_theta1 = acc1.abs_eta.se();
    if (t.theta1 > t.theta0) {
        t.theta_hat = t.theta1;
        t.se_theta = t.se_theta1;
    } else {
        t.theta_hat = t.theta0;
        t.se_theta = t.se_theta0;
    }
    t.mean_period0 = acc0.period.mean();
    t.mean_period1 = acc1.period.mean();
    t.se_period0 = acc0.period.se();
    t.se_period1 = acc1.period.se();
    return t;
}

KlBounds kl_lower_bounds(const LocalThresholds& th) {
    const double lo = th.delta_lo, hi = th.delta_hi;
    const double den0 = std::exp(hi) - std::exp(-lo);
    const double den1 = std::exp(lo) - std::exp(-hi);
    return {(lo * (std::exp(hi) - 1.0) + hi * (std::exp(-lo) - 1.0)) / den0,
            (hi * (std::exp(lo) - 1.0) + lo * (std::exp(-hi) - 1.0)) / den1};
}

double lorden_overshoot_bound_one_sided(const HypothesisModel& model, int r, int j) {
    if (r < 1) throw std::invalid_argument("lorden_overshoot_bound: r must be >= 1");
    if (j != 0 && j != 1) throw std::invalid_argument("lorden_overshoot_bound: j must be 0 or 1");
    const double mean = model.llr_mean(j);
    const double mom = gaussian_abs_moment(mean, model.llr_sd(), r + 1);
    const double ratio = (static_cast<double>(r) + 2.0) / (static_cast<double>(r) + 1.0) *
                         mom / std::abs(mean);
    return std::pow(ratio, 1.0 / static_cast<double>(r));
}

double lorden_overshoot_bound(const HypothesisModel& model, int r) {
    return lorden_overshoot_bound_one_sided(model, r, 0) +
           lorden_overshoot_bound_one_sided(model, r, 1);
}

namespace {

// Error-level curve of one hypothesis: sorted per-trial "deepest adverse
// excursion" levels; err_count(t) = #levels >= t is the number of trials the
// candidate threshold t would have decided wrongly.
struct LevelCurve {
    std::vector<double> levels;  // ascending

    std::uint64_t err_count(double t) const {
        return static_cast<std::uint64_t>(
            levels.end() - std::lower_bound(levels.begin(), levels.end(), t));
    }
};

LevelCurve collect_levels(const SystemConfig& base, int truth, double box_a, double box_b,
                          std::uint64_t n_mc, std::uint64_t seed, int threads) {
    SystemConfig cfg = base;
    cfg.truth = truth;
    cfg.fusion = FusionConfig(box_a, box_b, base.fusion.weights);
    cfg.max_steps = std::max(cfg.max_steps, default_max_steps(cfg));
    const double huge = std::max(box_a, box_b) + 1.0;
    auto levels = parallel_trials<double>(n_mc, threads, [&](std::uint64_t idx) {
        const auto ext = run_dsprt_extremes_trial(cfg, seed, idx);
        if (truth == 1)  // adverse excursion is toward the lower threshold
            return ext.exit_side == 1 ? -ext.min_u_tilde : huge;
        return ext.exit_side == 0 ? ext.max_u_tilde : huge;
    });
    std::sort(levels.begin(), levels.end());
    return {std::move(levels)};
}

// Smallest t in [0, hi] whose Wilson upper bound is at or below target.
double bisect_threshold(const LevelCurve& curve, std::uint64_t n, double hi, double target,
                        const char* which) {
    if (wilson_upper(curve.err_count(hi), n) > target)
        throw CalibrationError(std::string("calibrate_fusion_thresholds: cannot certify the ") +
                               which +
                               " error constraint even at the analytic envelope; "
                               "increase n_mc");
    double lo = 0.0, up = hi;
    while (up - lo > 0.01) {  // bisection tolerance in log-likelihood units
        const double mid = 0.5 * (lo + up);
        if (wilson_upper(curve.err_count(mid), n) <= target)
            up = mid;
        else
            lo = mid;
    }
    return up;
}

}  // namespace

CalibratedThresholds calibrate_fusion_thresholds(const SystemConfig& cfg,
                                                 const ErrorLevels& levels, std::uint64_t n_mc,
                                                 std::uint64_t seed, int threads) {
    if (levels.alpha < 20.0 / static_cast<double>(n_mc) ||
        levels.beta < 20.0 / static_cast<double>(n_mc))
        throw CalibrationError(
            "calibrate_fusion_thresholds: targets below MC resolution (need alpha, beta >= "
            "20/n_mc)");

    // largest simultaneous jump of the fusion statistic: sum of the actual
    // per-message weights (local thresholds in continuous mode, bit-LLR
    // weights in discrete mode)
    const double C = cfg.fusion.max_total_jump();

    CalibratedThresholds out;
    out.n_mc = n_mc;
    out.envelope_a = std::abs(std::log(levels.beta)) + C;
    out.envelope_b = std::abs(std::log(levels.alpha)) + C;

    const auto curve1 = collect_levels(cfg, 1, out.envelope_a, out.envelope_b, n_mc,
                                       splitmix64(seed += 1), threads);
    out.a_tilde = bisect_threshold(curve1, n_mc, out.envelope_a, levels.beta, "Type-II");
    out.achieved_beta = static_cast<double>(curve1.err_count(out.a_tilde)) /
                        static_cast<double>(n_mc);

    const auto curve0 = collect_levels(cfg, 0, out.envelope_a, out.envelope_b, n_mc,
                                       splitmix64(seed += 1), threads);
    out.b_tilde = bisect_threshold(curve0, n_mc, out.envelope_b, levels.alpha, "Type-I");
    out.achieved_alpha = static_cast<double>(curve0.err_count(out.b_tilde)) /
                         static_cast<double>(n_mc);
    return out;
}

double threshold_for_mean_period(const HypothesisModel& model, int truth, double target_period,
                                 std::uint64_t n_mc, std::uint64_t seed, double tol) {
    if (!(target_period > 0.0))
        throw std::invalid_argument("threshold_for_mean_period: target must be > 0");
    // common random numbers across evaluations: pathwise the exit time of the
    // symmetric interval is nondecreasing in delta, so the curve is monotone
    auto mean_period = [&](double delta) {
        const LocalThresholds th(delta, delta);
        RunningStat stat;
        for (std::uint64_t i = 0; i < n_mc; ++i) {
            NormalSampler rng(substream_seed(seed, i, static_cast<std::uint64_t>(truth)));
            stat.add(static_cast<double>(run_local_cycle(model, th, truth, rng).steps) * model.h);
        }
        return stat.mean();
    };
    double lo = model.llr_sd() * 1e-3;
    double hi = std::max(1.0, 2.0 * lo);
    while (mean_period(hi) < target_period) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e4) throw CalibrationError("threshold_for_mean_period: bracket failed");
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mean_period(mid) < target_period)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace dsprt
