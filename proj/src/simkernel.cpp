#include "dsprt/simkernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dsprt/parallel.hpp"
#include "dsprt/rng.hpp"

namespace dsprt {

void SystemConfig::validate() const {
    if (K < 1) throw std::invalid_argument("SystemConfig: K must be >= 1");
    if (models.size() != static_cast<std::size_t>(K) ||
        local.size() != static_cast<std::size_t>(K) ||
        fusion.weights.size() != static_cast<std::size_t>(K))
        throw std::invalid_argument("SystemConfig: per-sensor vectors must have length K");
    if (truth != 0 && truth != 1)
        throw std::invalid_argument("SystemConfig: truth must be 0 or 1");
    if (max_steps <= 0) throw std::invalid_argument("SystemConfig: max_steps must be > 0");
    const double s = models.front().h;
    for (const auto& m : models)
        if (m.h != s)
            throw std::invalid_argument("SystemConfig: all sensors must share one step length");
}

std::vector<FusionWeights> continuous_weights(const std::vector<LocalThresholds>& local) {
    std::vector<FusionWeights> w;
    w.reserve(local.size());
    for (const auto& th : local) w.push_back({th.delta_lo, th.delta_hi});
    return w;
}

long default_max_steps(const SystemConfig& cfg) {
    double rate = 0.0;
    for (const auto& m : cfg.models) rate += 0.5 * m.mu * m.mu * m.h;
    if (!(rate > 0.0)) return 1'000'000;
    const double span = std::max(cfg.fusion.a_tilde, cfg.fusion.b_tilde) +
                        cfg.fusion.max_total_jump();
    const long steps = static_cast<long>(200.0 * span / rate) + 1;
    return std::max<long>(steps, 10'000);
}

namespace {

struct SensorDriver {
    NormalSampler rng;
    double drift;
    double scale;

    SensorDriver(std::uint64_t seed, const HypothesisModel& m, int truth)
        : rng(seed), drift(m.llr_mean(truth)), scale(m.llr_sd()) {}

    double draw() { return drift + scale * rng(); }
};

std::vector<SensorDriver> make_drivers(const SystemConfig& cfg, std::uint64_t root,
                                       std::uint64_t trial) {
    std::vector<SensorDriver> d;
    d.reserve(static_cast<std::size_t>(cfg.K));
    for (int i = 0; i < cfg.K; ++i)
        d.emplace_back(substream_seed(root, trial, static_cast<std::uint64_t>(i)),
                       cfg.models[static_cast<std::size_t>(i)], cfg.truth);
    return d;
}

}  // namespace

TrialResult run_dsprt_trial(const SystemConfig& cfg, std::uint64_t root_seed,
                            std::uint64_t trial_index, const TrialOptions& opt) {
    cfg.validate();
    const double s = cfg.time_per_step();
    auto drivers = make_drivers(cfg, root_seed, trial_index);

    std::vector<SensorState> sensors(static_cast<std::size_t>(cfg.K));
    FusionState fstate(cfg.K);

    TrialResult res;
    res.seed = substream_seed(root_seed, trial_index, static_cast<std::uint64_t>(cfg.K));
    if (opt.collect_cycles) res.cycles.resize(static_cast<std::size_t>(cfg.K));

    double u_total = 0.0;
    std::vector<Message> batch;
    batch.reserve(static_cast<std::size_t>(cfg.K));

    for (long step = 1; step <= cfg.max_steps; ++step) {
        const double t = static_cast<double>(step) * s;
        batch.clear();
        for (int i = 0; i < cfg.K; ++i) {
            const double inc = drivers[static_cast<std::size_t>(i)].draw();
            u_total += inc;
            if (opt.track_gap) {
                const double a = std::abs(inc);
                if (a > res.max_abs_step_llr) res.max_abs_step_llr = a;
            }
            auto msg = sensor_step(sensors[static_cast<std::size_t>(i)], inc,
                                   cfg.local[static_cast<std::size_t>(i)], i, t);
            if (msg) {
                batch.push_back(*msg);
                if (opt.collect_cycles)
                    res.cycles[static_cast<std::size_t>(i)].push_back(
                        {msg->bit, msg->period_steps, msg->overshoot});
            }
        }
        if (!batch.empty()) fusion_batch(fstate, batch, cfg.fusion);
        if (opt.track_gap) {
            const double gap = std::abs(u_total - fstate.u_tilde);
            if (gap > res.max_tracking_gap) res.max_tracking_gap = gap;
        }
        if (fstate.status != FusionStatus::Running) {
            res.decision = fstate.status == FusionStatus::Decided1 ? 1 : 0;
            res.stop_time = t;
            res.u_at_stop = u_total;
            res.u_tilde_at_stop = fstate.u_tilde;
            break;
        }
    }

    res.msg_counts = fstate.msg_counts;
    res.overshoot_abs_sums.resize(static_cast<std::size_t>(cfg.K));
    for (int i = 0; i < cfg.K; ++i)
        res.overshoot_abs_sums[static_cast<std::size_t>(i)] =
            sensors[static_cast<std::size_t>(i)].overshoot_abs_sum;
    if (res.aborted()) {
        res.stop_time = static_cast<double>(cfg.max_steps) * s;
        res.u_at_stop = u_total;
        res.u_tilde_at_stop = fstate.u_tilde;
        return res;
    }

    // Complete the in-progress cycle at each sensor so per-cycle payload sums
    // can run to index m_T + 1.
    if (opt.collect_cycles && opt.one_extra_cycle) {
        for (int i = 0; i < cfg.K; ++i) {
            auto& st = sensors[static_cast<std::size_t>(i)];
            const long target = st.emit_count + 1;
            long guard = cfg.max_steps;
            while (st.emit_count < target && guard-- > 0) {
                const double inc = drivers[static_cast<std::size_t>(i)].draw();
                auto msg = sensor_step(st, inc, cfg.local[static_cast<std::size_t>(i)], i, 0.0);
                if (msg)
                    res.cycles[static_cast<std::size_t>(i)].push_back(
                        {msg->bit, msg->period_steps, msg->overshoot});
            }
            if (st.emit_count < target)
                throw std::runtime_error("run_dsprt_trial: extra cycle did not complete");
        }
    }
    return res;
}

namespace {

TrialResult centralized_loop(const SystemConfig& cfg, const std::vector<HypothesisModel>& models,
                             double step_len, double A, double B, std::uint64_t root_seed,
                             std::uint64_t trial_index) {
    if (!(A > 0.0) || !(B > 0.0))
        throw std::invalid_argument("centralized SPRT: thresholds must be > 0");
    std::vector<SensorDriver> drivers;
    drivers.reserve(models.size());
    for (std::size_t i = 0; i < models.size(); ++i)
        drivers.emplace_back(substream_seed(root_seed, trial_index, i), models[i], cfg.truth);

    TrialResult res;
    res.seed = substream_seed(root_seed, trial_index, models.size());
    double u = 0.0;
    for (long step = 1; step <= cfg.max_steps; ++step) {
        for (auto& d : drivers) u += d.draw();
        if (u >= B || u <= -A) {
            res.decision = u >= B ? 1 : 0;
            res.stop_time = static_cast<double>(step) * step_len;
            res.u_at_stop = u;
            res.u_tilde_at_stop = u;
            return res;
        }
    }
    res.stop_time = static_cast<double>(cfg.max_steps) * step_len;
    res.u_at_stop = u;
    res.u_tilde_at_stop = u;
    return res;
}

}  // namespace

TrialResult run_centralized_sprt_trial(const SystemConfig& cfg, double A, double B,
                                       std::uint64_t root_seed, std::uint64_t trial_index) {
    cfg.validate();
    return centralized_loop(cfg, cfg.models, cfg.time_per_step(), A, B, root_seed, trial_index);
}

TrialResult run_deterministic_sampling_sprt_trial(const SystemConfig& cfg, double period_h,
                                                  double A, double B, std::uint64_t root_seed,
                                                  std::uint64_t trial_index) {
    cfg.validate();
    if (!(period_h > 0.0))
        throw std::invalid_argument("deterministic sampling: period must be > 0");
    std::vector<HypothesisModel> sampled;
    sampled.reserve(cfg.models.size());
    for (const auto& m : cfg.models) sampled.push_back(HypothesisModel::gaussian(m.mu, period_h));
    return centralized_loop(cfg, sampled, period_h, A, B, root_seed, trial_index);
}

BoxExtremes run_dsprt_extremes_trial(const SystemConfig& cfg, std::uint64_t root_seed,
                                     std::uint64_t trial_index) {
    cfg.validate();
    const double s = cfg.time_per_step();
    auto drivers = make_drivers(cfg, root_seed, trial_index);
    std::vector<SensorState> sensors(static_cast<std::size_t>(cfg.K));
    FusionState fstate(cfg.K);

    BoxExtremes ext;
    std::vector<Message> batch;
    batch.reserve(static_cast<std::size_t>(cfg.K));
    for (long step = 1; step <= cfg.max_steps; ++step) {
        const double t = static_cast<double>(step) * s;
        batch.clear();
        for (int i = 0; i < cfg.K; ++i) {
            const double inc = drivers[static_cast<std::size_t>(i)].draw();
            auto msg = sensor_step(sensors[static_cast<std::size_t>(i)], inc,
                                   cfg.local[static_cast<std::size_t>(i)], i, t);
            if (msg) batch.push_back(*msg);
        }
        if (batch.empty()) continue;
        // apply message by message: intra-batch extremes matter for reading
        // off the error indicator of smaller candidate thresholds
        for (const auto& m : batch) {
            fusion_apply(fstate, m, cfg.fusion);
            if (fstate.u_tilde < ext.min_u_tilde) ext.min_u_tilde = fstate.u_tilde;
            if (fstate.u_tilde > ext.max_u_tilde) ext.max_u_tilde = fstate.u_tilde;
            if (fstate.status != FusionStatus::Running) {
                ext.exit_side = fstate.status == FusionStatus::Decided1 ? 1 : 0;
                return ext;
            }
        }
    }
    return ext;
}

WaldIdentityReport wald_identity_check(const SystemConfig& cfg, std::uint64_t seed,
                                       std::uint64_t n_trials, Payload payload, int threads) {
    cfg.validate();
    TrialOptions opt;
    opt.collect_cycles = true;
    opt.one_extra_cycle = true;

    struct PerTrial {
        std::vector<double> sum_m1;   // sum over cycles 1..m+1
        std::vector<double> sum_m;    // sum over cycles 1..m
        std::vector<double> first;    // cycle 1 payload
        std::vector<double> m;        // number of cycles by the stopping time
        bool ok = false;
    };

    auto payload_of = [&](const CycleRecord& c, int sensor) -> double {
        switch (payload) {
            case Payload::One: return 1.0;
            case Payload::Lambda: {
                const auto& w = cfg.fusion.weights[static_cast<std::size_t>(sensor)];
                return c.bit ? w.w_hi : -w.w_lo;
            }
            case Payload::AbsOvershoot: return std::abs(c.overshoot);
            case Payload::Period: return static_cast<double>(c.period_steps);
        }
        return 0.0;
    };

    auto trials = parallel_trials<PerTrial>(n_trials, threads, [&](std::uint64_t idx) {
        PerTrial pt;
        auto res = run_dsprt_trial(cfg, seed, idx, opt);
        if (res.aborted()) return pt;
        pt.ok = true;
        pt.sum_m1.resize(static_cast<std::size_t>(cfg.K));
        pt.sum_m.resize(static_cast<std::size_t>(cfg.K));
        pt.first.resize(static_cast<std::size_t>(cfg.K));
        pt.m.resize(static_cast<std::size_t>(cfg.K));
        for (int i = 0; i < cfg.K; ++i) {
            const auto& cyc = res.cycles[static_cast<std::size_t>(i)];
            const std::size_t m = cyc.size() - 1;  // last entry is cycle m+1
            double s1 = 0.0;
            for (std::size_t n = 0; n < m; ++n) s1 += payload_of(cyc[n], i);
            pt.sum_m[static_cast<std::size_t>(i)] = s1;
            pt.sum_m1[static_cast<std::size_t>(i)] = s1 + payload_of(cyc[m], i);
            pt.first[static_cast<std::size_t>(i)] = payload_of(cyc[0], i);
            pt.m[static_cast<std::size_t>(i)] = static_cast<double>(m);
        }
        return pt;
    });

    WaldIdentityReport rep;
    rep.payload = payload;
    rep.sensors.resize(static_cast<std::size_t>(cfg.K));

    for (int i = 0; i < cfg.K; ++i) {
        // moments of (S, z1, m) for the delta-method SE of S - z1*(m+1)
        double n = 0.0;
        double mS = 0.0, mZ = 0.0, mM = 0.0, mSp = 0.0;
        for (const auto& pt : trials) {
            if (!pt.ok) continue;
            n += 1.0;
            mS += pt.sum_m1[static_cast<std::size_t>(i)];
            mSp += pt.sum_m[static_cast<std::size_t>(i)];
            mZ += pt.first[static_cast<std::size_t>(i)];
            mM += pt.m[static_cast<std::size_t>(i)];
        }
        if (n < 2) throw std::runtime_error("wald_identity_check: all trials aborted");
        mS /= n; mSp /= n; mZ /= n; mM /= n;
        double cSS = 0, cZZ = 0, cMM = 0, cSZ = 0, cSM = 0, cZM = 0;
        for (const auto& pt : trials) {
            if (!pt.ok) continue;
            const double dS = pt.sum_m1[static_cast<std::size_t>(i)] - mS;
            const double dZ = pt.first[static_cast<std::size_t>(i)] - mZ;
            const double dM = pt.m[static_cast<std::size_t>(i)] - mM;
            cSS += dS * dS; cZZ += dZ * dZ; cMM += dM * dM;
            cSZ += dS * dZ; cSM += dS * dM; cZM += dZ * dM;
        }
        const double div = n - 1.0;
        cSS /= div; cZZ /= div; cMM /= div; cSZ /= div; cSM /= div; cZM /= div;

        auto& out = rep.sensors[static_cast<std::size_t>(i)];
        out.lhs = mS;
        out.rhs = mZ * (mM + 1.0);
        out.diff = out.lhs - out.rhs;
        const double gS = 1.0, gZ = -(mM + 1.0), gM = -mZ;
        const double var = (gS * gS * cSS + gZ * gZ * cZZ + gM * gM * cMM +
                            2.0 * (gS * gZ * cSZ + gS * gM * cSM + gZ * gM * cZM)) / n;
        out.se = std::sqrt(std::max(var, 0.0));

        double M = 0.0;
        if (payload == Payload::One) {
            out.bounded = true;
            M = 1.0;
        } else if (payload == Payload::Lambda) {
            out.bounded = true;
            const auto& w = cfg.fusion.weights[static_cast<std::size_t>(i)];
            M = w.w_lo + w.w_hi;
        }
        if (out.bounded) {
            out.slack = std::abs(mSp - mZ * mM);
            out.slack_bound = 2.0 * M;
        }
    }
    rep.n_trials = static_cast<std::uint64_t>(
        std::count_if(trials.begin(), trials.end(), [](const PerTrial& p) { return p.ok; }));
    return rep;
}

}  // namespace dsprt
