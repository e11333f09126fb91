#include "dsprt/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include "dsprt/parallel.hpp"
#include "dsprt/stats.hpp"

namespace dsprt {

Scheme scheme_from_string(const std::string& s) {
    if (s == "dsprt") return Scheme::Dsprt;
    if (s == "sprt_cont") return Scheme::SprtCont;
    if (s == "sprt_sampled") return Scheme::SprtSampled;
    throw ConfigError("unknown scheme: " + s +
                      " (expected dsprt, sprt_cont or sprt_sampled)");
}

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Dsprt: return "dsprt";
        case Scheme::SprtCont: return "sprt_cont";
        case Scheme::SprtSampled: return "sprt_sampled";
    }
    return "?";
}

namespace {

std::vector<double> broadcast(std::vector<double> v, int k, const char* what) {
    if (v.size() == 1) v.assign(static_cast<std::size_t>(k), v[0]);
    if (v.size() != static_cast<std::size_t>(k))
        throw ConfigError(std::string(what) + ": expected 1 or k values");
    return v;
}

TimeMode mode_from_string(const std::string& s) {
    if (s == "continuous") return TimeMode::Continuous;
    if (s == "discrete") return TimeMode::Discrete;
    throw ConfigError("mode must be `continuous` or `discrete`, got: " + s);
}

std::vector<HypothesisModel> build_models(TimeMode mode, const std::vector<double>& mu,
                                          double step) {
    std::vector<HypothesisModel> models;
    models.reserve(mu.size());
    for (double m : mu)
        models.push_back(mode == TimeMode::Continuous ? HypothesisModel::brownian(m, step)
                                                      : HypothesisModel::gaussian(m, step));
    return models;
}

// quantization tables per sensor, computed once per distinct (model, thresholds)
std::vector<QuantizationTable> quantization_tables(const std::vector<HypothesisModel>& models,
                                                   const std::vector<LocalThresholds>& local,
                                                   std::uint64_t n_mc, std::uint64_t seed,
                                                   int threads) {
    std::map<std::tuple<double, double, double, double>, QuantizationTable> cache;
    std::vector<QuantizationTable> out;
    out.reserve(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto key = std::make_tuple(models[i].mu, models[i].h, local[i].delta_lo,
                                         local[i].delta_hi);
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, estimate_quantization(models[i], local[i], n_mc,
                                                          splitmix64(seed += 1), threads))
                     .first;
        out.push_back(it->second);
    }
    return out;
}

std::vector<FusionWeights> weights_from_tables(const std::vector<QuantizationTable>& tables) {
    std::vector<FusionWeights> w;
    w.reserve(tables.size());
    for (const auto& t : tables) w.push_back({t.lambda_lo, t.lambda_hi});
    return w;
}

}  // namespace

SimulateSetup build_system_from_config(ConfigMap& cfg, std::uint64_t seed, int threads) {
    SimulateSetup setup;
    const TimeMode mode = mode_from_string(cfg.get_string("mode", "continuous"));
    std::vector<double> mu = cfg.get_doubles("mu", {1.0});
    int k = cfg.get_int("k", static_cast<int>(mu.size()));
    if (k < 1) throw ConfigError("k must be >= 1");
    mu = broadcast(std::move(mu), k, "mu");
    const double step = mode == TimeMode::Continuous ? cfg.get_double("dt", 1e-3)
                                                     : cfg.get_double("h", 1.0);
    if (!(step > 0.0)) throw ConfigError("step length must be > 0");

    std::vector<double> dlo, dhi;
    if (cfg.has("delta")) {
        dlo = broadcast(cfg.get_doubles("delta"), k, "delta");
        dhi = dlo;
    } else {
        dlo = broadcast(cfg.get_doubles("delta_lo", {1.0}), k, "delta_lo");
        dhi = broadcast(cfg.get_doubles("delta_hi", {1.0}), k, "delta_hi");
    }

    const ErrorLevels levels(cfg.get_double("alpha", 0.01), cfg.get_double("beta", 0.01));
    const int truth = cfg.get_int("truth", 1);
    const long max_steps = cfg.get_long("max_steps", 0);
    const std::string thresholds = cfg.get_string("thresholds", "envelope");
    const std::uint64_t quant_n_mc = cfg.get_u64("quant_n_mc", 200'000);
    const std::uint64_t calib_n_mc = cfg.get_u64("calib_n_mc", 200'000);

    SystemConfig sys;
    sys.K = k;
    sys.mode = mode;
    sys.truth = truth;
    sys.models = build_models(mode, mu, step);
    sys.local.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        sys.local.emplace_back(dlo[static_cast<std::size_t>(i)],
                               dhi[static_cast<std::size_t>(i)]);

    std::vector<FusionWeights> w;
    if (mode == TimeMode::Continuous) {
        w = continuous_weights(sys.local);
    } else {
        setup.tables = quantization_tables(sys.models, sys.local, quant_n_mc,
                                           mix64(seed + 0x71), threads);
        w = weights_from_tables(setup.tables);
    }

    double cjump = 0.0;
    for (const auto& fw : w) cjump += fw.w_lo + fw.w_hi;
    sys.fusion = FusionConfig(std::abs(std::log(levels.beta)) + cjump,
                              std::abs(std::log(levels.alpha)) + cjump, w);

    if (thresholds == "calibrate") {
        setup.calib = calibrate_fusion_thresholds(sys, levels, calib_n_mc,
                                                  mix64(seed + 0x72), threads);
        setup.calibrated = true;
        sys.fusion = FusionConfig(setup.calib.a_tilde, setup.calib.b_tilde, sys.fusion.weights);
    } else if (thresholds != "envelope") {
        throw ConfigError("thresholds must be `envelope` or `calibrate`, got: " + thresholds);
    }

    sys.max_steps = max_steps > 0 ? max_steps : default_max_steps(sys);
    sys.validate();
    setup.sys = sys;
    return setup;
}

// ---------------------------------------------------------------------------
// centralized calibration

namespace {

BoxExtremes centralized_extremes(const std::vector<HypothesisModel>& models, int truth,
                                 double box_a, double box_b, long max_steps,
                                 std::uint64_t root_seed, std::uint64_t trial_index) {
    std::vector<NormalSampler> rngs;
    rngs.reserve(models.size());
    for (std::size_t i = 0; i < models.size(); ++i)
        rngs.emplace_back(substream_seed(root_seed, trial_index, i));
    BoxExtremes ext;
    double u = 0.0;
    for (long step = 1; step <= max_steps; ++step) {
        for (std::size_t i = 0; i < models.size(); ++i)
            u += models[i].llr_mean(truth) + models[i].llr_sd() * rngs[i]();
        if (u < ext.min_u_tilde) ext.min_u_tilde = u;
        if (u > ext.max_u_tilde) ext.max_u_tilde = u;
        if (u >= box_b || u <= -box_a) {
            ext.exit_side = u >= box_b ? 1 : 0;
            return ext;
        }
    }
    return ext;
}

}  // namespace

CalibratedThresholds calibrate_centralized_thresholds(
    const std::vector<HypothesisModel>& models, const ErrorLevels& levels, std::uint64_t n_mc,
    std::uint64_t seed, int threads) {
    if (models.empty())
        throw std::invalid_argument("calibrate_centralized_thresholds: no sensors");
    if (levels.alpha < 20.0 / static_cast<double>(n_mc) ||
        levels.beta < 20.0 / static_cast<double>(n_mc))
        throw CalibrationError(
            "calibrate_centralized_thresholds: targets below MC resolution");

    const auto wald = wald_thresholds(levels);
    // box slightly beyond the analytic thresholds: leaves certification
    // headroom when the analytic point is near-exact (continuous paths)
    const double slack = 1.0;
    const double box_a = wald.A + slack, box_b = wald.B + slack;

    double rate = 0.0;
    for (const auto& m : models) rate += 0.5 * m.mu * m.mu * m.h;
    if (!(rate > 0.0))
        throw std::invalid_argument("calibrate_centralized_thresholds: zero total drift");
    const long max_steps =
        std::max<long>(static_cast<long>(200.0 * std::max(box_a, box_b) / rate) + 1, 10'000);

    CalibratedThresholds out;
    out.n_mc = n_mc;
    out.envelope_a = box_a;
    out.envelope_b = box_b;

    auto curve = [&](int truth, std::uint64_t s) {
        auto levels_vec = parallel_trials<double>(n_mc, threads, [&](std::uint64_t idx) {
            const auto ext =
                centralized_extremes(models, truth, box_a, box_b, max_steps, s, idx);
            const double huge = std::max(box_a, box_b) + 1.0;
            if (truth == 1) return ext.exit_side == 1 ? -ext.min_u_tilde : huge;
            return ext.exit_side == 0 ? ext.max_u_tilde : huge;
        });
        std::sort(levels_vec.begin(), levels_vec.end());
        return levels_vec;
    };

    auto bisect = [&](const std::vector<double>& lv, double hi, double target,
                      const char* which) {
        auto err_count = [&](double t) {
            return static_cast<std::uint64_t>(lv.end() -
                                              std::lower_bound(lv.begin(), lv.end(), t));
        };
        if (wilson_upper(err_count(hi), n_mc) > target)
            throw CalibrationError(
                std::string("calibrate_centralized_thresholds: cannot certify the ") + which +
                " error constraint; increase n_mc");
        double lo = 0.0, up = hi;
        while (up - lo > 0.01) {
            const double mid = 0.5 * (lo + up);
            if (wilson_upper(err_count(mid), n_mc) <= target)
                up = mid;
            else
                lo = mid;
        }
        return up;
    };

    const auto lv1 = curve(1, splitmix64(seed += 1));
    out.a_tilde = bisect(lv1, box_a, levels.beta, "Type-II");
    out.achieved_beta =
        static_cast<double>(lv1.end() - std::lower_bound(lv1.begin(), lv1.end(), out.a_tilde)) /
        static_cast<double>(n_mc);
    const auto lv0 = curve(0, splitmix64(seed += 1));
    out.b_tilde = bisect(lv0, box_b, levels.alpha, "Type-I");
    out.achieved_alpha =
        static_cast<double>(lv0.end() - std::lower_bound(lv0.begin(), lv0.end(), out.b_tilde)) /
        static_cast<double>(n_mc);
    return out;
}

// ---------------------------------------------------------------------------
// sweep

SweepSpec sweep_spec_from_config(ConfigMap& cfg) {
    SweepSpec spec;
    spec.mode = mode_from_string(cfg.get_string("mode", "continuous"));
    std::vector<double> mu = cfg.get_doubles("mu", {1.0});
    spec.K = cfg.get_int("k", static_cast<int>(mu.size()));
    if (spec.K < 1) throw ConfigError("k must be >= 1");
    spec.mu = broadcast(std::move(mu), spec.K, "mu");
    spec.dt = cfg.get_double("dt", 1e-3);
    spec.h = cfg.get_double("h", 1.0);
    spec.delta_grid = cfg.get_doubles("delta_grid", {2.0});
    spec.alpha_grid = cfg.get_doubles("alpha_grid", {1e-1, 1e-2, 1e-3, 1e-4});
    for (const auto& s :
         cfg.get_strings("schemes", {"dsprt", "sprt_cont", "sprt_sampled"}))
        spec.schemes.push_back(scheme_from_string(s));
    spec.sampled_h = cfg.get_double("sampled_h", 0.0);
    spec.trials = cfg.get_u64("trials", 20'000);
    spec.calib_n_mc = cfg.get_u64("calib_n_mc", 200'000);
    spec.quant_n_mc = cfg.get_u64("quant_n_mc", 200'000);
    for (double d : spec.delta_grid)
        if (!(d > 0.0)) throw ConfigError("delta_grid entries must be > 0");
    for (double a : spec.alpha_grid)
        if (!(a > 0.0 && a < 0.5)) throw ConfigError("alpha_grid entries must lie in (0,0.5)");
    return spec;
}

namespace {

// pooled trial statistics of one (scheme, grid point) row
template <typename RunFn>
void measure_row(SweepRow& row, std::uint64_t trials, std::uint64_t row_seed, int threads,
                 RunFn&& run) {
    RunningStat delay, u0, u1;
    std::uint64_t err0 = 0, err1 = 0;
    double msg_sum = 0.0, time_sum = 0.0;
    for (int truth = 0; truth <= 1; ++truth) {
        const std::uint64_t root = mix64(row_seed + static_cast<std::uint64_t>(truth));
        auto results = parallel_trials<TrialResult>(
            trials, threads, [&](std::uint64_t idx) { return run(truth, root, idx); });
        for (const auto& r : results) {
            delay.add(r.stop_time);
            if (truth == 0) {
                u0.add(-r.u_at_stop);
                if (r.decision != 0) ++err0;  // aborted counts as an error
            } else {
                u1.add(r.u_at_stop);
                if (r.decision != 1) ++err1;
            }
            for (long c : r.msg_counts) msg_sum += static_cast<double>(c);
            time_sum += r.stop_time;
        }
    }
    row.n_trials = trials;
    row.mean_delay = delay.mean();
    row.se_delay = delay.se();
    row.kl0 = u0.mean();
    row.se_kl0 = u0.se();
    row.kl1 = u1.mean();
    row.se_kl1 = u1.se();
    const double n = static_cast<double>(trials);
    row.err_alpha = static_cast<double>(err0) / n;
    row.err_beta = static_cast<double>(err1) / n;
    row.se_alpha = binom_se(err0, trials);
    row.se_beta = binom_se(err1, trials);
    if (msg_sum > 0.0 && time_sum > 0.0) row.msgs_per_time = msg_sum / time_sum;
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec, std::uint64_t seed, int threads,
                                std::ostream* log) {
    const double step = spec.mode == TimeMode::Continuous ? spec.dt : spec.h;
    const auto models = build_models(spec.mode, spec.mu, step);
    std::vector<SweepRow> rows;
    std::uint64_t row_counter = 0;

    for (double alpha : spec.alpha_grid) {
        const ErrorLevels levels(alpha, alpha);
        const auto wald = wald_thresholds(levels);
        for (Scheme scheme : spec.schemes) {
            const bool per_delta = scheme != Scheme::SprtCont;
            const std::vector<double> deltas =
                per_delta ? spec.delta_grid : std::vector<double>{0.0};
            for (double delta : deltas) {
                SweepRow row;
                row.scheme = scheme_name(scheme);
                row.alpha = alpha;
                row.beta = alpha;
                row.delta = delta;
                const std::uint64_t row_seed =
                    substream_seed(seed, row_counter++, 0xA11CE);
                row.seed = row_seed;
                if (log)
                    *log << "sweep: alpha=" << alpha << " scheme=" << row.scheme
                         << " delta=" << delta << "\n" << std::flush;

                // mean messaging period of the 1-bit scheme at this delta;
                // also the matched period of the sampled comparison scheme
                double mean_period = 0.0;
                std::vector<QuantizationTable> tables;
                std::vector<LocalThresholds> local;
                if (per_delta) {
                    local.assign(static_cast<std::size_t>(spec.K),
                                 LocalThresholds(delta, delta));
                    if (spec.mode == TimeMode::Continuous) {
                        // exact for continuous paths: E_j[period] = E_j[u_exit]/rate
                        double acc = 0.0;
                        for (int i = 0; i < spec.K; ++i) {
                            const auto kb = kl_lower_bounds(local[0]);
                            const double rate =
                                0.5 * spec.mu[static_cast<std::size_t>(i)] *
                                spec.mu[static_cast<std::size_t>(i)];
                            acc += 0.5 * (kb.i0_lb + kb.i1_lb) / rate;
                        }
                        mean_period = acc / spec.K;
                    } else {
                        tables = quantization_tables(models, local, spec.quant_n_mc,
                                                     mix64(row_seed + 0x51), threads);
                        double acc = 0.0;
                        for (const auto& t : tables)
                            acc += 0.5 * (t.mean_period0 + t.mean_period1) * spec.h;
                        mean_period = acc / spec.K;
                    }
                }

                if (scheme == Scheme::Dsprt) {
                    SystemConfig sys;
                    sys.K = spec.K;
                    sys.mode = spec.mode;
                    sys.models = models;
                    sys.local = local;
                    auto w = spec.mode == TimeMode::Continuous ? continuous_weights(local)
                                                               : weights_from_tables(tables);
                    double cjump = 0.0;
                    for (const auto& fw : w) cjump += fw.w_lo + fw.w_hi;
                    sys.fusion =
                        FusionConfig(std::abs(std::log(levels.beta)) + cjump,
                                     std::abs(std::log(levels.alpha)) + cjump, w);
                    sys.max_steps = default_max_steps(sys);
                    const auto calib = calibrate_fusion_thresholds(
                        sys, levels, spec.calib_n_mc, mix64(row_seed + 0x52), threads);
                    sys.fusion = FusionConfig(calib.a_tilde, calib.b_tilde, w);
                    sys.max_steps = default_max_steps(sys);
                    row.a_thresh = calib.a_tilde;
                    row.b_thresh = calib.b_tilde;
                    row.period = step;
                    measure_row(row, spec.trials, mix64(row_seed + 0x53), threads,
                                [&](int truth, std::uint64_t root, std::uint64_t idx) {
                                    SystemConfig c = sys;
                                    c.truth = truth;
                                    return run_dsprt_trial(c, root, idx);
                                });
                } else if (scheme == Scheme::SprtCont) {
                    SystemConfig sys;
                    sys.K = spec.K;
                    sys.mode = spec.mode;
                    sys.models = models;
                    sys.local.assign(static_cast<std::size_t>(spec.K),
                                     LocalThresholds(1.0, 1.0));
                    sys.fusion = FusionConfig(wald.A, wald.B,
                                              continuous_weights(sys.local));
                    double a = wald.A, b = wald.B;
                    if (spec.mode == TimeMode::Discrete) {
                        // sampled data overshoot: Wald thresholds are
                        // conservative, calibrate instead
                        const auto calib = calibrate_centralized_thresholds(
                            models, levels, spec.calib_n_mc, mix64(row_seed + 0x54),
                            threads);
                        a = calib.a_tilde;
                        b = calib.b_tilde;
                    }
                    sys.max_steps = default_max_steps(sys);
                    row.a_thresh = a;
                    row.b_thresh = b;
                    row.period = step;
                    measure_row(row, spec.trials, mix64(row_seed + 0x55), threads,
                                [&](int truth, std::uint64_t root, std::uint64_t idx) {
                                    SystemConfig c = sys;
                                    c.truth = truth;
                                    return run_centralized_sprt_trial(c, a, b, root, idx);
                                });
                } else {  // SprtSampled
                    const double h_s = spec.sampled_h > 0.0 ? spec.sampled_h : mean_period;
                    if (!(h_s > 0.0)) throw ConfigError("sampled period must be > 0");
                    std::vector<HypothesisModel> sampled;
                    for (double m : spec.mu) sampled.push_back(HypothesisModel::gaussian(m, h_s));
                    const auto calib = calibrate_centralized_thresholds(
                        sampled, levels, spec.calib_n_mc, mix64(row_seed + 0x56), threads);
                    SystemConfig sys;
                    sys.K = spec.K;
                    sys.mode = spec.mode;
                    sys.models = models;
                    sys.local.assign(static_cast<std::size_t>(spec.K),
                                     LocalThresholds(1.0, 1.0));
                    sys.fusion = FusionConfig(calib.a_tilde, calib.b_tilde,
                                              continuous_weights(sys.local));
                    {
                        // horizon in sampled steps
                        SystemConfig horizon = sys;
                        horizon.models = sampled;
                        sys.max_steps = default_max_steps(horizon);
                    }
                    row.a_thresh = calib.a_tilde;
                    row.b_thresh = calib.b_tilde;
                    row.period = h_s;
                    row.msgs_per_time = static_cast<double>(spec.K) / h_s;
                    measure_row(row, spec.trials, mix64(row_seed + 0x57), threads,
                                [&](int truth, std::uint64_t root, std::uint64_t idx) {
                                    SystemConfig c = sys;
                                    c.truth = truth;
                                    return run_deterministic_sampling_sprt_trial(
                                        c, h_s, calib.a_tilde, calib.b_tilde, root, idx);
                                });
                }
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// theory checks

namespace {

struct CheckSink {
    std::vector<CheckResult>& out;
    std::ostream* log;

    void add(std::string name, double lhs, double rhs, std::string detail) {
        // inequality lhs <= rhs; margin is the slack
        CheckResult r;
        r.name = std::move(name);
        r.margin = rhs - lhs;
        r.pass = r.margin >= 0.0;
        r.detail = std::move(detail);
        if (log)
            *log << (r.pass ? "  ok   " : "  FAIL ") << r.name << "  margin=" << r.margin
                 << "  (" << r.detail << ")\n" << std::flush;
        out.push_back(std::move(r));
    }
};

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

}  // namespace

std::vector<CheckResult> run_theory_checks(const CheckOptions& opt, std::ostream* log) {
    std::vector<CheckResult> results;
    CheckSink sink{results, log};
    std::uint64_t seed = opt.seed;
    auto next_seed = [&]() { return splitmix64(seed += 1); };

    const int K = 2;
    const double mu = 1.0;
    const ErrorLevels levels(1e-2, 1e-2);

    struct Cfg {
        double h;
        double delta;
    };
    const Cfg grid[] = {{1.0, 1.0}, {1.0, 2.0}, {0.1, 1.0}, {0.1, 2.0}};
    std::map<std::pair<double, double>, QuantizationTable> tables;

    for (const auto& g : grid) {
        const std::string tag = " h=" + fmt(g.h) + " d=" + fmt(g.delta);
        const auto model = HypothesisModel::gaussian(mu, g.h);
        const LocalThresholds th(g.delta, g.delta);
        const auto t = estimate_quantization(model, th, opt.quant_n_mc, next_seed(),
                                             opt.threads);
        tables[{g.h, g.delta}] = t;

        // the per-message weights dominate the local thresholds
        sink.add("weight-floor" + tag,
                 g.delta,
                 std::min(t.lambda_lo + 3.0 * t.se_lambda_lo,
                          t.lambda_hi + 3.0 * t.se_lambda_hi),
                 "lambda_lo=" + fmt(t.lambda_lo) + " lambda_hi=" + fmt(t.lambda_hi));

        // ... but by no more than the overshoot-driven gap
        const double gap_cap_lo = t.theta_hat / (1.0 - std::exp(-th.delta_hi));
        const double gap_cap_hi = t.theta_hat / (1.0 - std::exp(-th.delta_lo));
        sink.add("weight-gap-lo" + tag, t.lambda_lo - g.delta,
                 gap_cap_lo + 3.0 * (t.se_lambda_lo +
                                     t.se_theta / (1.0 - std::exp(-th.delta_hi))),
                 "gap=" + fmt(t.lambda_lo - g.delta) + " cap=" + fmt(gap_cap_lo));
        sink.add("weight-gap-hi" + tag, t.lambda_hi - g.delta,
                 gap_cap_hi + 3.0 * (t.se_lambda_hi +
                                     t.se_theta / (1.0 - std::exp(-th.delta_lo))),
                 "gap=" + fmt(t.lambda_hi - g.delta) + " cap=" + fmt(gap_cap_hi));

        // message K-L numbers dominate their closed-form floors
        const auto kb = kl_lower_bounds(th);
        sink.add("message-kl-floor-0" + tag, kb.i0_lb, t.i0 + 3.0 * t.se_i0,
                 "i0=" + fmt(t.i0) + " floor=" + fmt(kb.i0_lb));
        sink.add("message-kl-floor-1" + tag, kb.i1_lb, t.i1 + 3.0 * t.se_i1,
                 "i1=" + fmt(t.i1) + " floor=" + fmt(kb.i1_lb));

        // threshold-free overshoot bound dominates the measured overshoot
        for (int r = 1; r <= 2; ++r) {
            const double bound = lorden_overshoot_bound(model, r);
            sink.add("overshoot-moment-bound-r" + std::to_string(r) + tag,
                     t.theta_hat - 3.0 * t.se_theta, bound,
                     "theta=" + fmt(t.theta_hat) + " bound=" + fmt(bound));
        }
    }

    // oversampling shrinks the overshoot
    for (double delta : {1.0, 2.0}) {
        const auto& coarse = tables[{1.0, delta}];
        const auto& fine = tables[{0.1, delta}];
        sink.add("oversampling-shrinks-overshoot d=" + fmt(delta),
                 fine.theta_hat + 3.0 * (fine.se_theta + coarse.se_theta), coarse.theta_hat,
                 "theta(h=0.1)=" + fmt(fine.theta_hat) +
                     " theta(h=1)=" + fmt(coarse.theta_hat));
    }

    // per-cycle renewal identity, with the bounded-payload slack estimate
    for (const auto& g : {Cfg{1.0, 1.0}, Cfg{0.1, 2.0}}) {
        const std::string tag = " h=" + fmt(g.h) + " d=" + fmt(g.delta);
        const auto& t = tables[{g.h, g.delta}];
        SystemConfig sys;
        sys.K = K;
        sys.mode = TimeMode::Discrete;
        sys.models.assign(K, HypothesisModel::gaussian(mu, g.h));
        sys.local.assign(K, LocalThresholds(g.delta, g.delta));
        std::vector<FusionWeights> w(K, FusionWeights{t.lambda_lo, t.lambda_hi});
        sys.fusion = FusionConfig(4.0, 4.0, w);
        sys.truth = 1;
        sys.max_steps = default_max_steps(sys);

        const struct {
            Payload p;
            const char* name;
        } payloads[] = {{Payload::One, "one"},
                        {Payload::Lambda, "weight"},
                        {Payload::AbsOvershoot, "overshoot"},
                        {Payload::Period, "period"}};
        for (const auto& pl : payloads) {
            const auto rep =
                wald_identity_check(sys, next_seed(), opt.trials, pl.p, opt.threads);
            for (int i = 0; i < K; ++i) {
                const auto& s = rep.sensors[static_cast<std::size_t>(i)];
                // exact payloads have se == 0; allow rounding error
                const double fp_eps = 1e-9 * (1.0 + std::abs(s.lhs));
                sink.add("renewal-identity-" + std::string(pl.name) + tag + " sensor=" +
                             std::to_string(i),
                         std::abs(s.diff), 4.0 * s.se + fp_eps,
                         "diff=" + fmt(s.diff) + " se=" + fmt(s.se));
                if (s.bounded)
                    sink.add("renewal-slack-" + std::string(pl.name) + tag + " sensor=" +
                                 std::to_string(i),
                             s.slack, s.slack_bound + 4.0 * s.se,
                             "slack=" + fmt(s.slack) + " bound=" + fmt(s.slack_bound));
            }
        }
    }

    // tracking and K-L gap envelopes at calibrated fusion thresholds
    for (const auto& g : grid) {
        const std::string tag = " h=" + fmt(g.h) + " d=" + fmt(g.delta);
        const auto& t = tables[{g.h, g.delta}];
        SystemConfig sys;
        sys.K = K;
        sys.mode = TimeMode::Discrete;
        sys.models.assign(K, HypothesisModel::gaussian(mu, g.h));
        sys.local.assign(K, LocalThresholds(g.delta, g.delta));
        std::vector<FusionWeights> w(K, FusionWeights{t.lambda_lo, t.lambda_hi});
        const double cprime = K * (t.lambda_lo + t.lambda_hi);
        const double c = K * 2.0 * g.delta;
        sys.fusion = FusionConfig(std::abs(std::log(levels.beta)) + cprime,
                                  std::abs(std::log(levels.alpha)) + cprime, w);
        sys.truth = 1;
        sys.max_steps = default_max_steps(sys);

        const auto calib = calibrate_fusion_thresholds(sys, levels, opt.calib_n_mc,
                                                       next_seed(), opt.threads);
        sink.add("calibration-envelope" + tag,
                 std::max(calib.a_tilde - calib.envelope_a,
                          calib.b_tilde - calib.envelope_b),
                 0.0, "a=" + fmt(calib.a_tilde) + " b=" + fmt(calib.b_tilde) + " env=" +
                          fmt(calib.envelope_a));
        sys.fusion = FusionConfig(calib.a_tilde, calib.b_tilde, w);
        sys.max_steps = default_max_steps(sys);

        const auto wald = wald_thresholds(levels);
        for (int truth = 0; truth <= 1; ++truth) {
            const std::uint64_t root_d = next_seed();
            const std::uint64_t root_c = next_seed();
            SystemConfig run_sys = sys;
            run_sys.truth = truth;
            RunningStat gap, u_d, ut_d, u_c;
            auto dres = parallel_trials<TrialResult>(
                opt.trials, opt.threads,
                [&](std::uint64_t idx) { return run_dsprt_trial(run_sys, root_d, idx); });
            auto cres = parallel_trials<TrialResult>(
                opt.trials, opt.threads, [&](std::uint64_t idx) {
                    return run_centralized_sprt_trial(run_sys, wald.A, wald.B, root_c, idx);
                });
            for (const auto& r : dres) {
                gap.add(std::abs(r.u_at_stop - r.u_tilde_at_stop));
                u_d.add(r.u_at_stop);
                ut_d.add(r.u_tilde_at_stop);
            }
            for (const auto& r : cres) u_c.add(r.u_at_stop);

            const double theta_j = truth ? t.theta1 : t.theta0;
            const double i_j = truth ? t.i1 : t.i0;
            const std::string jt = tag + " j=" + std::to_string(truth);

            // E_j|u_T - u~_T| <= theta_j ((|E_j u~_T| + 2C') / min_i I_j + K) + C
            const double track_rhs =
                theta_j * ((std::abs(ut_d.mean()) + 2.0 * cprime) / i_j + K) + c;
            sink.add("tracking-envelope" + jt, gap.mean() - 4.0 * gap.se(), track_rhs,
                     "gap=" + fmt(gap.mean()) + " cap=" + fmt(track_rhs));

            // |E_j u_T(1-bit) - E_j u_T(central)| <=
            //   Phi L + (1+3 Phi) C' + C + K theta_j,  Phi = theta_j / min_i I_j
            const double phi = theta_j / i_j;
            const double L = truth ? std::abs(std::log(levels.alpha))
                                   : std::abs(std::log(levels.beta));
            const double kl_rhs = phi * L + (1.0 + 3.0 * phi) * cprime + c + K * theta_j;
            const double lhs = std::abs(u_d.mean() - u_c.mean());
            sink.add("kl-gap-envelope" + jt, lhs - 4.0 * (u_d.se() + u_c.se()), kl_rhs,
                     "gap=" + fmt(lhs) + " cap=" + fmt(kl_rhs));
        }
    }

    return results;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_g9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "scheme,delta,period,alpha,beta,a_thresh,b_thresh,mean_delay,se_delay,"
          "kl0,se_kl0,kl1,se_kl1,err_alpha,se_alpha,err_beta,se_beta,"
          "msgs_per_time,n_trials,seed\n";
    for (const auto& r : rows) {
        os << r.scheme << ',' << format_g9(r.delta) << ',' << format_g9(r.period) << ','
           << format_g9(r.alpha) << ',' << format_g9(r.beta) << ',' << format_g9(r.a_thresh)
           << ',' << format_g9(r.b_thresh) << ',' << format_g9(r.mean_delay) << ','
           << format_g9(r.se_delay) << ',' << format_g9(r.kl0) << ',' << format_g9(r.se_kl0)
           << ',' << format_g9(r.kl1) << ',' << format_g9(r.se_kl1) << ','
           << format_g9(r.err_alpha) << ',' << format_g9(r.se_alpha) << ','
           << format_g9(r.err_beta) << ',' << format_g9(r.se_beta) << ','
           << format_g9(r.msgs_per_time) << ',' << r.n_trials << ',' << r.seed << '\n';
    }
}

void write_trials_csv(std::ostream& os, const std::vector<TrialResult>& trials) {
    os << "seed,decision,stop_time,u_at_stop,u_tilde_at_stop,msg_count_total\n";
    for (const auto& r : trials) {
        long msgs = 0;
        for (long c : r.msg_counts) msgs += c;
        os << r.seed << ',' << r.decision << ',' << format_g9(r.stop_time) << ','
           << format_g9(r.u_at_stop) << ',' << format_g9(r.u_tilde_at_stop) << ',' << msgs
           << '\n';
    }
}

void write_quantization_csv(std::ostream& os, const std::vector<QuantizationTable>& tables,
                            const std::vector<LocalThresholds>& local) {
    os << "sensor,delta_lo,delta_hi,lambda_lo,lambda_hi,p0_bit1,p1_bit1,i0,i1,theta_hat,"
          "se_lambda_lo,se_lambda_hi,se_i0,se_i1,se_theta,n_mc,seed\n";
    for (std::size_t i = 0; i < tables.size(); ++i) {
        const auto& t = tables[i];
        os << i << ',' << format_g9(local[i].delta_lo) << ',' << format_g9(local[i].delta_hi)
           << ',' << format_g9(t.lambda_lo) << ',' << format_g9(t.lambda_hi) << ','
           << format_g9(t.p0_bit1) << ',' << format_g9(t.p1_bit1) << ',' << format_g9(t.i0)
           << ',' << format_g9(t.i1) << ',' << format_g9(t.theta_hat) << ','
           << format_g9(t.se_lambda_lo) << ',' << format_g9(t.se_lambda_hi) << ','
           << format_g9(t.se_i0) << ',' << format_g9(t.se_i1) << ',' << format_g9(t.se_theta)
           << ',' << t.n_mc << ',' << t.seed << '\n';
    }
}

void write_checks_csv(std::ostream& os, const std::vector<CheckResult>& checks) {
    os << "name,pass,margin,detail\n";
    for (const auto& c : checks) {
        std::string detail = c.detail;
        for (auto& ch : detail)
            if (ch == ',') ch = ';';
        os << c.name << ',' << (c.pass ? 1 : 0) << ',' << format_g9(c.margin) << ',' << detail
           << '\n';
    }
}

}  // namespace dsprt
