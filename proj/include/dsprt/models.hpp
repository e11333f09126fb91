// models.hpp -- observation models, log-likelihood ratio increments and the
// closed-form SPRT theory quantities for the Brownian / sampled-Gaussian pair.
#pragma once
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dsprt/rng.hpp"

namespace dsprt {

enum class ModelKind {
    BrownianDrift,    // continuous path, Euler step dt stored in h
    GaussianSampled,  // one observation per period h: N(0,h) vs N(mu*h,h)
};

// Per-sensor hypothesis pair.  Under H0 the observed increment over one
// period is N(0,h), under H1 it is N(mu*h,h); the LLR of one increment is
//   l = mu*xi - mu^2*h/2.
// BrownianDrift uses the same increment law with h playing the role of the
// Euler step dt, so continuous-path statements hold up to O(sqrt(dt)).
struct HypothesisModel {
    ModelKind kind = ModelKind::GaussianSampled;
    double mu = 1.0;
    double h = 1.0;

    HypothesisModel() = default;
    HypothesisModel(ModelKind k, double mu_, double h_) : kind(k), mu(mu_), h(h_) {
        if (!(h > 0.0) || !std::isfinite(h))
            throw std::invalid_argument("HypothesisModel: h must be > 0");
        if (!std::isfinite(mu))
            throw std::invalid_argument("HypothesisModel: mu must be finite");
    }

    static HypothesisModel brownian(double mu_, double dt) {
        return HypothesisModel(ModelKind::BrownianDrift, mu_, dt);
    }
    static HypothesisModel gaussian(double mu_, double h_) {
        return HypothesisModel(ModelKind::GaussianSampled, mu_, h_);
    }

    // LLR increment of a given observed increment xi.
    double llr_from_obs(double xi) const { return mu * xi - 0.5 * mu * mu * h; }

    // Mean and standard deviation of the LLR increment under H_truth.
    double llr_mean(int truth) const {
        const double kl = 0.5 * mu * mu * h;
        return truth ? kl : -kl;
    }
    double llr_sd() const { return std::abs(mu) * std::sqrt(h); }
};

// Draw one LLR increment under hypothesis `truth` (0 or 1).
inline double llr_increment(const HypothesisModel& model, NormalSampler& rng, int truth) {
    return model.llr_mean(truth) + model.llr_sd() * rng();
}

struct ErrorLevels {
    double alpha;
    double beta;

    ErrorLevels(double a, double b) : alpha(a), beta(b) {
        if (!(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0))
            throw std::invalid_argument("ErrorLevels: alpha, beta must lie in (0,1)");
        if (!(a + b < 1.0))
            throw std::invalid_argument("ErrorLevels: alpha + beta must be < 1");
    }
};

// H(x,y) = x log(x/(1-y)) + (1-x) log((1-x)/y), natural logs.
inline double h_function(double x, double y) {
    if (!(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0))
        throw std::domain_error("h_function: arguments must lie in (0,1)");
    return x * std::log(x / (1.0 - y)) + (1.0 - x) * std::log((1.0 - x) / y);
}

// Wald thresholds A = log((1-alpha)/beta), B = log((1-beta)/alpha).
struct WaldThresholds {
    double A;
    double B;
};

inline WaldThresholds wald_thresholds(const ErrorLevels& levels) {
    return {std::log((1.0 - levels.alpha) / levels.beta),
            std::log((1.0 - levels.beta) / levels.alpha)};
}

struct SprtPerformance {
    double e0_delay;
    double e1_delay;
    double kl0;
    double kl1;
};

// Exact optimum SPRT performance for K Brownian sensors with constant drifts.
inline SprtPerformance sprt_performance_brownian(const std::vector<double>& mu,
                                                 const ErrorLevels& levels) {
    double norm2 = 0.0;
    for (double m : mu) norm2 += m * m;
    if (!(norm2 > 0.0))
        throw std::invalid_argument("sprt_performance_brownian: drift vector must be nonzero");
    const double kl0 = h_function(levels.alpha, levels.beta);
    const double kl1 = h_function(levels.beta, levels.alpha);
    return {2.0 / norm2 * kl0, 2.0 / norm2 * kl1, kl0, kl1};
}

// Lower bounds for the discrete-time SPRT K-L divergences at stopping.
inline std::pair<double, double> sprt_kl_lower_bounds(const ErrorLevels& levels) {
    return {h_function(levels.alpha, levels.beta), h_function(levels.beta, levels.alpha)};
}

}  // namespace dsprt
