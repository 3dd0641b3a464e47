#pragma once

#include <cstdint>

#include "rareis/math_util.hpp"

namespace rareis::dist {

enum class Family { log_normal };

// A positive univariate distribution exposing the pieces the twisting
// machinery needs: density, CDF/survival, cumulative hazard, and quantiles.
// Immutable after construction; safe to share across threads.
class DistributionModel {
public:
    static DistributionModel log_normal(double m, double sigma);

    Family family() const { return family_; }
    double location() const { return m_; }     // log-scale location m
    double scale() const { return sigma_; }    // log-scale sigma > 0

    double density(double x) const;
    double log_density(double x) const;
    double cdf(double x) const;
    double survival(double x) const;           // 1 - cdf, computed without cancellation
    double cumulative_hazard(double x) const;  // -ln(survival), capped at kLambdaCap
    double quantile(double p) const;           // p in [0,1)
    double survival_quantile(double q) const;  // quantile(1-p) parameterized by q = 1-p in (0,1]

    // First two moments; used by moment matching and state-space sizing.
    double mean() const;
    double variance() const;

    bool same_parameters(const DistributionModel& other) const;

private:
    DistributionModel(Family f, double m, double sigma) : family_(f), m_(m), sigma_(sigma) {}
    Family family_;
    double m_;
    double sigma_;
};

// Twist parameter of the hazard-rate change of measure; mu < 1, mu = 0 is identity.
struct TwistParameter {
    double mu = 0.0;
};

// Twisted density (1-mu) f(x) exp(mu Lambda(x)); integrates to 1 for any mu < 1.
double twisted_density(const DistributionModel& d, double x, TwistParameter t);

// Twisted CDF 1 - (1-F(x))^(1-mu).
double twisted_cdf(const DistributionModel& d, double x, TwistParameter t);

// Inverse twisted CDF F^{-1}(1 - (1-y)^{1/(1-mu)}) for y in [0,1).
double twisted_quantile(const DistributionModel& d, double y, TwistParameter t);

// Inverse-CDF draw from the twisted law; consumes exactly one uniform.
double sample_twisted(const DistributionModel& d, TwistParameter t, num::RandomStream& rng);

// Shadow-fading convention: dB parameters scale by ln(10)/10 on the log scale.
DistributionModel lognormal_from_db(double m_db, double sigma_db);

}  // namespace rareis::dist
