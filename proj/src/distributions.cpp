#include "rareis/distributions.hpp"

#include <cmath>
#include <stdexcept>

namespace rareis::dist {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014327;
}

DistributionModel DistributionModel::log_normal(double m, double sigma) {
    if (!std::isfinite(m) || !std::isfinite(sigma) || sigma <= 0.0)
        throw std::invalid_argument("log_normal: requires finite m and sigma > 0");
    return DistributionModel(Family::log_normal, m, sigma);
}

double DistributionModel::density(double x) const {
    if (!std::isfinite(x)) throw std::domain_error("density: non-finite x");
    if (x <= 0.0) return 0.0;
    const double z = (std::log(x) - m_) / sigma_;
    return kInvSqrt2Pi / (x * sigma_) * std::exp(-0.5 * z * z);
}

double DistributionModel::log_density(double x) const {
    if (x <= 0.0) return -std::numeric_limits<double>::infinity();
    const double lx = std::log(x);
    const double z = (lx - m_) / sigma_;
    return std::log(kInvSqrt2Pi / sigma_) - lx - 0.5 * z * z;
}

double DistributionModel::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    return num::normal_cdf((std::log(x) - m_) / sigma_);
}

double DistributionModel::survival(double x) const {
    if (x <= 0.0) return 1.0;
    return num::normal_sf((std::log(x) - m_) / sigma_);
}

double DistributionModel::cumulative_hazard(double x) const {
    if (x < 0.0) throw std::domain_error("cumulative_hazard: x < 0");
    if (x == 0.0) return 0.0;
    const double s = survival(x);
    if (s <= 0.0) return num::kLambdaCap;
    return -std::log(s);
}

double DistributionModel::quantile(double p) const {
    if (!(p >= 0.0 && p < 1.0)) throw std::domain_error("quantile: p outside [0,1)");
    if (p == 0.0) return 0.0;
    return std::exp(m_ + sigma_ * num::probit(p));
}

double DistributionModel::survival_quantile(double q) const {
    if (!(q > 0.0 && q <= 1.0)) throw std::domain_error("survival_quantile: q outside (0,1]");
    return std::exp(m_ - sigma_ * num::probit(q));
}

double DistributionModel::mean() const {
    return std::exp(m_ + 0.5 * sigma_ * sigma_);
}

double DistributionModel::variance() const {
    const double s2 = sigma_ * sigma_;
    return std::expm1(s2) * std::exp(2.0 * m_ + s2);
}

bool DistributionModel::same_parameters(const DistributionModel& other) const {
    return family_ == other.family_ && m_ == other.m_ && sigma_ == other.sigma_;
}

namespace {
void require_valid_mu(TwistParameter t) {
    if (!(t.mu < 1.0)) throw std::invalid_argument("twist parameter: mu must be < 1");
}
}  // namespace

double twisted_density(const DistributionModel& d, double x, TwistParameter t) {
    require_valid_mu(t);
    if (x <= 0.0) return 0.0;
    if (t.mu == 0.0) return d.density(x);  // identity twist, exact
    // Evaluated in the log domain: mu*Lambda can reach hundreds while the
    // density underflows, and the product is still well scaled.
    const double lf = d.log_density(x);
    if (lf == -std::numeric_limits<double>::infinity()) return 0.0;
    return std::exp(lf + t.mu * d.cumulative_hazard(x) + std::log1p(-t.mu));
}

double twisted_cdf(const DistributionModel& d, double x, TwistParameter t) {
    require_valid_mu(t);
    if (x <= 0.0) return 0.0;
    return -std::expm1(-(1.0 - t.mu) * d.cumulative_hazard(x));
}

double twisted_quantile(const DistributionModel& d, double y, TwistParameter t) {
    require_valid_mu(t);
    if (!(y >= 0.0 && y < 1.0)) throw std::domain_error("twisted_quantile: y outside [0,1)");
    if (t.mu == 0.0) return d.quantile(y);  // identity twist, bit-exact plain quantile
    // Survival-side composition: q = (1-y)^{1/(1-mu)} stays accurate for y near 1.
    const double q = std::exp(std::log1p(-y) / (1.0 - t.mu));
    return d.survival_quantile(q);
}

double sample_twisted(const DistributionModel& d, TwistParameter t, num::RandomStream& rng) {
    return twisted_quantile(d, num::uniform01(rng), t);
}

DistributionModel lognormal_from_db(double m_db, double sigma_db) {
    if (!(sigma_db > 0.0)) throw std::invalid_argument("lognormal_from_db: sigma_db must be > 0");
    return DistributionModel::log_normal(num::kDbScale * m_db, num::kDbScale * sigma_db);
}

}  // namespace rareis::dist
