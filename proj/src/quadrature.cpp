#include "rareis/quadrature.hpp"

#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <map>
#include <mutex>

#include "rareis/kernels.hpp"

namespace rareis::num {

const GaussLegendreRule& gauss_legendre(int order) {
    if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    static std::mutex lock;
    static std::map<int, GaussLegendreRule> cache;
    std::scoped_lock guard(lock);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;

    // Newton iteration on P_n from the three-term recurrence; roots are
    // symmetric, so only half are computed.
    GaussLegendreRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        // One clean re-evaluation of P' at the converged root for the weight.
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= order; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = order * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.weights[i] = w;
        rule.nodes[order - 1 - i] = x;
        rule.weights[order - 1 - i] = w;
    }
    if (order % 2 == 1) rule.nodes[half - 1] = 0.0;
    return cache.emplace(order, std::move(rule)).first->second;
}

StageNodes::StageNodes(const dist::DistributionModel& node_dist,
                       const dist::DistributionModel& hazard_dist,
                       bool shared_hazard,
                       std::function<double(double)> continuation,
                       double s,
                       std::optional<double> upper_cut,
                       const QuadratureSpec& spec)
    : node_dist_(node_dist),
      hazard_dist_(hazard_dist),
      shared_hazard_(shared_hazard),
      continuation_(std::move(continuation)),
      s_(s),
      upper_cut_(upper_cut),
      nodes_per_panel_(spec.nodes_per_panel),
      panels_(spec.panels) {
    spec.validate();
    build();
}

void StageNodes::refine() {
    panels_ *= 2;
    build();
}

void StageNodes::build() {
    a_.clear();
    l_.clear();

    double pmax = 1.0;
    double vmin = 0.0;
    if (upper_cut_) {
        if (!(*upper_cut_ > 0.0)) return;
        pmax = node_dist_.cdf(*upper_cut_);
        vmin = node_dist_.survival(*upper_cut_);
        if (pmax <= 0.0) return;
    }

    // Two parameterizations of the same integral, picked for accuracy where
    // the cut sits: small pmax works in p = F(t) directly (quantile and
    // log1p(-p) are exact near 0), otherwise in the survival variable
    // v = 1-p from vmin (survival_quantile and ln v exact near p = 1). Panel
    // widths shrink geometrically toward the cut, where the twist weight
    // e^{mu*l} peaks for negative mu.
    const bool p_side = pmax <= 0.5;
    std::vector<double> edges(static_cast<std::size_t>(panels_) + 1);
    if (p_side) {
        edges[0] = 0.0;
        for (int i = 1; i < panels_; ++i) edges[i] = pmax * (1.0 - std::exp2(-static_cast<double>(i)));
        edges[panels_] = pmax;
    } else {
        edges[0] = vmin;
        for (int i = 1; i < panels_; ++i)
            edges[i] = vmin + (1.0 - vmin) * std::exp2(static_cast<double>(i - panels_));
        edges[panels_] = 1.0;
    }

    const GaussLegendreRule& rule = gauss_legendre(nodes_per_panel_);
    a_.reserve(static_cast<std::size_t>(panels_) * nodes_per_panel_);
    l_.reserve(a_.capacity());
    bool any_active = false;
    for (int panel = 0; panel < panels_; ++panel) {
        const double c = 0.5 * (edges[panel] + edges[panel + 1]);
        const double h = 0.5 * (edges[panel + 1] - edges[panel]);
        if (!(h > 0.0)) continue;
        for (int t = 0; t < nodes_per_panel_; ++t) {
            const double x = c + h * rule.nodes[t];
            double y, lbase;
            if (p_side) {
                y = node_dist_.quantile(x);
                lbase = std::log1p(-x);
            } else {
                y = node_dist_.survival_quantile(x);
                lbase = std::log(x);
            }
            const double cont = continuation_(s_ + y);
            const double aj = h * rule.weights[t] * cont;
            a_.push_back(aj);
            l_.push_back(shared_hazard_ ? lbase : -hazard_dist_.cumulative_hazard(y));
            if (aj != 0.0) any_active = true;
        }
    }
    // A continuation that vanishes on every node vanishes on the whole range
    // for the in-scope (monotone) value rows; treat as an empty integrand.
    if (!any_active) {
        a_.clear();
        l_.clear();
    }
}

double StageNodes::log_objective(double mu, int weight_power) const {
    const MomentSums ms = twisted_moments(a_.data(), l_.data(), a_.size(), mu);
    if (!(ms.s0 > 0.0)) return -std::numeric_limits<double>::infinity();
    return -weight_power * std::log1p(-mu) + ms.zmax + std::log(ms.s0);
}

double StageNodes::objective(double mu, int weight_power) const {
    return std::exp(log_objective(mu, weight_power));
}

double StageNodes::stationarity(double mu, int weight_power) const {
    const MomentSums ms = twisted_moments(a_.data(), l_.data(), a_.size(), mu);
    return weight_power / (1.0 - mu) + ms.s1 / ms.s0;
}

double stage_integral(const dist::DistributionModel& d,
                      dist::TwistParameter mu,
                      const std::function<double(double)>& continuation,
                      double s,
                      std::optional<double> upper_cut,
                      const QuadratureSpec& spec) {
    spec.validate();
    if (!(mu.mu < 1.0)) throw std::invalid_argument("stage_integral: mu must be < 1");
    StageNodes nodes(d, d, /*shared_hazard=*/true, continuation, s, upper_cut, spec);
    if (nodes.empty()) return 0.0;

    double prev = nodes.objective(mu.mu, 1);
    double curr = prev;
    for (int r = 0; r < kMaxRefinements; ++r) {
        nodes.refine();
        prev = curr;
        curr = nodes.objective(mu.mu, 1);
        // a non-finite estimate can make the tolerance itself infinite and
        // masquerade as convergence; only finite agreement counts
        if (std::isfinite(curr) &&
            std::fabs(curr - prev) <= spec.rel_tol * std::max(std::fabs(curr), 1e-300))
            return curr;
    }
    throw QuadratureError(
        fmt::format("stage_integral: no convergence to rel_tol {} after {} refinements "
                    "(last {}, previous {})",
                    spec.rel_tol, kMaxRefinements, curr, prev),
        curr, prev);
}

}  // namespace rareis::num
