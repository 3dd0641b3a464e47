#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rareis/distributions.hpp"

namespace rareis::num {

struct QuadratureSpec {
    int panels = 8;
    int nodes_per_panel = 32;
    double rel_tol = 1e-7;

    void validate() const {
        if (panels < 1 || nodes_per_panel < 1 || panels * nodes_per_panel < 8)
            throw std::invalid_argument("QuadratureSpec: need panels*nodes_per_panel >= 8");
        if (!(rel_tol > 0.0 && rel_tol < 1.0))
            throw std::invalid_argument("QuadratureSpec: rel_tol must lie in (0,1)");
    }
};

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double last, double prev)
        : std::runtime_error(what), last_estimate(last), prev_estimate(prev) {}
    double last_estimate;
    double prev_estimate;
};

// Gauss-Legendre rule on (-1, 1); computed once per order and cached.
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GaussLegendreRule& gauss_legendre(int order);

// Fixed-node representation of the stage objective
//
//   phi(mu) = (1-mu)^{-b} * integral of cont(s+t) f_Y(t) e^{mu*Lambda_X(t)} dt
//
// over t in (0, upper_cut). The integral is parameterized by the node
// distribution's CDF (p = F_Y(t)), so a node j carries a weight
// a_j = w_j * cont(s + y_j) and a log-hazard l_j with e^{mu*l_j} the twist
// factor: l_j = ln(1-p_j) when the hazard and node distributions coincide
// (standard per-step stage), l_j = -Lambda_X(y_j) otherwise (aggregate block
// stage, where Y is the moment-matched block sum and X the component).
//
// phi is log-convex in mu with a unique interior minimum whenever some
// a_j > 0 and l_j < 0, which is what makes the control search robust.
class StageNodes {
public:
    StageNodes(const dist::DistributionModel& node_dist,
               const dist::DistributionModel& hazard_dist,
               bool shared_hazard,
               std::function<double(double)> continuation,
               double s,
               std::optional<double> upper_cut,
               const QuadratureSpec& spec);

    // Doubles the panel count and rebuilds all nodes.
    void refine();

    bool empty() const { return a_.empty(); }
    int panels() const { return panels_; }
    std::size_t node_count() const { return a_.size(); }

    // log phi(mu) with weight power b; -inf when the objective vanishes.
    double log_objective(double mu, int weight_power) const;
    double objective(double mu, int weight_power) const;
    // d/dmu of log phi: b/(1-mu) + s1/s0. Requires a nonvanishing objective.
    double stationarity(double mu, int weight_power) const;

private:
    void build();

    dist::DistributionModel node_dist_;
    dist::DistributionModel hazard_dist_;
    bool shared_hazard_;
    std::function<double(double)> continuation_;
    double s_;
    std::optional<double> upper_cut_;
    int nodes_per_panel_;
    int panels_;
    std::vector<double> a_;
    std::vector<double> l_;
};

// Adaptive evaluation of the stage integral at a fixed twist: refines panels
// until successive estimates agree to spec.rel_tol, throwing QuadratureError
// (with the last two estimates) if the refinement limit is reached.
double stage_integral(const dist::DistributionModel& d,
                      dist::TwistParameter mu,
                      const std::function<double(double)>& continuation,
                      double s,
                      std::optional<double> upper_cut,
                      const QuadratureSpec& spec);

// Panel-doubling cap shared by stage_integral and the solver: starting from
// spec.panels, at most this many refinements are attempted.
inline constexpr int kMaxRefinements = 7;

}  // namespace rareis::num
