#pragma once

#include <functional>
#include <optional>

#include "rareis/distributions.hpp"

namespace rareis::fn {

enum class Kind { left_tail, right_tail, interference_cdf, custom };

// Monotonicity declared with custom evaluators; documentation only.
enum class Monotonicity { unknown, nondecreasing, nonincreasing };

// The map g applied to the final sum; the quantity of interest is E[g(S_N)].
// Indicator thresholds use non-strict inequalities.
class Functional {
public:
    static Functional left_tail(double gamma_th);
    static Functional right_tail(double gamma_th);
    static Functional interference_cdf(dist::DistributionModel x0, double gamma_th, double eta);
    static Functional custom(std::function<double(double)> evaluator,
                             Monotonicity hint = Monotonicity::unknown);

    Kind kind() const { return kind_; }
    double gamma_th() const { return gamma_th_; }
    double eta() const { return eta_; }
    const dist::DistributionModel& x0() const { return *x0_; }
    Monotonicity hint() const { return hint_; }

private:
    Functional() = default;
    Kind kind_ = Kind::custom;
    double gamma_th_ = 0.0;
    double eta_ = 0.0;
    std::optional<dist::DistributionModel> x0_;
    std::function<double(double)> evaluator_;
    Monotonicity hint_ = Monotonicity::unknown;

    friend double eval_g(const Functional&, double);
};

double eval_g(const Functional& fun, double s);

// Left-tail problems vanish beyond gamma_th, which bounds the useful state
// space; other kinds have no natural truncation and the caller supplies it.
std::optional<double> state_space_bound(const Functional& fun);

}  // namespace rareis::fn
