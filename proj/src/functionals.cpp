#include "rareis/functionals.hpp"

#include <stdexcept>

namespace rareis::fn {

Functional Functional::left_tail(double gamma_th) {
    if (!(gamma_th > 0.0) || !std::isfinite(gamma_th))
        throw std::invalid_argument("left_tail: gamma_th must be positive and finite");
    Functional f;
    f.kind_ = Kind::left_tail;
    f.gamma_th_ = gamma_th;
    return f;
}

Functional Functional::right_tail(double gamma_th) {
    if (!(gamma_th > 0.0) || !std::isfinite(gamma_th))
        throw std::invalid_argument("right_tail: gamma_th must be positive and finite");
    Functional f;
    f.kind_ = Kind::right_tail;
    f.gamma_th_ = gamma_th;
    return f;
}

Functional Functional::interference_cdf(dist::DistributionModel x0, double gamma_th, double eta) {
    if (!(gamma_th > 0.0) || !std::isfinite(gamma_th))
        throw std::invalid_argument("interference_cdf: gamma_th must be positive and finite");
    if (!(eta >= 0.0) || !std::isfinite(eta))
        throw std::invalid_argument("interference_cdf: eta must be nonnegative and finite");
    Functional f;
    f.kind_ = Kind::interference_cdf;
    f.gamma_th_ = gamma_th;
    f.eta_ = eta;
    f.x0_ = x0;
    return f;
}

Functional Functional::custom(std::function<double(double)> evaluator, Monotonicity hint) {
    if (!evaluator) throw std::invalid_argument("custom: evaluator must be callable");
    Functional f;
    f.kind_ = Kind::custom;
    f.evaluator_ = std::move(evaluator);
    f.hint_ = hint;
    return f;
}

double eval_g(const Functional& fun, double s) {
    switch (fun.kind_) {
        case Kind::left_tail:
            return s <= fun.gamma_th_ ? 1.0 : 0.0;
        case Kind::right_tail:
            return s >= fun.gamma_th_ ? 1.0 : 0.0;
        case Kind::interference_cdf:
            return fun.x0_->cdf(fun.gamma_th_ * (s + fun.eta_));
        case Kind::custom:
            return fun.evaluator_(s);
    }
    return 0.0;
}

std::optional<double> state_space_bound(const Functional& fun) {
    if (fun.kind() == Kind::left_tail) return fun.gamma_th();
    return std::nullopt;
}

}  // namespace rareis::fn
