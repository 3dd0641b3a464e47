#pragma once

#include <functional>
#include <optional>
#include <utility>

namespace rareis::num {

struct MinimizeOptions {
    // Search domain nu = 1/(1-mu) in [nu_min, nu_max], i.e. mu in
    // (1 - 1/nu_min, 1 - 1/nu_max]; defaults cover mu down to -1e6.
    double nu_min = 1e-6;
    double nu_max = 1e6;
    double nu_rel_tol = 1e-6;
    // Optional mu-space interval to center the initial bracket walk on.
    std::optional<std::pair<double, double>> bracket_hint;
    // d/dmu of the log objective when available; monotone in mu for the
    // log-convex stage objectives. Used to polish the minimizer to a root of
    // the stationarity condition, far past the bracketing tolerance.
    std::function<double(double)> stationarity;
};

struct MinimizeResult {
    double mu = 0.0;
    double value = 0.0;
    bool bracketed = false;     // a genuine interior bracket was found
    bool boundary_hit = false;  // ran into the nu domain edge while descending
    int evaluations = 0;
};

// Minimizes objective(mu) over mu < 1: geometric bracket expansion from
// nu = 1 in the reparameterized variable, Brent refinement to nu_rel_tol,
// then the stationarity polish. The reported value is always the best
// objective actually evaluated, so it never exceeds objective(0).
MinimizeResult minimize_over_mu(const std::function<double(double)>& objective,
                                const MinimizeOptions& options = {});

}  // namespace rareis::num
