#pragma once

#include <cstdint>
#include <functional>

#include "rareis/quadrature.hpp"
#include "rareis/solver.hpp"

namespace rareis::est {

// Summary statistics of one forward run. `variance` is the unbiased sample
// variance of the per-sample values T; `rel_error` is the 95% relative
// half-width C*sqrt(variance/M)/mean (infinite when the mean is not
// positive). The fourth moment is kept so that downstream consistency checks
// can put a confidence band around the empirical second moment.
struct EstimatorResult {
    double mean = 0.0;
    double variance = 0.0;
    double second_moment = 0.0;
    double fourth_moment = 0.0;
    std::uint64_t m_samples = 0;
    double rel_error = 0.0;
    double backward_seconds = 0.0;
    double forward_seconds = 0.0;
    std::uint64_t seed = 0;
};

// One replicate, exposed for diagnostics through a SampleSink.
struct SampleRecord {
    double final_sum = 0.0;
    double weight = 1.0;  // likelihood ratio product, exp of the accumulated log-weight
    double g_value = 0.0;
};

// Optional per-sample observer. Attaching one forces a serial run so records
// arrive in sample order.
using SampleSink = std::function<void(const SampleRecord&)>;

// State-dependent importance sampling with tabulated controls. Controls are
// looked up at the state held at the start of the current block (for the
// all-ones standard partition that is simply the running sum before each
// step), so aggregate tables apply one twist per block as intended.
EstimatorResult run_is(const soc::ProblemSpec& p, const soc::ValueTable& vt,
                       const soc::ControlTable& ct, std::uint64_t m, std::uint64_t seed,
                       int threads = 0, const SampleSink* sink = nullptr);

// Plain Monte Carlo under the original measure. Consumes one uniform per
// component in the same order as run_is, so a zero-control table reproduces
// its per-sample values bit for bit.
EstimatorResult run_naive_mc(const soc::ProblemSpec& p, std::uint64_t m, std::uint64_t seed,
                             int threads = 0, const SampleSink* sink = nullptr);

// Constant (state-independent) hazard-rate twist baseline: a single-block
// aggregate solve picks one twist per stage from the state at time zero,
// then the run delegates to run_is. The solve cost lands in backward_seconds.
EstimatorResult run_hrt_constant(const soc::ProblemSpec& p, std::uint64_t m, std::uint64_t seed,
                                 const num::QuadratureSpec& q, int threads = 0,
                                 const SampleSink* sink = nullptr);

// Sample count needed so the 95% relative half-width drops to `tol`,
// ceil(C^2 * variance / (tol^2 * mean^2)). Zero pilot variance returns 1;
// a nonpositive pilot mean (event never observed) is a domain error.
std::uint64_t samples_to_tol(const EstimatorResult& pilot, double tol);

// Comparison of the solver's predicted second moment u(0, 0) against the
// empirical second moment of a run made with the same tables. `within` asks
// whether the ratio sits inside 1 +/- (allowance + mc_rel_halfwidth), the
// allowance covering control-interpolation error the prediction ignores.
struct ConsistencyReport {
    double predicted = 0.0;
    double empirical = 0.0;
    double ratio = 0.0;
    double mc_rel_halfwidth = 0.0;
    double allowance = 0.0;
    bool within = false;
};

ConsistencyReport predicted_second_moment_check(const soc::ProblemSpec& p,
                                                const soc::ValueTable& vt,
                                                const soc::ControlTable& ct,
                                                const EstimatorResult& result);

}  // namespace rareis::est
