#include "rareis/estimators.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rareis/math_util.hpp"
#include "rareis/parallel.hpp"

namespace rareis::est {

namespace {

// Samples per deterministic chunk. Each chunk owns an independent RNG seeded
// from (seed, chunk index), so the estimate does not depend on how chunks are
// distributed over workers.
constexpr std::uint64_t kChunk = 8192;

using Sums = std::array<double, 3>;  // sum T, sum T^2, sum T^4

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void check_tables(const soc::ProblemSpec& p, const soc::ValueTable& vt,
                  const soc::ControlTable& ct) {
    const std::size_t n = p.n();
    const std::size_t pts = p.grid.points.size();
    if (ct.steps != n || ct.points != pts || vt.stages != n + 1 || vt.points != pts)
        throw std::invalid_argument(fmt::format(
            "tables sized for {} steps x {} points do not match a problem with {} components "
            "and {} grid points",
            ct.steps, ct.points, n, pts));
    if (ct.stage_map.size() != n || ct.partition.empty())
        throw std::invalid_argument("control table is missing its step-to-block map");
}

// Chunked deterministic driver shared by every estimator. The sampler draws
// one replicate T (filling *rec when given). Per-chunk sums are compensated;
// chunks are then merged pairwise in a fixed order, so the result is
// invariant to the worker count.
template <typename Sampler>
EstimatorResult run_engine(std::uint64_t m, std::uint64_t seed, int threads,
                           const SampleSink* sink, Sampler&& sampler) {
    if (m == 0) throw std::invalid_argument("sample count must be positive");
    int workers = par::resolve_threads(threads);
    if (sink != nullptr) workers = 1;

    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t n_chunks = (m + kChunk - 1) / kChunk;
    std::vector<Sums> partial(n_chunks);

    par::parallel_for(0, n_chunks, workers, [&](std::size_t c) {
        num::RandomStream rng(num::splitmix64_at(seed, c));
        const std::uint64_t lo = c * kChunk;
        const std::uint64_t hi = std::min(m, lo + kChunk);
        num::KahanAccumulator a1, a2, a4;
        SampleRecord rec;
        SampleRecord* rec_ptr = sink ? &rec : nullptr;
        for (std::uint64_t i = lo; i < hi; ++i) {
            const double t = sampler(rng, i, rec_ptr);
            a1.add(t);
            const double t2 = t * t;
            a2.add(t2);
            a4.add(t2 * t2);
            if (sink) (*sink)(rec);
        }
        partial[c] = {a1.sum, a2.sum, a4.sum};
    });

    while (partial.size() > 1) {
        std::vector<Sums> next((partial.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < partial.size(); i += 2)
            next[i / 2] = {partial[i][0] + partial[i + 1][0], partial[i][1] + partial[i + 1][1],
                           partial[i][2] + partial[i + 1][2]};
        if (partial.size() % 2 == 1) next.back() = partial.back();
        partial = std::move(next);
    }
    const Sums s = partial.front();

    EstimatorResult r;
    r.m_samples = m;
    r.seed = seed;
    r.forward_seconds = seconds_since(t0);
    const double md = static_cast<double>(m);
    r.mean = s[0] / md;
    r.second_moment = s[1] / md;
    r.fourth_moment = s[2] / md;
    r.variance = m > 1 ? std::max(0.0, (s[1] - s[0] * r.mean) / (md - 1.0)) : 0.0;
    r.rel_error = r.mean > 0.0
                      ? num::kConfidenceC * std::sqrt(r.variance / md) / r.mean
                      : std::numeric_limits<double>::infinity();
    return r;
}

}  // namespace

EstimatorResult run_is(const soc::ProblemSpec& p, const soc::ValueTable& vt,
                       const soc::ControlTable& ct, std::uint64_t m, std::uint64_t seed,
                       int threads, const SampleSink* sink) {
    p.validate();
    check_tables(p, vt, ct);
    const std::size_t n = p.n();

    auto sampler = [&](num::RandomStream& rng, std::uint64_t index, SampleRecord* rec) {
        double s = 0.0;
        double logw = 0.0;
        double s_frozen = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (ct.block_start(i)) s_frozen = s;
            const dist::TwistParameter tw = soc::control_at(ct, i, s_frozen, p.grid);
            const double x = dist::sample_twisted(p.components[i], tw, rng);
            logw += -tw.mu * p.components[i].cumulative_hazard(x) - std::log1p(-tw.mu);
            s += x;
        }
        const double gv = fn::eval_g(p.functional, s);
        if (!std::isfinite(logw) || !std::isfinite(s))
            throw std::runtime_error(fmt::format(
                "importance sampling aborted at sample {}: log-weight {} with final sum {}",
                index, logw, s));
        double t = 0.0;
        if (gv != 0.0) {
            t = gv * std::exp(logw);
            if (!std::isfinite(t))
                throw std::runtime_error(fmt::format(
                    "importance sampling aborted at sample {}: value {} from log-weight {} and "
                    "g {}",
                    index, t, logw, gv));
        }
        if (rec) {
            rec->final_sum = s;
            rec->weight = std::exp(logw);
            rec->g_value = gv;
        }
        return t;
    };
    return run_engine(m, seed, threads, sink, sampler);
}

EstimatorResult run_naive_mc(const soc::ProblemSpec& p, std::uint64_t m, std::uint64_t seed,
                             int threads, const SampleSink* sink) {
    p.validate();
    const std::size_t n = p.n();

    auto sampler = [&](num::RandomStream& rng, std::uint64_t, SampleRecord* rec) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += p.components[i].quantile(num::uniform01(rng));
        const double gv = fn::eval_g(p.functional, s);
        if (rec) {
            rec->final_sum = s;
            rec->weight = 1.0;
            rec->g_value = gv;
        }
        return gv;
    };
    return run_engine(m, seed, threads, sink, sampler);
}

EstimatorResult run_hrt_constant(const soc::ProblemSpec& p, std::uint64_t m, std::uint64_t seed,
                                 const num::QuadratureSpec& q, int threads,
                                 const SampleSink* sink) {
    p.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto [vt, ct] =
        soc::solve_backward_aggregate(p, soc::BlockPartition::single(static_cast<int>(p.n())),
                                      q, threads);
    const double backward = seconds_since(t0);
    EstimatorResult r = run_is(p, vt, ct, m, seed, threads, sink);
    r.backward_seconds = backward;
    return r;
}

std::uint64_t samples_to_tol(const EstimatorResult& pilot, double tol) {
    if (!(tol > 0.0) || !std::isfinite(tol))
        throw std::invalid_argument("tolerance must be positive and finite");
    if (!std::isfinite(pilot.variance) || pilot.variance < 0.0)
        throw std::invalid_argument("pilot variance must be finite and nonnegative");
    if (!(pilot.mean > 0.0))
        throw std::domain_error(
            "pilot mean is not positive (event never observed); cannot size the final run");
    if (pilot.variance == 0.0) return 1;
    const double c = num::kConfidenceC;
    const double need =
        std::ceil(c * c * pilot.variance / (tol * tol * pilot.mean * pilot.mean));
    if (need >= 1.8446744073709552e19) return std::numeric_limits<std::uint64_t>::max();
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(need));
}

ConsistencyReport predicted_second_moment_check(const soc::ProblemSpec& p,
                                                const soc::ValueTable& vt,
                                                const soc::ControlTable& ct,
                                                const EstimatorResult& result) {
    p.validate();
    check_tables(p, vt, ct);

    ConsistencyReport rep;
    rep.predicted = vt.row(0).front();  // u(0, 0): the run starts from state zero
    rep.empirical = result.second_moment;
    rep.allowance = 0.25;

    const double md = static_cast<double>(std::max<std::uint64_t>(1, result.m_samples));
    const double var_t2 =
        std::max(0.0, result.fourth_moment - result.second_moment * result.second_moment);
    rep.mc_rel_halfwidth = rep.empirical > 0.0
                               ? num::kConfidenceC * std::sqrt(var_t2 / md) / rep.empirical
                               : std::numeric_limits<double>::infinity();

    if (rep.predicted == 0.0 && rep.empirical == 0.0) {
        rep.ratio = 1.0;
        rep.mc_rel_halfwidth = 0.0;
        rep.within = true;
        return rep;
    }
    if (!(rep.predicted > 0.0) || !(rep.empirical > 0.0)) {
        rep.ratio = rep.empirical > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        rep.within = false;
        return rep;
    }
    rep.ratio = rep.empirical / rep.predicted;
    const double band = rep.allowance + rep.mc_rel_halfwidth;
    rep.within = rep.ratio >= 1.0 / (1.0 + band) && rep.ratio <= 1.0 + band;
    return rep;
}

}  // namespace rareis::est
