#include "rareis/solver.hpp"

#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <optional>

#include "rareis/parallel.hpp"

namespace rareis::soc {

BlockPartition BlockPartition::ones(int n) {
    BlockPartition p;
    p.sizes.assign(static_cast<std::size_t>(n), 1);
    p.validate(n);
    return p;
}

BlockPartition BlockPartition::single(int n) {
    BlockPartition p;
    p.sizes.assign(1, n);
    p.validate(n);
    return p;
}

BlockPartition BlockPartition::auto_blocks(int n) {
    if (n < 1) throw std::invalid_argument("BlockPartition: N must be >= 1");
    BlockPartition p;
    if (n == 1) {
        p.sizes = {1};
    } else if (n % 2 == 0) {
        p.sizes.assign(static_cast<std::size_t>(n / 2), 2);
    } else {
        p.sizes.assign(static_cast<std::size_t>((n - 3) / 2), 2);
        p.sizes.push_back(3);
    }
    p.validate(n);
    return p;
}

void BlockPartition::validate(int n) const {
    if (sizes.empty()) throw std::invalid_argument("BlockPartition: empty partition");
    long long total = 0;
    for (int b : sizes) {
        if (b < 1) throw std::invalid_argument("BlockPartition: block sizes must be positive");
        total += b;
    }
    if (total != n)
        throw std::invalid_argument(
            fmt::format("BlockPartition: partition sums to {} != {}", total, n));
}

void ProblemSpec::validate() const {
    if (components.empty()) throw std::invalid_argument("ProblemSpec: N must be >= 1");
    if (!(s_bar > 0.0) || !std::isfinite(s_bar))
        throw std::invalid_argument("ProblemSpec: s_bar must be positive and finite");
    if (grid.s_bar() != s_bar)
        throw std::invalid_argument("ProblemSpec: grid must end at s_bar");
    if (const auto bound = fn::state_space_bound(functional); bound && *bound != s_bar)
        throw std::invalid_argument("ProblemSpec: s_bar must equal the functional bound");
}

dist::DistributionModel fenton_wilkinson(const std::vector<dist::DistributionModel>& components) {
    if (components.empty()) throw std::invalid_argument("fenton_wilkinson: no components");
    double m1 = 0.0, var = 0.0;
    for (const auto& d : components) {
        m1 += d.mean();
        var += d.variance();
    }
    const double sigma2 = std::log1p(var / (m1 * m1));
    return dist::DistributionModel::log_normal(std::log(m1) - 0.5 * sigma2, std::sqrt(sigma2));
}

dist::DistributionModel moment_match_block(const dist::DistributionModel& d, int b) {
    if (b < 1) throw std::invalid_argument("moment_match_block: b must be >= 1");
    if (b == 1) return d;
    const double m1 = b * d.mean();
    const double var = b * d.variance();
    const double sigma2 = std::log1p(var / (m1 * m1));
    return dist::DistributionModel::log_normal(std::log(m1) - 0.5 * sigma2, std::sqrt(sigma2));
}

double default_s_bar(const std::vector<dist::DistributionModel>& components,
                     const fn::Functional& fun) {
    if (const auto bound = fn::state_space_bound(fun)) return *bound;
    return fenton_wilkinson(components).survival_quantile(1e-4);
}

namespace {

struct PointSolution {
    double value;
    double mu;
};

// One grid point of one stage: build the fixed-node objective, minimize over
// the twist, then refine the nodes and re-minimize until the optimal value is
// stable to rel_tol. The stationarity accelerator sharpens the control far
// past the bracketing tolerance, which matters when the optimum sits at
// mu ~ -1/F(cut).
PointSolution solve_point(const dist::DistributionModel& node_dist,
                          const dist::DistributionModel& hazard_dist,
                          bool shared_hazard,
                          int weight_power,
                          const std::function<double(double)>& continuation,
                          double s,
                          std::optional<double> upper_cut,
                          const num::QuadratureSpec& spec) {
    num::StageNodes nodes(node_dist, hazard_dist, shared_hazard, continuation, s, upper_cut, spec);
    if (nodes.empty()) return {0.0, 0.0};

    auto minimize_on = [&](const num::StageNodes& nd) {
        num::MinimizeOptions opt;
        opt.stationarity = [&nd, weight_power](double mu) {
            return nd.stationarity(mu, weight_power);
        };
        return num::minimize_over_mu(
            [&nd, weight_power](double mu) { return nd.log_objective(mu, weight_power); }, opt);
    };

    num::MinimizeResult res = minimize_on(nodes);
    for (int r = 0; r < num::kMaxRefinements; ++r) {
        nodes.refine();
        if (nodes.empty()) return {0.0, 0.0};
        const num::MinimizeResult next = minimize_on(nodes);
        // Log-domain agreement to rel_tol is relative agreement of the values.
        const bool converged = std::fabs(next.value - res.value) <= spec.rel_tol ||
                               (next.value == -std::numeric_limits<double>::infinity() &&
                                res.value == -std::numeric_limits<double>::infinity());
        res = next;
        if (converged) return {std::exp(res.value), res.mu};
    }
    throw num::QuadratureError(
        fmt::format("stage objective did not stabilize to rel_tol {} (last log-values differ)",
                    spec.rel_tol),
        std::exp(res.value), std::exp(res.value));
}

std::optional<double> stage_cut(const fn::Functional& fun, double s) {
    if (const auto bound = fn::state_space_bound(fun)) return *bound - s;
    return std::nullopt;
}

void fill_terminal_row(ValueTable& vt, const ProblemSpec& p) {
    auto row = vt.row(vt.stages - 1);
    for (std::size_t k = 0; k < vt.points; ++k) {
        const double g = fn::eval_g(p.functional, p.grid.points[k]);
        row[k] = g * g;
    }
}

}  // namespace

std::pair<ValueTable, ControlTable> solve_backward(const ProblemSpec& p,
                                                   const num::QuadratureSpec& q,
                                                   int threads) {
    p.validate();
    q.validate();
    const std::size_t n = p.n();
    const std::size_t points = p.grid.points.size();

    ValueTable vt(n + 1, points);
    ControlTable ct(n, points);
    ct.partition.assign(n, 1);
    ct.stage_map.resize(n);
    std::iota(ct.stage_map.begin(), ct.stage_map.end(), 0);
    ct.aggregate = false;

    fill_terminal_row(vt, p);

    for (std::size_t stage = n; stage-- > 0;) {
        const auto cont_row = vt.row(stage + 1);
        auto continuation = [&grid = p.grid, cont_row](double x) {
            return num::interp_linear(grid, cont_row, x);
        };
        auto u_row = vt.row(stage);
        auto mu_row = ct.row(stage);
        const auto& d = p.components[stage];
        par::parallel_for(0, points, threads, [&](std::size_t k) {
            const double s = p.grid.points[k];
            const auto cut = stage_cut(p.functional, s);
            if (cut && !(*cut > 0.0)) {
                u_row[k] = 0.0;  // beyond the threshold: value vanishes, no twist
                mu_row[k] = 0.0;
                return;
            }
            try {
                const PointSolution ps =
                    solve_point(d, d, /*shared_hazard=*/true, 1, continuation, s, cut, q);
                u_row[k] = ps.value;
                mu_row[k] = ps.mu;
            } catch (const num::QuadratureError& e) {
                throw SolveError(fmt::format("stage {} point {} (s = {}): {}", stage, k, s,
                                             e.what()),
                                 static_cast<int>(stage), static_cast<int>(k));
            }
        });
    }
    return {std::move(vt), std::move(ct)};
}

std::pair<ValueTable, ControlTable> solve_backward_aggregate(const ProblemSpec& p,
                                                             const BlockPartition& part,
                                                             const num::QuadratureSpec& q,
                                                             int threads) {
    p.validate();
    q.validate();
    const std::size_t n = p.n();
    part.validate(static_cast<int>(n));
    const std::size_t points = p.grid.points.size();
    const int blocks = part.blocks();

    // Block boundaries n_0 = 0 < n_1 < ... < n_B = N.
    std::vector<std::size_t> bounds(static_cast<std::size_t>(blocks) + 1, 0);
    for (int m = 0; m < blocks; ++m)
        bounds[m + 1] = bounds[m] + static_cast<std::size_t>(part.sizes[m]);

    for (int m = 0; m < blocks; ++m)
        for (std::size_t i = bounds[m] + 1; i < bounds[m + 1]; ++i)
            if (!p.components[i].same_parameters(p.components[bounds[m]]))
                throw std::invalid_argument(fmt::format(
                    "solve_backward_aggregate: block {} mixes distinct component distributions",
                    m));

    ValueTable vt(n + 1, points);
    ControlTable ct(n, points);
    ct.partition = part.sizes;
    ct.stage_map.resize(n);
    for (int m = 0; m < blocks; ++m)
        for (std::size_t i = bounds[m]; i < bounds[m + 1]; ++i) ct.stage_map[i] = m;
    ct.aggregate = true;

    fill_terminal_row(vt, p);

    for (int m = blocks; m-- > 0;) {
        const int b = part.sizes[m];
        const auto& component = p.components[bounds[m]];
        const dist::DistributionModel block_sum = moment_match_block(component, b);
        // A block of one is exact: the matched distribution is the component
        // itself and the stage reduces to the standard per-step solve.
        const bool shared = b == 1;
        const auto cont_row = vt.row(bounds[m + 1]);
        auto continuation = [&grid = p.grid, cont_row](double x) {
            return num::interp_linear(grid, cont_row, x);
        };
        auto u_row = vt.row(bounds[m]);
        par::parallel_for(0, points, threads, [&](std::size_t k) {
            const double s = p.grid.points[k];
            const auto cut = stage_cut(p.functional, s);
            double value = 0.0, mu = 0.0;
            if (!cut || *cut > 0.0) {
                try {
                    const PointSolution ps = solve_point(block_sum, component, shared, b,
                                                         continuation, s, cut, q);
                    value = ps.value;
                    mu = ps.mu;
                } catch (const num::QuadratureError& e) {
                    throw SolveError(fmt::format("block {} point {} (s = {}): {}", m, k, s,
                                                 e.what()),
                                     m, static_cast<int>(k));
                }
            }
            u_row[k] = value;
            for (std::size_t i = bounds[m]; i < bounds[m + 1]; ++i) ct.row(i)[k] = mu;
        });
    }
    return {std::move(vt), std::move(ct)};
}

dist::TwistParameter control_at(const ControlTable& ct, std::size_t step, double s,
                                const num::Grid1D& grid) {
    if (step >= ct.steps) throw std::out_of_range("control_at: step index out of range");
    const auto row = ct.row(step);
    const auto& pts = grid.points;
    if (row.size() != pts.size())
        throw std::invalid_argument("control_at: table/grid size mismatch");

    double v;
    if (s <= pts.front()) {
        v = row.front();
    } else if (s >= pts.back()) {
        v = row.back();  // clamp: controls may be non-affine near the boundary
    } else {
        const auto it = std::upper_bound(pts.begin(), pts.end(), s);
        const std::size_t hi = static_cast<std::size_t>(it - pts.begin());
        const double w = (s - pts[hi - 1]) / (pts[hi] - pts[hi - 1]);
        v = row[hi - 1] + w * (row[hi] - row[hi - 1]);
    }
    return {std::min(v, 1.0 - 1e-9)};
}

}  // namespace rareis::soc
