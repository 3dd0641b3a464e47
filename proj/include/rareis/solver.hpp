#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rareis/distributions.hpp"
#include "rareis/functionals.hpp"
#include "rareis/grid.hpp"
#include "rareis/minimize.hpp"
#include "rareis/quadrature.hpp"

namespace rareis::soc {

// Block sizes b_1..b_B with sum N for the aggregate solve.
struct BlockPartition {
    std::vector<int> sizes;

    static BlockPartition ones(int n);
    static BlockPartition single(int n);
    // Default rule: blocks of 2, with a trailing 3 absorbing an odd N.
    static BlockPartition auto_blocks(int n);

    int blocks() const { return static_cast<int>(sizes.size()); }
    void validate(int n) const;
};

struct ProblemSpec {
    std::vector<dist::DistributionModel> components;
    fn::Functional functional;
    double s_bar;
    num::Grid1D grid;

    std::size_t n() const { return components.size(); }
    void validate() const;
};

// Moment-matched log-normal for the full sum of independent components;
// used only to size the state space when the functional has no bound.
dist::DistributionModel fenton_wilkinson(const std::vector<dist::DistributionModel>& components);

// Log-normal matching mean and variance of the sum of b copies of d.
// b = 1 returns d unchanged.
dist::DistributionModel moment_match_block(const dist::DistributionModel& d, int b);

// s_bar from the functional bound when one exists, otherwise the matched
// full-sum quantile at 1 - 1e-4.
double default_s_bar(const std::vector<dist::DistributionModel>& components,
                     const fn::Functional& fun);

// u(n, s_k): (N+1) x (K+1), terminal row g(s_k)^2. In aggregate mode only
// block-boundary rows are populated; interior rows stay zero.
struct ValueTable {
    std::size_t stages = 0;  // rows, N+1
    std::size_t points = 0;  // columns, K+1
    std::vector<double> u;

    ValueTable() = default;
    ValueTable(std::size_t n_stages, std::size_t n_points)
        : stages(n_stages), points(n_points), u(n_stages * n_points, 0.0) {}
    std::span<double> row(std::size_t n) { return {u.data() + n * points, points}; }
    std::span<const double> row(std::size_t n) const { return {u.data() + n * points, points}; }
};

// mu[n][k] is the control applied on step n+1 given the running sum before
// that step; rows are broadcast within aggregate blocks.
struct ControlTable {
    std::size_t steps = 0;   // rows, N
    std::size_t points = 0;  // columns, K+1
    std::vector<double> mu;
    std::vector<int> partition;  // block sizes; all ones in standard mode
    std::vector<int> stage_map;  // block index of each step
    bool aggregate = false;

    ControlTable() = default;
    ControlTable(std::size_t n_steps, std::size_t n_points)
        : steps(n_steps), points(n_points), mu(n_steps * n_points, 0.0) {}
    std::span<double> row(std::size_t n) { return {mu.data() + n * points, points}; }
    std::span<const double> row(std::size_t n) const { return {mu.data() + n * points, points}; }
    // True when step i opens a block; the forward pass refreshes its control
    // only at block starts (every step, in standard mode).
    bool block_start(std::size_t i) const { return i == 0 || stage_map[i] != stage_map[i - 1]; }
};

class SolveError : public std::runtime_error {
public:
    SolveError(const std::string& what, int stage, int point)
        : std::runtime_error(what), stage(stage), point(point) {}
    int stage;
    int point;
};

// Backward dynamic program: for n = N-1..0 and every grid point, minimize the
// per-step stage objective over the twist and tabulate value and control.
std::pair<ValueTable, ControlTable> solve_backward(const ProblemSpec& p,
                                                   const num::QuadratureSpec& q,
                                                   int threads = 1);

// Aggregate variant: one minimization per block and grid point, with the
// block-sum density moment-matched and the per-block control broadcast to
// the block's steps. Requires identical components within each block.
std::pair<ValueTable, ControlTable> solve_backward_aggregate(const ProblemSpec& p,
                                                             const BlockPartition& part,
                                                             const num::QuadratureSpec& q,
                                                             int threads = 1);

// Control lookup at arbitrary state: linear interpolation inside the grid,
// clamped (not extrapolated) beyond it, capped at 1 - 1e-9.
dist::TwistParameter control_at(const ControlTable& ct, std::size_t step, double s,
                                const num::Grid1D& grid);

}  // namespace rareis::soc
