// Command-line front end: solve / estimate / compare / sweep over the
// experiment config schema described in the README.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "rareis/estimators.hpp"
#include "rareis/experiments.hpp"
#include "rareis/kernels.hpp"
#include "rareis/math_util.hpp"
#include "rareis/solver.hpp"
#include "rareis/tables_io.hpp"

namespace xp = rareis::experiments;
namespace soc = rareis::soc;
namespace est = rareis::est;
namespace num = rareis::num;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(fmt::format("cannot read config '{}'", path));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct CommonFlags {
    std::string config_path;
    std::string out_path;
    std::string format;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    bool no_timings = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_out_default) {
    cmd->add_option("--config", f.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", f.out_path,
                    with_out_default ? "output path (default: config output.path, else stdout)"
                                     : "output path");
    cmd->add_option("--seed", f.seed, "override estimator.seed");
    cmd->add_option("--threads", f.threads,
                    "worker threads (default: RARE_IS_THREADS, else hardware)");
    cmd->add_option("--format", f.format, "report format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_flag("--no-timings", f.no_timings,
                  "zero the timing columns so reports are byte-reproducible");
}

xp::ExperimentConfig load_config(const CommonFlags& f) {
    xp::ExperimentConfig cfg = xp::parse_config(read_file(f.config_path));
    if (f.seed) cfg.seed = *f.seed;
    if (f.threads > 0) cfg.threads = f.threads;
    if (!f.out_path.empty()) cfg.out_path = f.out_path;
    if (f.format == "csv") cfg.format = xp::ExperimentConfig::Format::csv;
    else if (f.format == "json") cfg.format = xp::ExperimentConfig::Format::json;
    if (f.no_timings) cfg.timings = false;
    return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::pair<soc::ValueTable, soc::ControlTable> solve_for_mode(const xp::ExperimentConfig& cfg,
                                                             const soc::ProblemSpec& p) {
    const int n = static_cast<int>(p.n());
    if (cfg.mode == xp::ExperimentConfig::Mode::aggregate)
        return soc::solve_backward_aggregate(p, xp::partition_for(cfg, n), cfg.quadrature,
                                             cfg.threads);
    return soc::solve_backward(p, cfg.quadrature, cfg.threads);
}

int cmd_solve(const CommonFlags& f) {
    const xp::ExperimentConfig cfg = load_config(f);
    if (cfg.out_path.empty())
        throw std::runtime_error("solve needs --out (or output.path) for the table archive");
    const soc::ProblemSpec p = xp::build_problem(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const auto [vt, ct] = solve_for_mode(cfg, p);
    const double secs = seconds_since(t0);
    soc::save_tables(vt, ct, p, cfg.out_path);
    std::cout << fmt::format(
        "wrote {} ({} components, {} grid points, {} mode, backward {:.3f}s, {} kernels)\n",
        cfg.out_path, p.n(), p.grid.points.size(),
        ct.aggregate ? "aggregate" : "standard", secs, rareis::num::kernel_backend_name());
    return 0;
}

// Archive problems must match the config byte for byte; both sides were built
// by the same conversion path, so exact comparison is the honest check.
void check_archive_matches(const soc::ProblemSpec& from_cfg, const soc::ProblemSpec& loaded) {
    const auto mismatch = [](const std::string& what) {
        throw std::runtime_error(
            fmt::format("table archive was solved for a different problem: {} differs", what));
    };
    if (loaded.components.size() != from_cfg.components.size()) mismatch("component count");
    for (std::size_t i = 0; i < loaded.components.size(); ++i)
        if (!loaded.components[i].same_parameters(from_cfg.components[i]))
            mismatch(fmt::format("component {}", i));
    if (loaded.functional.kind() != from_cfg.functional.kind()) mismatch("functional kind");
    if (loaded.functional.gamma_th() != from_cfg.functional.gamma_th()) mismatch("gamma_th");
    if (loaded.functional.kind() == rareis::fn::Kind::interference_cdf) {
        if (loaded.functional.eta() != from_cfg.functional.eta()) mismatch("eta");
        if (!loaded.functional.x0().same_parameters(from_cfg.functional.x0()))
            mismatch("interference victim distribution");
    }
    if (loaded.s_bar != from_cfg.s_bar) mismatch("state bound");
    if (loaded.grid.points != from_cfg.grid.points) mismatch("grid");
}

int cmd_estimate(const CommonFlags& f, const std::string& tables_path,
                 std::optional<std::uint64_t> samples) {
    xp::ExperimentConfig cfg = load_config(f);

    if (tables_path.empty() && !samples) {
        // End-to-end pilot/final protocol: exactly the single-point sweep.
        cfg.sweep.reset();
        cfg.methods = {cfg.mode == xp::ExperimentConfig::Mode::aggregate ? xp::Method::hrt_soc_ag
                                                                         : xp::Method::hrt_soc};
        xp::emit_report(xp::run_experiment(cfg), cfg.format, cfg.out_path);
        return 0;
    }

    const soc::ProblemSpec p = xp::build_problem(cfg);
    double backward = 0.0;
    std::optional<std::pair<soc::ValueTable, soc::ControlTable>> tables;
    if (!tables_path.empty()) {
        soc::LoadedTables loaded = soc::load_tables(tables_path);
        check_archive_matches(p, loaded.problem);
        tables.emplace(std::move(loaded.values), std::move(loaded.controls));
    } else {
        const auto t0 = std::chrono::steady_clock::now();
        tables.emplace(solve_for_mode(cfg, p));
        backward = seconds_since(t0);
    }

    xp::ReportRow row;
    row.sweep_param = "none";
    row.method = tables->second.aggregate ? "hrt_soc_ag" : "hrt_soc";
    row.backward_s = backward;

    if (samples) {
        if (*samples == 0) throw std::runtime_error("--samples must be positive");
        const est::EstimatorResult r = est::run_is(p, tables->first, tables->second, *samples,
                                                   cfg.seed, cfg.threads);
        row.mean = r.mean;
        row.variance = r.variance;
        row.rel_error = r.rel_error;
        row.m_required = static_cast<double>(*samples);
        row.forward_s = r.forward_seconds;
        row.seed = r.seed;
    } else {
        const std::uint64_t pilot_seed = num::splitmix64_at(cfg.seed, 0);
        const est::EstimatorResult pilot = est::run_is(p, tables->first, tables->second,
                                                       cfg.pilot_samples, pilot_seed, cfg.threads);
        if (!(pilot.mean > 0.0)) {
            row.mean = 0.0;
            row.variance = pilot.variance;
            row.rel_error = std::numeric_limits<double>::infinity();
            row.m_required = std::numeric_limits<double>::infinity();
            row.forward_s = pilot.forward_seconds;
            row.seed = pilot_seed;
        } else {
            const std::uint64_t m_req = est::samples_to_tol(pilot, cfg.tol);
            const std::uint64_t m_final = std::min(m_req, cfg.max_samples);
            const std::uint64_t final_seed = num::splitmix64_at(pilot_seed, 0);
            const est::EstimatorResult fin = est::run_is(p, tables->first, tables->second,
                                                         m_final, final_seed, cfg.threads);
            row.mean = fin.mean;
            row.variance = fin.variance;
            row.rel_error = fin.rel_error;
            row.m_required = static_cast<double>(m_req);
            row.forward_s = pilot.forward_seconds + fin.forward_seconds;
            row.seed = final_seed;
        }
    }
    if (!cfg.timings) {
        row.backward_s = 0.0;
        row.forward_s = 0.0;
    }
    xp::emit_report({row}, cfg.format, cfg.out_path);
    return 0;
}

int cmd_compare(const CommonFlags& f) {
    xp::ExperimentConfig cfg = load_config(f);
    if (cfg.sweep) {
        std::cerr << "compare ignores the sweep section; use the sweep verb for sweeps\n";
        cfg.sweep.reset();
    }
    xp::emit_report(xp::run_experiment(cfg), cfg.format, cfg.out_path);
    return 0;
}

int cmd_sweep(const CommonFlags& f) {
    const xp::ExperimentConfig cfg = load_config(f);
    if (!cfg.sweep) throw std::runtime_error("config has no sweep section");
    xp::emit_report(xp::run_experiment(cfg), cfg.format, cfg.out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rare-event estimation for sums of log-normals via hazard-rate twisting"};
    app.require_subcommand(1);

    CommonFlags solve_f, estimate_f, compare_f, sweep_f;
    std::string tables_path;
    std::optional<std::uint64_t> samples;

    CLI::App* solve = app.add_subcommand("solve", "backward solve only; writes a .soctab archive");
    add_common(solve, solve_f, false);

    CLI::App* estimate =
        app.add_subcommand("estimate", "estimate E[g(S_N)] end-to-end or from saved tables");
    add_common(estimate, estimate_f, true);
    estimate->add_option("--tables", tables_path, "reuse a .soctab archive instead of solving")
        ->check(CLI::ExistingFile);
    estimate->add_option("--samples", samples, "fixed sample count (skips the pilot protocol)");

    CLI::App* compare =
        app.add_subcommand("compare", "run every configured method at one configuration");
    add_common(compare, compare_f, true);

    CLI::App* sweep = app.add_subcommand("sweep", "sweep gamma_th_db, n_components or tol");
    add_common(sweep, sweep_f, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(solve_f);
        if (estimate->parsed()) return cmd_estimate(estimate_f, tables_path, samples);
        if (compare->parsed()) return cmd_compare(compare_f);
        if (sweep->parsed()) return cmd_sweep(sweep_f);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
