#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fmt/format.h>
#include <fstream>
#include <limits>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "rareis/distributions.hpp"
#include "rareis/estimators.hpp"
#include "rareis/experiments.hpp"
#include "rareis/grid.hpp"
#include "rareis/math_util.hpp"
#include "rareis/solver.hpp"
#include "rareis/tables_io.hpp"

namespace dist = rareis::dist;
namespace fn = rareis::fn;
namespace num = rareis::num;
namespace soc = rareis::soc;
namespace est = rareis::est;
namespace xp = rareis::experiments;

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

xp::ExperimentConfig parse(const json& j) { return xp::parse_config(j.dump()); }

// smallest config the parser accepts; subcases mutate copies of it
json minimal() {
    json j;
    j["problem"] = {{"n_components", 4}, {"m_db", 0.0}, {"sigma_db", 3.0}, {"gamma_th_db", -10.0}};
    return j;
}

struct TempFile {
    std::string path;
    explicit TempFile(const char* name) : path(std::string("/tmp/") + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

struct Shell {
    int code;
    std::string out;
    std::string err;
};

// runs through /bin/sh with stdout and stderr captured
Shell sh(const std::string& cmd) {
    TempFile o("xp_sh_out.txt");
    TempFile e("xp_sh_err.txt");
    const int rc = std::system(fmt::format("{} > {} 2> {}", cmd, o.path, e.path).c_str());
    REQUIRE(rc != -1);
    return {WEXITSTATUS(rc), slurp(o.path), slurp(e.path)};
}

bool contains(const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("method names round trip") {
    const xp::Method all[] = {xp::Method::naive, xp::Method::hrt_constant, xp::Method::hrt_soc,
                              xp::Method::hrt_soc_ag};
    for (xp::Method m : all) CHECK(xp::method_from_name(xp::method_name(m)) == m);
    CHECK(std::string(xp::method_name(xp::Method::hrt_soc)) == "hrt_soc");
    CHECK_THROWS_WITH_AS(xp::method_from_name("metropolis"), "unknown method 'metropolis'",
                         std::invalid_argument);
}

TEST_CASE("config parsing applies the documented defaults") {
    const xp::ExperimentConfig cfg = parse(minimal());

    CHECK(cfg.n_components == 4);
    CHECK(cfg.m_db == 0.0);
    CHECK(cfg.sigma_db == 3.0);
    CHECK(cfg.gamma_th_db == -10.0);
    CHECK(cfg.kind == fn::Kind::left_tail);
    CHECK(!cfg.s_bar);

    CHECK(cfg.mode == xp::ExperimentConfig::Mode::standard);
    CHECK(!cfg.partition);
    CHECK(cfg.k == 20);
    CHECK(cfg.spacing == xp::ExperimentConfig::Spacing::uniform);
    CHECK(cfg.quadrature.panels == 8);
    CHECK(cfg.quadrature.nodes_per_panel == 32);
    CHECK(cfg.quadrature.rel_tol == 1e-7);

    REQUIRE(cfg.methods.size() == 1);
    CHECK(cfg.methods[0] == xp::Method::hrt_soc);
    CHECK(cfg.tol == 0.05);
    CHECK(cfg.pilot_samples == 10000);
    CHECK(cfg.max_samples == 1000000);
    CHECK(cfg.seed == 0);

    CHECK(!cfg.sweep);
    CHECK(cfg.out_path.empty());
    CHECK(cfg.format == xp::ExperimentConfig::Format::csv);
    CHECK(cfg.timings);
    CHECK(cfg.threads == 0);
}

TEST_CASE("config errors carry dotted key paths") {
    SUBCASE("malformed json") {
        CHECK_THROWS_WITH_AS(xp::parse_config("{nope"), doctest::Contains("$:"), xp::ConfigError);
        CHECK_THROWS_WITH_AS(xp::parse_config("[1, 2]"), "$: expected an object", xp::ConfigError);
    }
    SUBCASE("unknown keys") {
        json j = minimal();
        j["bogus"] = json::object();
        CHECK_THROWS_WITH_AS(parse(j), "bogus: unknown key", xp::ConfigError);
        json k = minimal();
        k["problem"]["gamma"] = 0.1;
        CHECK_THROWS_WITH_AS(parse(k), "problem.gamma: unknown key", xp::ConfigError);
    }
    SUBCASE("problem section") {
        json j = minimal();
        j["problem"].erase("n_components");
        CHECK_THROWS_WITH_AS(parse(j), "problem.n_components: missing required key",
                             xp::ConfigError);

        j = minimal();
        j["problem"]["n_components"] = 0;
        CHECK_THROWS_WITH_AS(parse(j), "problem.n_components: need at least one component",
                             xp::ConfigError);

        j = minimal();
        j["problem"]["n_components"] = 2.5;
        CHECK_THROWS_WITH_AS(parse(j), "problem.n_components: expected an integer",
                             xp::ConfigError);

        j = minimal();
        j["problem"]["sigma_db"] = 0.0;
        CHECK_THROWS_WITH_AS(parse(j), "problem.sigma_db: must be positive", xp::ConfigError);

        j = minimal();
        j["problem"]["functional"] = "parabolic";
        CHECK_THROWS_WITH_AS(parse(j), doctest::Contains("problem.functional: unknown functional"),
                             xp::ConfigError);
    }
    SUBCASE("interference keys are tied to the functional") {
        json j = minimal();
        j["problem"]["eta_db"] = 3.0;
        CHECK_THROWS_WITH_AS(
            parse(j), "problem.eta_db: only meaningful for the interference_cdf functional",
            xp::ConfigError);

        j = minimal();
        j["problem"]["functional"] = "interference_cdf";
        j["problem"]["eta_db"] = 3.0;
        j["problem"]["x0_sigma_db"] = 4.0;
        CHECK_THROWS_WITH_AS(parse(j),
                             "problem.x0_m_db: required for the interference_cdf functional",
                             xp::ConfigError);
        j["problem"]["x0_m_db"] = 10.0;
        CHECK_NOTHROW(parse(j));
    }
    SUBCASE("state bound override") {
        json j = minimal();
        j["problem"]["s_bar"] = 1.0;
        CHECK_THROWS_WITH_AS(
            parse(j), "problem.s_bar: left_tail problems derive the state bound from gamma_th_db",
            xp::ConfigError);

        j["problem"]["functional"] = "right_tail";
        CHECK_NOTHROW(parse(j));
        j["problem"]["s_bar"] = -1.0;
        CHECK_THROWS_WITH_AS(parse(j), "problem.s_bar: must be positive and finite",
                             xp::ConfigError);
    }
    SUBCASE("solver section") {
        json j = minimal();
        j["solver"]["k"] = 1;
        CHECK_THROWS_WITH_AS(parse(j), "solver.k: need at least 2 grid intervals",
                             xp::ConfigError);

        j = minimal();
        j["solver"]["mode"] = "blockwise";
        CHECK_THROWS_WITH_AS(parse(j), "solver.mode: unknown mode 'blockwise'", xp::ConfigError);

        j = minimal();
        j["solver"]["partition"] = "pairs";
        CHECK_THROWS_WITH_AS(parse(j),
                             "solver.partition: expected \"auto\" or an array of block sizes",
                             xp::ConfigError);

        j = minimal();
        j["solver"]["partition"] = json::array({2, 0, 2});
        CHECK_THROWS_WITH_AS(parse(j), "solver.partition[1]: block sizes must be positive",
                             xp::ConfigError);

        j = minimal();
        j["solver"]["partition"] = json::array();
        CHECK_THROWS_WITH_AS(parse(j), "solver.partition: partition must be nonempty",
                             xp::ConfigError);

        j = minimal();
        j["solver"]["quadrature"] = {{"panels", 1}, {"nodes_per_panel", 2}};
        CHECK_THROWS_WITH_AS(parse(j), doctest::Contains("solver.quadrature:"), xp::ConfigError);
    }
    SUBCASE("partition must cover the components") {
        json j = minimal();
        j["problem"]["n_components"] = 10;
        j["solver"]["partition"] = json::array({2, 2, 2});
        CHECK_THROWS_WITH_AS(parse(j), "solver.partition: partition sums to 6 != 10",
                             xp::ConfigError);

        j["solver"]["partition"] = "auto";
        const xp::ExperimentConfig cfg = parse(j);
        CHECK(!cfg.partition);
    }
    SUBCASE("estimator section") {
        json j = minimal();
        j["estimator"]["methods"] = json::array();
        CHECK_THROWS_WITH_AS(parse(j), "estimator.methods: expected a nonempty array",
                             xp::ConfigError);

        j = minimal();
        j["estimator"]["methods"] = json::array({"metropolis"});
        CHECK_THROWS_WITH_AS(parse(j), "estimator.methods[0]: unknown method 'metropolis'",
                             xp::ConfigError);

        j = minimal();
        j["estimator"]["methods"] = json::array({"naive", "naive"});
        CHECK_THROWS_WITH_AS(parse(j), "estimator.methods[1]: duplicate method 'naive'",
                             xp::ConfigError);

        j = minimal();
        j["estimator"]["tol"] = 0.0;
        CHECK_THROWS_WITH_AS(parse(j), "estimator.tol: must be positive and finite",
                             xp::ConfigError);

        j = minimal();
        j["estimator"]["pilot_samples"] = 0;
        CHECK_THROWS_WITH_AS(parse(j), "estimator.pilot_samples: must be positive",
                             xp::ConfigError);

        j = minimal();
        j["estimator"]["seed"] = -1;
        CHECK_THROWS_WITH_AS(parse(j), "estimator.seed: expected a nonnegative integer",
                             xp::ConfigError);
    }
    SUBCASE("output section") {
        json j = minimal();
        j["output"]["format"] = "xml";
        CHECK_THROWS_WITH_AS(parse(j), "output.format: unknown format 'xml'", xp::ConfigError);
        j = minimal();
        j["output"]["timings"] = 1;
        CHECK_THROWS_WITH_AS(parse(j), "output.timings: expected a boolean", xp::ConfigError);
    }
}

TEST_CASE("sweep validation") {
    json j = minimal();
    j["sweep"] = {{"parameter", "gamma_th_db"}, {"values", json::array({-6.0, -8.0, -10.0})}};

    SUBCASE("either strict direction is fine") {
        CHECK(parse(j).sweep->values == std::vector<double>{-6.0, -8.0, -10.0});
        j["sweep"]["values"] = json::array({-10.0, -8.0, -6.0});
        CHECK(parse(j).sweep->values == std::vector<double>{-10.0, -8.0, -6.0});
    }
    SUBCASE("plateaus and direction changes are not") {
        j["sweep"]["values"] = json::array({-6.0, -6.0});
        CHECK_THROWS_WITH_AS(parse(j), "sweep.values: values must be strictly monotone",
                             xp::ConfigError);
        j["sweep"]["values"] = json::array({-6.0, -8.0, -7.0});
        CHECK_THROWS_WITH_AS(parse(j), "sweep.values: values must be strictly monotone",
                             xp::ConfigError);
    }
    SUBCASE("parameter names are closed") {
        j["sweep"]["parameter"] = "sigma_db";
        CHECK_THROWS_WITH_AS(parse(j), doctest::Contains("sweep.parameter: unknown parameter"),
                             xp::ConfigError);
    }
    SUBCASE("values must be a nonempty array") {
        j["sweep"]["values"] = json::array();
        CHECK_THROWS_WITH_AS(parse(j), "sweep.values: expected a nonempty array",
                             xp::ConfigError);
    }
    SUBCASE("component counts are integers") {
        j["sweep"] = {{"parameter", "n_components"}, {"values", json::array({2.0, 2.5})}};
        CHECK_THROWS_WITH_AS(parse(j),
                             "sweep.values[1]: component counts must be positive integers",
                             xp::ConfigError);
        j["sweep"]["values"] = json::array({2, 4, 8});
        CHECK_NOTHROW(parse(j));
    }
    SUBCASE("tolerances stay positive") {
        j["sweep"] = {{"parameter", "tol"}, {"values", json::array({0.1, 0.0})}};
        CHECK_THROWS_WITH_AS(parse(j), "sweep.values[1]: tolerances must be positive and finite",
                             xp::ConfigError);
    }
    SUBCASE("explicit partitions cannot track a component sweep") {
        j["sweep"] = {{"parameter", "n_components"}, {"values", json::array({4, 6})}};
        j["solver"]["partition"] = json::array({2, 2});
        j["solver"]["mode"] = "aggregate";
        CHECK_THROWS_WITH_AS(
            parse(j),
            "solver.partition: an explicit partition cannot track an n_components sweep; "
            "use \"auto\"",
            xp::ConfigError);

        // via the method list too
        j["solver"]["mode"] = "standard";
        j["estimator"]["methods"] = json::array({"hrt_soc_ag"});
        CHECK_THROWS_AS(parse(j), xp::ConfigError);

        // harmless when nothing solves aggregate tables
        j["estimator"]["methods"] = json::array({"hrt_soc"});
        CHECK_NOTHROW(parse(j));
    }
}

TEST_CASE("problems are built in linear scale at sweep points") {
    const xp::ExperimentConfig cfg = parse(minimal());
    const double gamma = std::pow(10.0, -10.0 / 10.0);

    const soc::ProblemSpec p = xp::build_problem(cfg);
    CHECK(p.n() == 4);
    CHECK(p.functional.kind() == fn::Kind::left_tail);
    CHECK(p.functional.gamma_th() == gamma);
    CHECK(p.s_bar == gamma);
    for (const auto& c : p.components) CHECK(c.same_parameters(dist::lognormal_from_db(0.0, 3.0)));
    CHECK(p.grid.points == num::Grid1D::uniform(20, gamma).points);

    SUBCASE("threshold sweep point") {
        const soc::ProblemSpec q = xp::build_problem(cfg, "gamma_th_db", -20.0);
        CHECK(q.functional.gamma_th() == std::pow(10.0, -2.0));
        CHECK(q.s_bar == q.functional.gamma_th());
        CHECK(q.n() == 4);
    }
    SUBCASE("component sweep point") {
        const soc::ProblemSpec q = xp::build_problem(cfg, "n_components", 6.0);
        CHECK(q.n() == 6);
        CHECK(q.s_bar == gamma);
    }
    SUBCASE("right tail derives a bound unless overridden") {
        json r = minimal();
        r["problem"]["functional"] = "right_tail";
        const soc::ProblemSpec q = xp::build_problem(parse(r));
        CHECK(q.functional.kind() == fn::Kind::right_tail);
        CHECK(q.s_bar > gamma);
        CHECK(std::isfinite(q.s_bar));

        r["problem"]["s_bar"] = 5.0;
        const soc::ProblemSpec qo = xp::build_problem(parse(r));
        CHECK(qo.s_bar == 5.0);
        CHECK(qo.grid.points == num::Grid1D::uniform(20, 5.0).points);
    }
    SUBCASE("interference victim parameters convert like the components") {
        json r = minimal();
        r["problem"]["functional"] = "interference_cdf";
        r["problem"]["eta_db"] = 3.0;
        r["problem"]["x0_m_db"] = 10.0;
        r["problem"]["x0_sigma_db"] = 4.0;
        r["problem"]["s_bar"] = 2.5;
        const soc::ProblemSpec q = xp::build_problem(parse(r));
        CHECK(q.functional.kind() == fn::Kind::interference_cdf);
        CHECK(q.functional.eta() == std::pow(10.0, 3.0 / 10.0));
        CHECK(q.functional.x0().same_parameters(dist::lognormal_from_db(10.0, 4.0)));
        CHECK(q.s_bar == 2.5);
    }
    SUBCASE("clustered spacing is forwarded") {
        json r = minimal();
        r["solver"] = {{"spacing", "clustered"}, {"k", 12}};
        const soc::ProblemSpec q = xp::build_problem(parse(r));
        CHECK(q.grid.points == num::Grid1D::clustered(12, gamma, 2.0).points);
    }
}

TEST_CASE("partition selection") {
    const xp::ExperimentConfig cfg = parse(minimal());
    CHECK(xp::partition_for(cfg, 1).sizes == std::vector<int>{1});
    CHECK(xp::partition_for(cfg, 5).sizes == std::vector<int>{2, 3});
    CHECK(xp::partition_for(cfg, 6).sizes == std::vector<int>{2, 2, 2});

    json e = minimal();
    e["solver"]["partition"] = json::array({3, 1});
    const xp::ExperimentConfig ce = parse(e);
    CHECK(xp::partition_for(ce, 4).sizes == std::vector<int>{3, 1});
    CHECK_THROWS_AS(xp::partition_for(ce, 5), std::invalid_argument);
}

namespace {

// two log-normal components with unit log-sd, threshold in the easy range so
// even naive pilots always see the event
json small_run_config() {
    json j;
    j["problem"] = {{"n_components", 2},
                    {"m_db", 0.0},
                    {"sigma_db", 4.342944819032518},
                    {"gamma_th_db", -3.0}};
    j["solver"] = {{"k", 10}};
    j["estimator"] = {{"methods", json::array({"naive", "hrt_soc"})},
                      {"tol", 0.1},
                      {"pilot_samples", 1000},
                      {"max_samples", 4000},
                      {"seed", 7}};
    j["output"] = {{"timings", false}};
    return j;
}

}  // namespace

TEST_CASE("experiment rows are ordered and reproducible") {
    json j = small_run_config();
    // descending on purpose; rows must come back ascending
    j["sweep"] = {{"parameter", "gamma_th_db"}, {"values", json::array({-1.0, -3.0})}};
    const xp::ExperimentConfig cfg = parse(j);

    const std::vector<xp::ReportRow> rows = xp::run_experiment(cfg);
    REQUIRE(rows.size() == 4);

    CHECK(rows[0].sweep_value == -3.0);
    CHECK(rows[1].sweep_value == -3.0);
    CHECK(rows[2].sweep_value == -1.0);
    CHECK(rows[3].sweep_value == -1.0);
    CHECK(rows[0].method == "hrt_soc");
    CHECK(rows[1].method == "naive");
    CHECK(rows[2].method == "hrt_soc");
    CHECK(rows[3].method == "naive");

    for (const xp::ReportRow& r : rows) {
        CHECK(r.sweep_param == "gamma_th_db");
        CHECK(r.mean > 0.0);
        CHECK(r.variance > 0.0);
        CHECK(std::isfinite(r.rel_error));
        CHECK(r.m_required >= 1.0);
        CHECK(std::isfinite(r.m_required));
        CHECK(r.backward_s == 0.0);  // timings disabled
        CHECK(r.forward_s == 0.0);
    }

    // seed protocol: pilot seed from the sorted sweep index, final seed one
    // derivation deeper
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::uint64_t pilot_seed = num::splitmix64_at(7, i / 2);
        CHECK(rows[i].seed == num::splitmix64_at(pilot_seed, 0));
    }

    const std::string once =
        xp::format_report(rows, xp::ExperimentConfig::Format::csv);
    const std::string twice =
        xp::format_report(xp::run_experiment(cfg), xp::ExperimentConfig::Format::csv);
    CHECK(once == twice);
}

TEST_CASE("tolerance sweeps reuse one solve and one pilot") {
    json j = small_run_config();
    j["estimator"]["methods"] = json::array({"hrt_soc"});
    j["estimator"]["pilot_samples"] = 2000;
    j["estimator"]["max_samples"] = 3000;
    j["estimator"]["seed"] = 11;
    j["output"]["timings"] = true;
    j["sweep"] = {{"parameter", "tol"}, {"values", json::array({0.01, 0.005})}};

    const std::vector<xp::ReportRow> rows = xp::run_experiment(parse(j));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].sweep_value == 0.005);
    CHECK(rows[1].sweep_value == 0.01);

    // one backward solve serves both points, so the timing is literally shared
    CHECK(rows[0].backward_s > 0.0);
    CHECK(rows[0].backward_s == rows[1].backward_s);

    // both required counts exceed the cap, so the final runs coincide exactly
    const std::uint64_t final_seed = num::splitmix64_at(num::splitmix64_at(11, 0), 0);
    CHECK(rows[0].seed == final_seed);
    CHECK(rows[1].seed == final_seed);
    CHECK(rows[0].mean == rows[1].mean);
    CHECK(rows[0].variance == rows[1].variance);
    CHECK(rows[0].rel_error == rows[1].rel_error);

    // halving the tolerance quadruples the requirement up to the ceiling
    CHECK(rows[0].m_required > 3000.0);
    CHECK(rows[1].m_required > 3000.0);
    CHECK(std::abs(rows[0].m_required - 4.0 * rows[1].m_required) <= 3.0);
}

TEST_CASE("pilot misses are reported honestly") {
    json j;
    j["problem"] = {{"n_components", 4},
                    {"m_db", 0.0},
                    {"sigma_db", 4.342944819032518},
                    {"gamma_th_db", -6.9897000433601875}};  // sum below 0.2, about 1.3e-10
    j["solver"] = {{"k", 16}};
    j["estimator"] = {{"methods", json::array({"naive", "hrt_soc"})},
                      {"pilot_samples", 1000},
                      {"max_samples", 2000},
                      {"seed", 5}};
    const xp::ExperimentConfig cfg = parse(j);

    const std::vector<xp::ReportRow> rows = xp::run_experiment(cfg);
    REQUIRE(rows.size() == 2);
    const xp::ReportRow& is = rows[0];
    const xp::ReportRow& mc = rows[1];
    REQUIRE(is.method == "hrt_soc");
    REQUIRE(mc.method == "naive");
    CHECK(is.sweep_param == "none");
    CHECK(is.sweep_value == 0.0);

    // a thousand naive draws cannot see a 1e-10 event
    CHECK(mc.mean == 0.0);
    CHECK(mc.variance == 0.0);
    CHECK(mc.rel_error == kInf);
    CHECK(mc.m_required == kInf);
    CHECK(mc.backward_s == 0.0);
    CHECK(mc.seed == num::splitmix64_at(5, 0));

    // the controlled sampler estimates it from two thousand
    CHECK(is.mean > 0.0);
    CHECK(std::abs(is.mean - 1.2935339081e-10) < 0.5 * 1.2935339081e-10);
    CHECK(std::isfinite(is.m_required));
    CHECK(is.m_required >= 1.0);
    CHECK(is.backward_s > 0.0);
    CHECK(is.seed == num::splitmix64_at(num::splitmix64_at(5, 0), 0));

    const std::string csv = xp::format_report(rows, xp::ExperimentConfig::Format::csv);
    CHECK(contains(csv, ",inf,inf,"));
    const std::string js = xp::format_report(rows, xp::ExperimentConfig::Format::json);
    CHECK(contains(js, "\"m_required\": null"));
    CHECK(contains(js, "\"rel_error\": null"));
}

TEST_CASE("reports round trip through both formats") {
    std::vector<xp::ReportRow> rows(2);
    rows[0].sweep_param = "gamma_th_db";
    rows[0].sweep_value = -6.989700043360187;
    rows[0].method = "hrt_soc";
    rows[0].mean = 3.0516468476490956e-4;
    rows[0].variance = 1.2345678901234567e-9;
    rows[0].rel_error = 0.012345678901234567;
    rows[0].m_required = 123456789.0;
    rows[0].backward_s = 0.5;
    rows[0].forward_s = 1.25;
    rows[0].seed = 18446744073709551615ull;
    rows[1].sweep_param = "none";
    rows[1].sweep_value = 0.125;
    rows[1].method = "naive";
    rows[1].rel_error = kInf;
    rows[1].m_required = kInf;
    rows[1].seed = 42;

    for (auto format :
         {xp::ExperimentConfig::Format::csv, xp::ExperimentConfig::Format::json}) {
        const std::string text = xp::format_report(rows, format);
        const std::vector<xp::ReportRow> back = xp::parse_report(text, format);
        REQUIRE(back.size() == rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(back[i].sweep_param == rows[i].sweep_param);
            CHECK(back[i].sweep_value == rows[i].sweep_value);
            CHECK(back[i].method == rows[i].method);
            CHECK(back[i].mean == rows[i].mean);
            CHECK(back[i].variance == rows[i].variance);
            CHECK(back[i].rel_error == rows[i].rel_error);
            CHECK(back[i].m_required == rows[i].m_required);
            CHECK(back[i].backward_s == rows[i].backward_s);
            CHECK(back[i].forward_s == rows[i].forward_s);
            CHECK(back[i].seed == rows[i].seed);
        }
    }

    SUBCASE("csv rejects schema drift") {
        const auto csv = xp::ExperimentConfig::Format::csv;
        std::string text = xp::format_report(rows, csv);
        CHECK_THROWS_WITH_AS(xp::parse_report("mean,variance\n", csv),
                             "report header does not match the expected schema",
                             std::invalid_argument);

        std::string short_row = text;
        short_row.replace(short_row.find("hrt_soc"), 8, "");  // drops a comma with the name
        CHECK_THROWS_WITH_AS(xp::parse_report(short_row, csv),
                             "expected 10 fields per row, found 9", std::invalid_argument);

        std::string bad_mean = text;
        bad_mean.replace(bad_mean.find("0.0003"), 6, "0.x003");
        CHECK_THROWS_WITH_AS(xp::parse_report(bad_mean, csv),
                             doctest::Contains("bad mean field"), std::invalid_argument);
    }
    SUBCASE("json rejects non-reports") {
        const auto jsf = xp::ExperimentConfig::Format::json;
        CHECK_THROWS_WITH_AS(xp::parse_report("{}", jsf), "report JSON must be an array of rows",
                             std::invalid_argument);
        CHECK_THROWS_WITH_AS(xp::parse_report("nope", jsf), doctest::Contains("bad report JSON"),
                             std::invalid_argument);
    }
    SUBCASE("emission goes to the named file") {
        TempFile f("xp_report.csv");
        xp::emit_report(rows, xp::ExperimentConfig::Format::csv, f.path);
        CHECK(slurp(f.path) == xp::format_report(rows, xp::ExperimentConfig::Format::csv));
        CHECK_THROWS_WITH_AS(
            xp::emit_report(rows, xp::ExperimentConfig::Format::csv, "/no_such_dir_xp/r.csv"),
            doctest::Contains("cannot open"), std::runtime_error);
    }
}

TEST_CASE("command line drives the full protocol") {
    const std::string cli = fmt::format("\"{}\"", RAREIS_CLI_PATH);

    json base = small_run_config();
    base["estimator"]["methods"] = json::array({"hrt_soc"});
    base["estimator"]["tol"] = 0.2;
    base["estimator"]["pilot_samples"] = 500;
    base["estimator"]["max_samples"] = 2000;
    base["estimator"]["seed"] = 3;

    TempFile cfg_a("xp_cli_a.json");
    spit(cfg_a.path, base.dump(2));
    const xp::ExperimentConfig cfg = xp::parse_config(slurp(cfg_a.path));

    // solve writes an archive that matches an in-process solve bit for bit
    TempFile tab("xp_cli_a.soctab");
    Shell r = sh(fmt::format("{} solve --config {} --out {}", cli, cfg_a.path, tab.path));
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "wrote"));

    const soc::ProblemSpec p = xp::build_problem(cfg);
    const auto [vt, ct] = soc::solve_backward(p, cfg.quadrature);
    const soc::LoadedTables loaded = soc::load_tables(tab.path);
    CHECK(loaded.values.u == vt.u);
    CHECK(loaded.controls.mu == ct.mu);

    // estimation from the archive with a fixed budget and an overridden seed
    TempFile est_csv("xp_cli_est.csv");
    r = sh(fmt::format("{} estimate --config {} --tables {} --samples 1500 --seed 99 --out {}",
                       cli, cfg_a.path, tab.path, est_csv.path));
    REQUIRE(r.code == 0);
    const std::string est_bytes = slurp(est_csv.path);
    {
        const auto rows = xp::parse_report(est_bytes, xp::ExperimentConfig::Format::csv);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].sweep_param == "none");
        CHECK(rows[0].method == "hrt_soc");
        CHECK(rows[0].m_required == 1500.0);
        CHECK(rows[0].seed == 99);
        CHECK(rows[0].backward_s == 0.0);
        CHECK(rows[0].forward_s == 0.0);
        const est::EstimatorResult direct = est::run_is(p, vt, ct, 1500, 99, 1);
        CHECK(rows[0].mean == direct.mean);
        CHECK(rows[0].variance == direct.variance);
        CHECK(rows[0].rel_error == direct.rel_error);
    }

    // worker count must not leak into the report bytes
    TempFile est_t2("xp_cli_est_t2.csv");
    r = sh(fmt::format(
        "{} estimate --config {} --tables {} --samples 1500 --seed 99 --threads 2 --out {}", cli,
        cfg_a.path, tab.path, est_t2.path));
    REQUIRE(r.code == 0);
    CHECK(slurp(est_t2.path) == est_bytes);
    TempFile est_env("xp_cli_est_env.csv");
    r = sh(fmt::format(
        "RARE_IS_THREADS=2 {} estimate --config {} --tables {} --samples 1500 --seed 99 --out {}",
        cli, cfg_a.path, tab.path, est_env.path));
    REQUIRE(r.code == 0);
    CHECK(slurp(est_env.path) == est_bytes);

    // json format override
    TempFile est_json("xp_cli_est.json");
    r = sh(fmt::format(
        "{} estimate --config {} --tables {} --samples 800 --format json --out {}", cli,
        cfg_a.path, tab.path, est_json.path));
    REQUIRE(r.code == 0);
    {
        const auto rows =
            xp::parse_report(slurp(est_json.path), xp::ExperimentConfig::Format::json);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].m_required == 800.0);
    }

    // no --out and no output.path means stdout
    r = sh(fmt::format("{} estimate --config {} --tables {} --samples 600", cli, cfg_a.path,
                       tab.path));
    REQUIRE(r.code == 0);
    {
        const auto rows = xp::parse_report(r.out, xp::ExperimentConfig::Format::csv);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].m_required == 600.0);
    }

    // end-to-end estimate equals the library protocol byte for byte
    TempFile end_csv("xp_cli_end.csv");
    r = sh(fmt::format("{} estimate --config {} --out {}", cli, cfg_a.path, end_csv.path));
    REQUIRE(r.code == 0);
    CHECK(slurp(end_csv.path) ==
          xp::format_report(xp::run_experiment(cfg), xp::ExperimentConfig::Format::csv));

    // compare runs every configured method
    json cmp_cfg = base;
    cmp_cfg["estimator"]["methods"] = json::array({"naive", "hrt_soc"});
    TempFile cfg_b("xp_cli_b.json");
    spit(cfg_b.path, cmp_cfg.dump(2));
    TempFile cmp_csv("xp_cli_cmp.csv");
    r = sh(fmt::format("{} compare --config {} --out {}", cli, cfg_b.path, cmp_csv.path));
    REQUIRE(r.code == 0);
    {
        const std::string bytes = slurp(cmp_csv.path);
        const auto rows = xp::parse_report(bytes, xp::ExperimentConfig::Format::csv);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].method == "hrt_soc");
        CHECK(rows[1].method == "naive");
        CHECK(bytes == xp::format_report(xp::run_experiment(xp::parse_config(slurp(cfg_b.path))),
                                         xp::ExperimentConfig::Format::csv));
    }

    // sweep verb over the tolerance
    json sw_cfg = base;
    sw_cfg["sweep"] = {{"parameter", "tol"}, {"values", json::array({0.2, 0.1})}};
    TempFile cfg_c("xp_cli_c.json");
    spit(cfg_c.path, sw_cfg.dump(2));
    TempFile sw_csv("xp_cli_sw.csv");
    r = sh(fmt::format("{} sweep --config {} --out {}", cli, cfg_c.path, sw_csv.path));
    REQUIRE(r.code == 0);
    {
        const std::string bytes = slurp(sw_csv.path);
        const auto rows = xp::parse_report(bytes, xp::ExperimentConfig::Format::csv);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].sweep_value == 0.1);
        CHECK(rows[1].sweep_value == 0.2);
        CHECK(bytes == xp::format_report(xp::run_experiment(xp::parse_config(slurp(cfg_c.path))),
                                         xp::ExperimentConfig::Format::csv));
    }

    // failure modes exit nonzero with a reason on stderr
    r = sh(fmt::format("{} sweep --config {}", cli, cfg_a.path));
    CHECK(r.code == 1);
    CHECK(contains(r.err, "config has no sweep section"));

    r = sh(fmt::format("{} solve --config {}", cli, cfg_a.path));
    CHECK(r.code == 1);
    CHECK(contains(r.err, "solve needs --out"));

    r = sh(fmt::format("{} estimate --config /tmp/xp_missing_rareis.json", cli));
    CHECK(r.code != 0);

    json off_cfg = base;
    off_cfg["problem"]["gamma_th_db"] = -4.0;
    TempFile cfg_d("xp_cli_d.json");
    spit(cfg_d.path, off_cfg.dump(2));
    r = sh(fmt::format("{} estimate --config {} --tables {} --samples 100", cli, cfg_d.path,
                       tab.path));
    CHECK(r.code == 1);
    CHECK(contains(r.err, "different problem"));
}
