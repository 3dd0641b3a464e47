#include "rareis/experiments.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "rareis/math_util.hpp"

namespace rareis::experiments {

using nlohmann::json;

const char* method_name(Method m) {
    switch (m) {
        case Method::naive: return "naive";
        case Method::hrt_constant: return "hrt_constant";
        case Method::hrt_soc: return "hrt_soc";
        case Method::hrt_soc_ag: return "hrt_soc_ag";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "naive") return Method::naive;
    if (name == "hrt_constant") return Method::hrt_constant;
    if (name == "hrt_soc") return Method::hrt_soc;
    if (name == "hrt_soc_ag") return Method::hrt_soc_ag;
    throw std::invalid_argument(fmt::format("unknown method '{}'", name));
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path, msg);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

const json& need(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(join(path, key), "missing required key");
    return *it;
}

const json* maybe(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* a : allowed)
            if (it.key() == a) {
                known = true;
                break;
            }
        if (!known) fail(join(path, it.key()), "unknown key");
    }
}

const json& as_object(const json& v, const std::string& path) {
    if (!v.is_object()) fail(path, "expected an object");
    return v;
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
}

std::uint64_t as_count(const json& v, const std::string& path) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        fail(path, "expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) fail(path, "expected a boolean");
    return v.get<bool>();
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

void parse_problem(const json& j, ExperimentConfig& cfg) {
    const std::string path = "problem";
    check_keys(j, path,
               {"n_components", "m_db", "sigma_db", "functional", "gamma_th_db", "eta_db",
                "x0_m_db", "x0_sigma_db", "s_bar"});
    cfg.n_components = as_int(need(j, path, "n_components"), "problem.n_components");
    if (cfg.n_components < 1) fail("problem.n_components", "need at least one component");
    cfg.m_db = as_number(need(j, path, "m_db"), "problem.m_db");
    cfg.sigma_db = as_number(need(j, path, "sigma_db"), "problem.sigma_db");
    if (!(cfg.sigma_db > 0.0)) fail("problem.sigma_db", "must be positive");

    cfg.kind = fn::Kind::left_tail;
    if (const json* f = maybe(j, "functional")) {
        const std::string name = as_string(*f, "problem.functional");
        if (name == "left_tail") cfg.kind = fn::Kind::left_tail;
        else if (name == "right_tail") cfg.kind = fn::Kind::right_tail;
        else if (name == "interference_cdf") cfg.kind = fn::Kind::interference_cdf;
        else fail("problem.functional",
                  fmt::format("unknown functional '{}' (expected left_tail, right_tail or "
                              "interference_cdf)",
                              name));
    }
    cfg.gamma_th_db = as_number(need(j, path, "gamma_th_db"), "problem.gamma_th_db");

    const bool intf = cfg.kind == fn::Kind::interference_cdf;
    for (const char* key : {"eta_db", "x0_m_db", "x0_sigma_db"}) {
        if (intf) {
            if (!maybe(j, key)) fail(join(path, key), "required for the interference_cdf functional");
        } else if (maybe(j, key)) {
            fail(join(path, key), "only meaningful for the interference_cdf functional");
        }
    }
    if (intf) {
        cfg.eta_db = as_number(*maybe(j, "eta_db"), "problem.eta_db");
        cfg.x0_m_db = as_number(*maybe(j, "x0_m_db"), "problem.x0_m_db");
        cfg.x0_sigma_db = as_number(*maybe(j, "x0_sigma_db"), "problem.x0_sigma_db");
        if (!(cfg.x0_sigma_db > 0.0)) fail("problem.x0_sigma_db", "must be positive");
    }
    if (const json* sb = maybe(j, "s_bar")) {
        if (cfg.kind == fn::Kind::left_tail)
            fail("problem.s_bar", "left_tail problems derive the state bound from gamma_th_db");
        const double v = as_number(*sb, "problem.s_bar");
        if (!(v > 0.0) || !std::isfinite(v)) fail("problem.s_bar", "must be positive and finite");
        cfg.s_bar = v;
    }
}

void parse_solver(const json& j, ExperimentConfig& cfg) {
    const std::string path = "solver";
    check_keys(j, path, {"mode", "partition", "k", "spacing", "quadrature"});
    if (const json* m = maybe(j, "mode")) {
        const std::string name = as_string(*m, "solver.mode");
        if (name == "standard") cfg.mode = ExperimentConfig::Mode::standard;
        else if (name == "aggregate") cfg.mode = ExperimentConfig::Mode::aggregate;
        else fail("solver.mode", fmt::format("unknown mode '{}'", name));
    }
    if (const json* p = maybe(j, "partition")) {
        if (p->is_string()) {
            if (p->get<std::string>() != "auto")
                fail("solver.partition", "expected \"auto\" or an array of block sizes");
        } else if (p->is_array()) {
            std::vector<int> sizes;
            for (std::size_t i = 0; i < p->size(); ++i) {
                const int b = as_int((*p)[i], fmt::format("solver.partition[{}]", i));
                if (b < 1) fail(fmt::format("solver.partition[{}]", i), "block sizes must be positive");
                sizes.push_back(b);
            }
            if (sizes.empty()) fail("solver.partition", "partition must be nonempty");
            cfg.partition = std::move(sizes);
        } else {
            fail("solver.partition", "expected \"auto\" or an array of block sizes");
        }
    }
    if (const json* k = maybe(j, "k")) {
        cfg.k = as_int(*k, "solver.k");
        if (cfg.k < 2) fail("solver.k", "need at least 2 grid intervals");
    }
    if (const json* s = maybe(j, "spacing")) {
        const std::string name = as_string(*s, "solver.spacing");
        if (name == "uniform") cfg.spacing = ExperimentConfig::Spacing::uniform;
        else if (name == "clustered") cfg.spacing = ExperimentConfig::Spacing::clustered;
        else fail("solver.spacing", fmt::format("unknown spacing '{}'", name));
    }
    if (const json* q = maybe(j, "quadrature")) {
        const json& qo = as_object(*q, "solver.quadrature");
        check_keys(qo, "solver.quadrature", {"panels", "nodes_per_panel", "rel_tol"});
        if (const json* v = maybe(qo, "panels"))
            cfg.quadrature.panels = as_int(*v, "solver.quadrature.panels");
        if (const json* v = maybe(qo, "nodes_per_panel"))
            cfg.quadrature.nodes_per_panel = as_int(*v, "solver.quadrature.nodes_per_panel");
        if (const json* v = maybe(qo, "rel_tol"))
            cfg.quadrature.rel_tol = as_number(*v, "solver.quadrature.rel_tol");
        try {
            cfg.quadrature.validate();
        } catch (const std::exception& e) {
            fail("solver.quadrature", e.what());
        }
    }
}

void parse_estimator(const json& j, ExperimentConfig& cfg) {
    const std::string path = "estimator";
    check_keys(j, path, {"methods", "tol", "pilot_samples", "max_samples", "seed"});
    if (const json* m = maybe(j, "methods")) {
        if (!m->is_array() || m->empty()) fail("estimator.methods", "expected a nonempty array");
        cfg.methods.clear();
        for (std::size_t i = 0; i < m->size(); ++i) {
            const std::string name = as_string((*m)[i], fmt::format("estimator.methods[{}]", i));
            Method mm;
            try {
                mm = method_from_name(name);
            } catch (const std::exception& e) {
                fail(fmt::format("estimator.methods[{}]", i), e.what());
            }
            if (std::find(cfg.methods.begin(), cfg.methods.end(), mm) != cfg.methods.end())
                fail(fmt::format("estimator.methods[{}]", i),
                     fmt::format("duplicate method '{}'", name));
            cfg.methods.push_back(mm);
        }
    }
    if (const json* t = maybe(j, "tol")) {
        cfg.tol = as_number(*t, "estimator.tol");
        if (!(cfg.tol > 0.0) || !std::isfinite(cfg.tol))
            fail("estimator.tol", "must be positive and finite");
    }
    if (const json* p = maybe(j, "pilot_samples")) {
        cfg.pilot_samples = as_count(*p, "estimator.pilot_samples");
        if (cfg.pilot_samples == 0) fail("estimator.pilot_samples", "must be positive");
    }
    if (const json* m = maybe(j, "max_samples")) {
        cfg.max_samples = as_count(*m, "estimator.max_samples");
        if (cfg.max_samples == 0) fail("estimator.max_samples", "must be positive");
    }
    if (const json* s = maybe(j, "seed")) cfg.seed = as_count(*s, "estimator.seed");
}

void parse_sweep(const json& j, ExperimentConfig& cfg) {
    check_keys(j, "sweep", {"parameter", "values"});
    ExperimentConfig::Sweep sw;
    sw.parameter = as_string(need(j, "sweep", "parameter"), "sweep.parameter");
    if (sw.parameter != "gamma_th_db" && sw.parameter != "n_components" && sw.parameter != "tol")
        fail("sweep.parameter",
             fmt::format("unknown parameter '{}' (expected gamma_th_db, n_components or tol)",
                         sw.parameter));
    const json& vals = need(j, "sweep", "values");
    if (!vals.is_array() || vals.empty()) fail("sweep.values", "expected a nonempty array");
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const std::string p = fmt::format("sweep.values[{}]", i);
        const double v = as_number(vals[i], p);
        if (sw.parameter == "n_components") {
            if (v < 1.0 || v != std::floor(v)) fail(p, "component counts must be positive integers");
        } else if (sw.parameter == "tol") {
            if (!(v > 0.0) || !std::isfinite(v)) fail(p, "tolerances must be positive and finite");
        } else if (!std::isfinite(v)) {
            fail(p, "must be finite");
        }
        sw.values.push_back(v);
    }
    if (sw.values.size() > 1) {
        const bool inc = sw.values[1] > sw.values[0];
        for (std::size_t i = 1; i < sw.values.size(); ++i) {
            const bool step_inc = sw.values[i] > sw.values[i - 1];
            if (sw.values[i] == sw.values[i - 1] || step_inc != inc)
                fail("sweep.values", "values must be strictly monotone");
        }
    }
    cfg.sweep = std::move(sw);
}

void parse_output(const json& j, ExperimentConfig& cfg) {
    check_keys(j, "output", {"path", "format", "timings"});
    if (const json* p = maybe(j, "path")) cfg.out_path = as_string(*p, "output.path");
    if (const json* f = maybe(j, "format")) {
        const std::string name = as_string(*f, "output.format");
        if (name == "csv") cfg.format = ExperimentConfig::Format::csv;
        else if (name == "json") cfg.format = ExperimentConfig::Format::json;
        else fail("output.format", fmt::format("unknown format '{}'", name));
    }
    if (const json* t = maybe(j, "timings")) cfg.timings = as_bool(*t, "output.timings");
}

bool uses_aggregate_solve(const ExperimentConfig& cfg) {
    if (cfg.mode == ExperimentConfig::Mode::aggregate) return true;
    return std::find(cfg.methods.begin(), cfg.methods.end(), Method::hrt_soc_ag) !=
           cfg.methods.end();
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail("$", e.what());
    }
    as_object(root, "$");
    check_keys(root, "", {"problem", "solver", "estimator", "sweep", "output"});

    ExperimentConfig cfg;
    parse_problem(as_object(need(root, "", "problem"), "problem"), cfg);
    if (const json* s = maybe(root, "solver")) parse_solver(as_object(*s, "solver"), cfg);
    if (const json* e = maybe(root, "estimator")) parse_estimator(as_object(*e, "estimator"), cfg);
    if (const json* s = maybe(root, "sweep")) parse_sweep(as_object(*s, "sweep"), cfg);
    if (const json* o = maybe(root, "output")) parse_output(as_object(*o, "output"), cfg);

    if (cfg.partition) {
        if (cfg.sweep && cfg.sweep->parameter == "n_components" && uses_aggregate_solve(cfg))
            fail("solver.partition",
                 "an explicit partition cannot track an n_components sweep; use \"auto\"");
        int total = 0;
        for (int b : *cfg.partition) total += b;
        if (total != cfg.n_components)
            fail("solver.partition",
                 fmt::format("partition sums to {} != {}", total, cfg.n_components));
    }
    return cfg;
}

soc::ProblemSpec build_problem(const ExperimentConfig& cfg, const std::string& param,
                               double value) {
    int n = cfg.n_components;
    double gamma_db = cfg.gamma_th_db;
    if (param == "n_components") n = static_cast<int>(std::llround(value));
    else if (param == "gamma_th_db") gamma_db = value;

    const dist::DistributionModel component = dist::lognormal_from_db(cfg.m_db, cfg.sigma_db);
    std::vector<dist::DistributionModel> components(static_cast<std::size_t>(n), component);

    const double gamma = db_to_linear(gamma_db);
    fn::Functional g = fn::Functional::left_tail(gamma);
    switch (cfg.kind) {
        case fn::Kind::left_tail: break;
        case fn::Kind::right_tail: g = fn::Functional::right_tail(gamma); break;
        case fn::Kind::interference_cdf:
            g = fn::Functional::interference_cdf(
                dist::lognormal_from_db(cfg.x0_m_db, cfg.x0_sigma_db), gamma,
                db_to_linear(cfg.eta_db));
            break;
        case fn::Kind::custom:
            throw std::invalid_argument("custom functionals are not configurable");
    }

    double s_bar;
    if (auto bound = fn::state_space_bound(g)) s_bar = *bound;
    else s_bar = cfg.s_bar ? *cfg.s_bar : soc::default_s_bar(components, g);

    num::Grid1D grid = cfg.spacing == ExperimentConfig::Spacing::uniform
                           ? num::Grid1D::uniform(cfg.k, s_bar)
                           : num::Grid1D::clustered(cfg.k, s_bar, 2.0);
    soc::ProblemSpec p{std::move(components), std::move(g), s_bar, std::move(grid)};
    p.validate();
    return p;
}

soc::BlockPartition partition_for(const ExperimentConfig& cfg, int n) {
    if (cfg.partition) {
        soc::BlockPartition part{*cfg.partition};
        part.validate(n);
        return part;
    }
    return soc::BlockPartition::auto_blocks(n);
}

namespace {

struct Artifacts {
    bool ready = false;
    std::optional<std::pair<soc::ValueTable, soc::ControlTable>> tables;
    double backward_s = 0.0;
    est::EstimatorResult pilot;
    std::uint64_t pilot_seed = 0;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg) {
    const std::string param = cfg.sweep ? cfg.sweep->parameter : std::string("none");
    std::vector<double> values = cfg.sweep ? cfg.sweep->values : std::vector<double>{0.0};
    std::sort(values.begin(), values.end());

    std::vector<Method> methods = cfg.methods;
    std::sort(methods.begin(), methods.end(), [](Method a, Method b) {
        return std::strcmp(method_name(a), method_name(b)) < 0;
    });

    // Problems are keyed by the sweep value when the sweep changes the
    // problem; a tol sweep reuses one solve and pilot for every point.
    const bool problem_varies = param == "gamma_th_db" || param == "n_components";
    std::map<std::pair<std::uint64_t, Method>, Artifacts> cache;

    std::vector<ReportRow> rows;
    for (std::size_t j = 0; j < values.size(); ++j) {
        const double value = values[j];
        const soc::ProblemSpec prob =
            cfg.sweep ? build_problem(cfg, param, value) : build_problem(cfg);
        const double tol = param == "tol" ? value : cfg.tol;
        const std::uint64_t pkey =
            problem_varies ? std::bit_cast<std::uint64_t>(value) : std::uint64_t{0};
        const int n = static_cast<int>(prob.n());

        for (Method m : methods) {
            Artifacts& art = cache[{pkey, m}];
            if (!art.ready) {
                art.pilot_seed = num::splitmix64_at(cfg.seed, j);
                const auto t0 = std::chrono::steady_clock::now();
                switch (m) {
                    case Method::naive: break;
                    case Method::hrt_constant:
                        art.tables = soc::solve_backward_aggregate(
                            prob, soc::BlockPartition::single(n), cfg.quadrature, cfg.threads);
                        break;
                    case Method::hrt_soc:
                        art.tables = soc::solve_backward(prob, cfg.quadrature, cfg.threads);
                        break;
                    case Method::hrt_soc_ag:
                        art.tables = soc::solve_backward_aggregate(
                            prob, partition_for(cfg, n), cfg.quadrature, cfg.threads);
                        break;
                }
                art.backward_s = m == Method::naive ? 0.0 : seconds_since(t0);
                art.pilot =
                    m == Method::naive
                        ? est::run_naive_mc(prob, cfg.pilot_samples, art.pilot_seed, cfg.threads)
                        : est::run_is(prob, art.tables->first, art.tables->second,
                                      cfg.pilot_samples, art.pilot_seed, cfg.threads);
                art.ready = true;
            }

            ReportRow row;
            row.sweep_param = param;
            row.sweep_value = cfg.sweep ? value : 0.0;
            row.method = method_name(m);
            row.backward_s = art.backward_s;

            if (!(art.pilot.mean > 0.0)) {
                // The pilot never saw the event; report that honestly instead
                // of failing the whole sweep.
                row.mean = 0.0;
                row.variance = art.pilot.variance;
                row.rel_error = std::numeric_limits<double>::infinity();
                row.m_required = std::numeric_limits<double>::infinity();
                row.forward_s = art.pilot.forward_seconds;
                row.seed = art.pilot_seed;
            } else {
                const std::uint64_t m_req = est::samples_to_tol(art.pilot, tol);
                const std::uint64_t m_final = std::min(m_req, cfg.max_samples);
                const std::uint64_t final_seed = num::splitmix64_at(art.pilot_seed, 0);
                const est::EstimatorResult fin =
                    m == Method::naive
                        ? est::run_naive_mc(prob, m_final, final_seed, cfg.threads)
                        : est::run_is(prob, art.tables->first, art.tables->second, m_final,
                                      final_seed, cfg.threads);
                row.mean = fin.mean;
                row.variance = fin.variance;
                row.rel_error = fin.rel_error;
                row.m_required = static_cast<double>(m_req);
                row.forward_s = art.pilot.forward_seconds + fin.forward_seconds;
                row.seed = final_seed;
            }
            if (!cfg.timings) {
                row.backward_s = 0.0;
                row.forward_s = 0.0;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

namespace {

constexpr const char* kCsvHeader =
    "sweep_param,sweep_value,method,mean,variance,rel_error,m_required,backward_s,forward_s,"
    "seed";

std::string csv_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", v);
}

double parse_double(const std::string& field, const char* what) {
    if (field == "inf") return std::numeric_limits<double>::infinity();
    if (field == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v;
    try {
        v = std::stod(field, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(fmt::format("bad {} field '{}'", what, field));
    }
    if (used != field.size())
        throw std::invalid_argument(fmt::format("bad {} field '{}'", what, field));
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

}  // namespace

std::string format_report(const std::vector<ReportRow>& rows, ExperimentConfig::Format format) {
    if (format == ExperimentConfig::Format::csv) {
        std::string out = kCsvHeader;
        out.push_back('\n');
        for (const ReportRow& r : rows) {
            out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.sweep_param,
                               csv_number(r.sweep_value), r.method, csv_number(r.mean),
                               csv_number(r.variance), csv_number(r.rel_error),
                               csv_number(r.m_required), csv_number(r.backward_s),
                               csv_number(r.forward_s), r.seed);
        }
        return out;
    }
    json arr = json::array();
    for (const ReportRow& r : rows) {
        json o;
        o["sweep_param"] = r.sweep_param;
        o["sweep_value"] = r.sweep_value;
        o["method"] = r.method;
        o["mean"] = r.mean;
        o["variance"] = r.variance;
        o["rel_error"] = std::isinf(r.rel_error) ? json() : json(r.rel_error);
        o["m_required"] = std::isinf(r.m_required) ? json() : json(r.m_required);
        o["backward_s"] = r.backward_s;
        o["forward_s"] = r.forward_s;
        o["seed"] = r.seed;
        arr.push_back(std::move(o));
    }
    return arr.dump(2) + "\n";
}

std::vector<ReportRow> parse_report(const std::string& text, ExperimentConfig::Format format) {
    std::vector<ReportRow> rows;
    if (format == ExperimentConfig::Format::csv) {
        std::istringstream in(text);
        std::string line;
        if (!std::getline(in, line) || line != kCsvHeader)
            throw std::invalid_argument("report header does not match the expected schema");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const std::vector<std::string> f = split_csv_line(line);
            if (f.size() != 10)
                throw std::invalid_argument(
                    fmt::format("expected 10 fields per row, found {}", f.size()));
            ReportRow r;
            r.sweep_param = f[0];
            r.sweep_value = parse_double(f[1], "sweep_value");
            r.method = f[2];
            r.mean = parse_double(f[3], "mean");
            r.variance = parse_double(f[4], "variance");
            r.rel_error = parse_double(f[5], "rel_error");
            r.m_required = parse_double(f[6], "m_required");
            r.backward_s = parse_double(f[7], "backward_s");
            r.forward_s = parse_double(f[8], "forward_s");
            r.seed = std::stoull(f[9]);
            rows.push_back(std::move(r));
        }
        return rows;
    }
    json arr;
    try {
        arr = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(fmt::format("bad report JSON: {}", e.what()));
    }
    if (!arr.is_array()) throw std::invalid_argument("report JSON must be an array of rows");
    for (const json& o : arr) {
        ReportRow r;
        r.sweep_param = o.at("sweep_param").get<std::string>();
        r.sweep_value = o.at("sweep_value").get<double>();
        r.method = o.at("method").get<std::string>();
        r.mean = o.at("mean").get<double>();
        r.variance = o.at("variance").get<double>();
        r.rel_error = o.at("rel_error").is_null() ? std::numeric_limits<double>::infinity()
                                                  : o.at("rel_error").get<double>();
        r.m_required = o.at("m_required").is_null() ? std::numeric_limits<double>::infinity()
                                                    : o.at("m_required").get<double>();
        r.backward_s = o.at("backward_s").get<double>();
        r.forward_s = o.at("forward_s").get<double>();
        r.seed = o.at("seed").get<std::uint64_t>();
        rows.push_back(std::move(r));
    }
    return rows;
}

void emit_report(const std::vector<ReportRow>& rows, ExperimentConfig::Format format,
                 const std::string& path) {
    const std::string text = format_report(rows, format);
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path));
    out << text;
    if (!out) throw std::runtime_error(fmt::format("failed writing report to '{}'", path));
}

}  // namespace rareis::experiments
