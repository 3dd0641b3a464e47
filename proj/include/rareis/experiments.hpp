#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rareis/estimators.hpp"
#include "rareis/quadrature.hpp"
#include "rareis/solver.hpp"

namespace rareis::experiments {

enum class Method { naive, hrt_constant, hrt_soc, hrt_soc_ag };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

// Configuration error carrying the dotted key path of the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key_path, const std::string& what)
        : std::runtime_error(key_path + ": " + what), path(std::move(key_path)) {}
    std::string path;
};

// Parsed experiment description. Distribution and threshold parameters stay
// in dB here (the convention configs use); they are converted to linear scale
// when a concrete problem is built, so sweeps can substitute dB values
// directly.
struct ExperimentConfig {
    // problem
    int n_components = 0;
    double m_db = 0.0;
    double sigma_db = 0.0;
    fn::Kind kind = fn::Kind::left_tail;
    double gamma_th_db = 0.0;
    double eta_db = 0.0;      // interference_cdf only
    double x0_m_db = 0.0;     // interference_cdf only
    double x0_sigma_db = 0.0; // interference_cdf only
    std::optional<double> s_bar; // linear-scale override; absent = derived

    // solver
    enum class Mode { standard, aggregate };
    Mode mode = Mode::standard;
    std::optional<std::vector<int>> partition; // absent = auto rule
    int k = 20;
    enum class Spacing { uniform, clustered };
    Spacing spacing = Spacing::uniform;
    num::QuadratureSpec quadrature;

    // estimator
    std::vector<Method> methods{Method::hrt_soc};
    double tol = 0.05;
    std::uint64_t pilot_samples = 10000;
    std::uint64_t max_samples = 1000000;
    std::uint64_t seed = 0;

    // sweep
    struct Sweep {
        std::string parameter; // gamma_th_db | n_components | tol
        std::vector<double> values;
    };
    std::optional<Sweep> sweep;

    // output
    std::string out_path;     // empty = stdout
    enum class Format { csv, json };
    Format format = Format::csv;
    bool timings = true;      // false zeroes the timing columns (reproducible bytes)

    int threads = 0;          // 0 = resolve from environment / hardware
};

// Strict parser: unknown keys, missing required keys, and invariant
// violations raise ConfigError with the key path.
ExperimentConfig parse_config(const std::string& text);

// Concrete problem for one sweep point. `param` is empty for the base
// configuration; otherwise one of the sweep parameters with its value.
soc::ProblemSpec build_problem(const ExperimentConfig& cfg, const std::string& param = "",
                               double value = 0.0);

// Partition used by aggregate solves at dimension n: the explicit config
// partition when given, otherwise pairs with a trailing triple for odd n.
soc::BlockPartition partition_for(const ExperimentConfig& cfg, int n);

// One (sweep value, method) result line. m_required is +inf when the pilot
// never hit the event (naive estimation of something too rare).
struct ReportRow {
    std::string sweep_param; // "none" when the run had no sweep
    double sweep_value = 0.0;
    std::string method;
    double mean = 0.0;
    double variance = 0.0;
    double rel_error = 0.0;
    double m_required = 0.0;
    double backward_s = 0.0;
    double forward_s = 0.0;
    std::uint64_t seed = 0;
};

// Full protocol per sweep point and method: backward solve (cached across
// tolerance sweeps), pilot run, samples_to_tol, final run with a derived
// seed capped at max_samples. Rows come back sorted by sweep value then
// method name.
std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg);

// Report serialization. Numbers carry 17 significant digits; CSV writes
// unbounded m_required as "inf", JSON as null.
std::string format_report(const std::vector<ReportRow>& rows, ExperimentConfig::Format format);
std::vector<ReportRow> parse_report(const std::string& text, ExperimentConfig::Format format);

// format_report to a file, or to stdout when path is empty.
void emit_report(const std::vector<ReportRow>& rows, ExperimentConfig::Format format,
                 const std::string& path);

}  // namespace rareis::experiments
