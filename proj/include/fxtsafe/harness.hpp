#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fxtsafe/scenarios.hpp"
#include "fxtsafe/sim.hpp"

namespace fxtsafe::harness {

using json = nlohmann::json;

/// Resolved experiment: scenario blocks plus run-level settings.
struct ExperimentConfig {
    std::string scenario = "gap";  ///< gap | overtake
    scenarios::ControllerKind controller = scenarios::ControllerKind::proposed;
    std::vector<double> sweep;     ///< theta_bar grid for the sweep subcommand
    std::string output_dir = "fxtsafe_out";
    int trace_decimation = 1;
    unsigned seed = 0;
    int threads = 0;               ///< 0: hardware concurrency
    scenarios::GapConfig gap;
    scenarios::OvertakeConfig overtake;

    double theta_bar() const;
    void set_theta_bar(double v);
};

/// Full default configuration as a JSON document, every key present.
json default_config_json();

ExperimentConfig config_from_json(const json& j);
json config_to_json(const ExperimentConfig& cfg);

/// "a.b.c=value": value is parsed as JSON when possible, else taken as a string.
/// Throws ConfigError for unknown paths.
void apply_override(json& doc, const std::string& assignment);

/// Defaults, then the file (if any), then each override in order.
ExperimentConfig load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides);

struct RunSummary {
    std::string scenario;
    std::string controller;
    double theta_bar = 0.0;
    double dt = 0.0;
    std::string outcome;           ///< completed | diverged | aborted_infeasible
    std::string message;
    double stop_time = 0.0;
    bool goal_reached = false;
    double completion_time = 0.0;  ///< +inf when not reached or unsafe
    std::vector<std::string> barrier_labels;
    std::vector<double> min_h;
    bool safe = true;              ///< every min_h >= -kSafetyTol
    bool estimator_activated = false;
    double t_activate = 0.0;
    double settling_time = 0.0;    ///< from activation to ||theta error||_inf <= 1e-3; +inf if never
    int envelope_violations = 0;
    int infeasible_steps = 0;
    int rate_clamps = 0;
    bool passed_gap = false;       ///< gap only
    std::string decision;          ///< overtake only
};

inline constexpr double kSafetyTol = 1e-6;
inline constexpr double kSettleTol = 1e-3;
/// With a fixed Euler substep the adaptation law chatters at around 1e-8 once eta has reached
/// zero, so the envelope is checked with this absolute slack.
inline constexpr double kEnvelopeTol = 1e-6;

/// Samples with ||theta_hat - theta_true||_inf > eta + kEnvelopeTol (1 + ||theta_true||_inf).
int count_envelope_violations(const sim::SimulationTrace& trace, const Vec& theta_true);

/// First time after activation with ||theta_hat - theta_true||_inf <= tol, measured from activation.
double settling_time(const sim::SimulationTrace& trace, const Vec& theta_true, double tol = kSettleTol);

RunSummary summarize(const ExperimentConfig& cfg, const scenarios::Scenario& sc, const sim::SimulationResult& res);

struct RunOutput {
    RunSummary summary;
    sim::SimulationResult result;
};

/// Builds and runs the configured scenario once.
RunOutput run(const ExperimentConfig& cfg);

/// 0 success, 2 safety violation, 3 divergence or infeasible abort.
int exit_code(const RunSummary& s);

json summary_to_json(const RunSummary& s);

std::vector<std::string> trace_header(const sim::SimulationTrace& trace);

/// One row per recorded step (every decimation-th, last always kept), %.17g numbers.
void emit_trace(std::ostream& os, const sim::SimulationTrace& trace, int decimation = 1);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;
};

CsvTable parse_csv(std::istream& is);
void write_csv(std::ostream& os, const CsvTable& table);

struct SweepRow {
    double theta_bar = 0.0;
    double T_proposed = 0.0;
    double T_baseline = 0.0;
    std::string decision_proposed;
    std::string decision_baseline;
    std::string error;
    RunSummary proposed;
    RunSummary baseline;
};

/// Proposed and robust baseline at every theta_bar of cfg.sweep, fanned out over threads.
/// A failing run is recorded in its row's error field.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg);

/// Columns theta_bar, T_proposed, T_baseline, decision_proposed, decision_baseline.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// Side-by-side join of two summary documents with numeric differences b - a.
json compare(const json& a, const json& b);

/// Output root: $FXTSAFE_OUTPUT_ROOT when set, else cfg.output_dir.
std::string output_root(const ExperimentConfig& cfg);

/// Writes config.json, summary.json and trace.csv into dir (created if needed).
void write_run_artifacts(const std::string& dir, const ExperimentConfig& cfg, const RunOutput& out);

std::string format_double(double v);

}  // namespace fxtsafe::harness
