#include "fxtsafe/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <random>
#include <ostream>
#include <sstream>
#include <thread>

namespace fxtsafe::harness {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

json vec_json(const Vec& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vec json_vec(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
    return rows;
}

Mat json_mat(const json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) return Mat(0, 0);
    Mat m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.front().size()) throw ConfigError("ragged matrix in config");
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}

std::string law_name(estimator::Law law) {
    switch (law) {
        case estimator::Law::fixed_time: return "fixed_time";
        case estimator::Law::finite_time: return "finite_time";
        case estimator::Law::frozen: return "frozen";
    }
    return "fixed_time";
}

estimator::Law parse_law(const std::string& s) {
    if (s == "fixed_time") return estimator::Law::fixed_time;
    if (s == "finite_time") return estimator::Law::finite_time;
    if (s == "frozen") return estimator::Law::frozen;
    throw ConfigError("unknown estimator law: " + s);
}

json estimator_json(const estimator::EstimatorConfig& e) {
    return {{"law", law_name(e.law)},   {"c1e", e.gains.c1e},       {"c2e", e.gains.c2e},
            {"mu_e", e.gains.mu_e},     {"sigma", e.gains.sigma},   {"k_e", e.k_e},
            {"ell_e", e.ell_e},         {"max_rate", e.max_rate},   {"euler_substep", e.euler_substep}};
}

estimator::EstimatorConfig json_estimator(const json& j) {
    estimator::EstimatorConfig e;
    e.law = parse_law(j.at("law").get<std::string>());
    e.gains.c1e = j.at("c1e").get<double>();
    e.gains.c2e = j.at("c2e").get<double>();
    e.gains.mu_e = j.at("mu_e").get<double>();
    e.gains.sigma = j.at("sigma").get<double>();
    e.k_e = j.at("k_e").get<double>();
    e.ell_e = j.at("ell_e").get<double>();
    e.max_rate = j.at("max_rate").get<double>();
    e.euler_substep = j.at("euler_substep").get<double>();
    return e;
}

json gap_json(const scenarios::GapConfig& c) {
    return {{"K_delta", c.K_delta},
            {"f1", c.f1},
            {"f2", c.f2},
            {"theta_true", vec_json(c.theta_true)},
            {"theta_center", vec_json(c.theta_center)},
            {"theta_bar", c.theta_bar},
            {"theta_hat0", vec_json(c.theta_hat0)},
            {"a", c.a},
            {"b", c.b},
            {"x1", c.x1},
            {"y1", c.y1},
            {"x2", c.x2},
            {"y2", c.y2},
            {"K_V", c.K_V},
            {"T", c.T},
            {"mu", c.mu},
            {"Q", mat_json(c.Q)},
            {"p0", c.p0},
            {"p1", c.p1},
            {"p2", c.p2},
            {"u_bar1", c.u_bar1},
            {"u_bar2", c.u_bar2},
            {"x0", vec_json(c.x0)},
            {"goal_radius", c.goal_radius},
            {"gamma", c.gamma},
            {"t_final", c.t_final},
            {"dt", c.dt}};
}

scenarios::GapConfig json_gap(const json& j) {
    scenarios::GapConfig c;
    c.K_delta = j.at("K_delta").get<double>();
    c.f1 = j.at("f1").get<double>();
    c.f2 = j.at("f2").get<double>();
    c.theta_true = json_vec(j.at("theta_true"));
    c.theta_center = json_vec(j.at("theta_center"));
    c.theta_bar = j.at("theta_bar").get<double>();
    c.theta_hat0 = json_vec(j.at("theta_hat0"));
    c.a = j.at("a").get<double>();
    c.b = j.at("b").get<double>();
    c.x1 = j.at("x1").get<double>();
    c.y1 = j.at("y1").get<double>();
    c.x2 = j.at("x2").get<double>();
    c.y2 = j.at("y2").get<double>();
    c.K_V = j.at("K_V").get<double>();
    c.T = j.at("T").get<double>();
    c.mu = j.at("mu").get<double>();
    c.Q = json_mat(j.at("Q"));
    c.p0 = j.at("p0").get<double>();
    c.p1 = j.at("p1").get<double>();
    c.p2 = j.at("p2").get<double>();
    c.u_bar1 = j.at("u_bar1").get<double>();
    c.u_bar2 = j.at("u_bar2").get<double>();
    c.x0 = json_vec(j.at("x0"));
    c.goal_radius = j.at("goal_radius").get<double>();
    c.gamma = j.at("gamma").get<double>();
    c.t_final = j.at("t_final").get<double>();
    c.dt = j.at("dt").get<double>();
    return c;
}

json overtake_json(const scenarios::OvertakeConfig& c) {
    return {{"M", c.M},
            {"l_c", c.l_c},
            {"w_c", c.w_c},
            {"s_y_pad", c.s_y_pad},
            {"e_r", c.e_r},
            {"e_l", c.e_l},
            {"L", c.L},
            {"tau", c.tau},
            {"omega_bar", c.omega_bar},
            {"a_bar", c.a_bar},
            {"f_l1", c.f_l1},
            {"f_l2", c.f_l2},
            {"theta_true", vec_json(c.theta_true)},
            {"theta_bar", c.theta_bar},
            {"theta_hat0", vec_json(c.theta_hat0)},
            {"K_s", c.K_s},
            {"K_V", c.K_V},
            {"k_x", c.k_x},
            {"k_y", c.k_y},
            {"k_theta", c.k_theta},
            {"k_v", c.k_v},
            {"mu", c.mu},
            {"phase_T", c.phase_T},
            {"p0", c.p0},
            {"p", c.p},
            {"ego0", vec_json(c.ego0)},
            {"lead0", vec_json(c.lead0)},
            {"lane_right", c.lane_right},
            {"lane_left", c.lane_left},
            {"approach_speed", c.approach_speed},
            {"pass_speed", c.pass_speed},
            {"pass_offset", c.pass_offset},
            {"return_speed", c.return_speed},
            {"heading_max", c.heading_max},
            {"heading_gain", c.heading_gain},
            {"gamma", c.gamma},
            {"t_final", c.t_final},
            {"dt", c.dt},
            {"oncoming_first", c.oncoming_first},
            {"oncoming_spacing", c.oncoming_spacing}};
}

scenarios::OvertakeConfig json_overtake(const json& j) {
    scenarios::OvertakeConfig c;
    auto num = [&](const char* k) { return j.at(k).get<double>(); };
    c.M = num("M");
    c.l_c = num("l_c");
    c.w_c = num("w_c");
    c.s_y_pad = num("s_y_pad");
    c.e_r = num("e_r");
    c.e_l = num("e_l");
    c.L = num("L");
    c.tau = num("tau");
    c.omega_bar = num("omega_bar");
    c.a_bar = num("a_bar");
    c.f_l1 = num("f_l1");
    c.f_l2 = num("f_l2");
    c.theta_true = json_vec(j.at("theta_true"));
    c.theta_bar = num("theta_bar");
    c.theta_hat0 = json_vec(j.at("theta_hat0"));
    c.K_s = num("K_s");
    c.K_V = num("K_V");
    c.k_x = num("k_x");
    c.k_y = num("k_y");
    c.k_theta = num("k_theta");
    c.k_v = num("k_v");
    c.mu = num("mu");
    c.phase_T = j.at("phase_T").get<std::array<double, 4>>();
    c.p0 = num("p0");
    c.p = j.at("p").get<std::array<double, 3>>();
    c.ego0 = json_vec(j.at("ego0"));
    c.lead0 = json_vec(j.at("lead0"));
    c.lane_right = num("lane_right");
    c.lane_left = num("lane_left");
    c.approach_speed = num("approach_speed");
    c.pass_speed = num("pass_speed");
    c.pass_offset = num("pass_offset");
    c.return_speed = num("return_speed");
    c.heading_max = num("heading_max");
    c.heading_gain = num("heading_gain");
    c.gamma = num("gamma");
    c.t_final = num("t_final");
    c.dt = num("dt");
    c.oncoming_first = num("oncoming_first");
    c.oncoming_spacing = num("oncoming_spacing");
    return c;
}

// Every key of `doc` must exist in `schema`; objects are checked recursively.
void check_keys(const json& doc, const json& schema, const std::string& prefix) {
    if (!doc.is_object()) return;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!schema.contains(it.key())) throw ConfigError("unknown config key: " + path);
        if (it.value().is_object() && schema.at(it.key()).is_object()) check_keys(it.value(), schema.at(it.key()), path);
    }
}

// Objects merge key by key; anything else (including null) replaces.
void merge_into(json& dst, const json& src) {
    for (auto it = src.begin(); it != src.end(); ++it) {
        if (it.value().is_object() && dst.contains(it.key()) && dst[it.key()].is_object())
            merge_into(dst[it.key()], it.value());
        else
            dst[it.key()] = it.value();
    }
}

}  // namespace

double ExperimentConfig::theta_bar() const {
    return scenario == "overtake" ? overtake.theta_bar : gap.theta_bar;
}

void ExperimentConfig::set_theta_bar(double v) {
    if (scenario == "overtake")
        overtake.theta_bar = v;
    else
        gap.theta_bar = v;
}

json default_config_json() {
    return config_to_json(ExperimentConfig{});
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["scenario"] = cfg.scenario;
    j["controller"] = scenarios::to_string(cfg.controller);
    j["theta_bar"] = nullptr;
    j["dt"] = nullptr;
    j["t_final"] = nullptr;
    j["sweep"] = cfg.sweep.empty() ? std::vector<double>{1, 2, 4, 6, 8, 10} : cfg.sweep;
    j["output_dir"] = cfg.output_dir;
    j["trace_decimation"] = cfg.trace_decimation;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    // Both scenarios share one estimator block.
    j["estimator"] = estimator_json(cfg.scenario == "overtake" ? cfg.overtake.estimator : cfg.gap.estimator);
    j["gap"] = gap_json(cfg.gap);
    j["overtake"] = overtake_json(cfg.overtake);
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    try {
        check_keys(j, default_config_json(), "");
        ExperimentConfig cfg;
        cfg.scenario = j.at("scenario").get<std::string>();
        if (cfg.scenario != "gap" && cfg.scenario != "overtake")
            throw ConfigError("scenario must be gap or overtake, got " + cfg.scenario);
        cfg.controller = scenarios::parse_controller_kind(j.at("controller").get<std::string>());
        cfg.sweep = j.at("sweep").get<std::vector<double>>();
        cfg.output_dir = j.at("output_dir").get<std::string>();
        cfg.trace_decimation = j.at("trace_decimation").get<int>();
        if (cfg.trace_decimation < 1) throw ConfigError("trace_decimation must be >= 1");
        cfg.seed = j.at("seed").get<unsigned>();
        cfg.threads = j.at("threads").get<int>();
        cfg.gap = json_gap(j.at("gap"));
        cfg.overtake = json_overtake(j.at("overtake"));
        const auto est = json_estimator(j.at("estimator"));
        cfg.gap.estimator = est;
        cfg.overtake.estimator = est;
        if (!j.at("theta_bar").is_null()) cfg.set_theta_bar(j.at("theta_bar").get<double>());
        if (!j.at("dt").is_null()) {
            cfg.gap.dt = j.at("dt").get<double>();
            cfg.overtake.dt = cfg.gap.dt;
        }
        if (!j.at("t_final").is_null()) {
            if (cfg.scenario == "overtake")
                cfg.overtake.t_final = j.at("t_final").get<double>();
            else
                cfg.gap.t_final = j.at("t_final").get<double>();
        }
        if (cfg.gap.theta_bar < 0.0 || cfg.overtake.theta_bar < 0.0) throw ConfigError("theta_bar must be >= 0");
        auto check = est.gains;
        check.Gamma = Mat::Identity(1, 1);
        check.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key.path=value: " + assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);

    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object() || !node->contains(key)) throw ConfigError("unknown config key: " + path);
        node = &(*node)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    *node = value;
}

ExperimentConfig load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
    json doc = default_config_json();
    if (path) {
        std::ifstream in(*path);
        if (!in) throw ConfigError("cannot read config file " + *path);
        json file;
        try {
            file = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(*path + ": " + e.what());
        }
        if (!file.is_object()) throw ConfigError("config file is not a JSON object: " + *path);
        check_keys(file, doc, "");
        merge_into(doc, file);
    }
    for (const auto& o : overrides) apply_override(doc, o);
    return config_from_json(doc);
}

// ---------------------------------------------------------------------------
// Runs and summaries

int count_envelope_violations(const sim::SimulationTrace& trace, const Vec& theta_true) {
    int bad = 0;
    const double floor = kEnvelopeTol * (1.0 + theta_true.lpNorm<Eigen::Infinity>());
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const double err = (trace.estimates[k] - theta_true).lpNorm<Eigen::Infinity>();
        if (err > trace.envelope[k] + floor) ++bad;
    }
    return bad;
}

double settling_time(const sim::SimulationTrace& trace, const Vec& theta_true, double tol) {
    if (!trace.estimator_activated) return kInf;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        if (trace.times[k] < trace.t_activate) continue;
        if ((trace.estimates[k] - theta_true).lpNorm<Eigen::Infinity>() <= tol) return trace.times[k] - trace.t_activate;
    }
    return kInf;
}

namespace {

std::string outcome_name(sim::Outcome o) {
    switch (o) {
        case sim::Outcome::completed: return "completed";
        case sim::Outcome::diverged: return "diverged";
        case sim::Outcome::aborted_infeasible: return "aborted_infeasible";
    }
    return "unknown";
}

// A nonzero seed with no explicit initial estimate draws one uniformly from the box.
Vec draw_initial_estimate(unsigned seed, const ParameterBox& box) {
    std::mt19937 rng(seed);
    Vec th(box.size());
    for (int i = 0; i < box.size(); ++i) th(i) = std::uniform_real_distribution<double>(box.lower(i), box.upper(i))(rng);
    return th;
}

scenarios::Scenario build(const ExperimentConfig& cfg) {
    if (cfg.scenario == "overtake") {
        auto c = cfg.overtake;
        if (cfg.seed != 0 && c.theta_hat0.size() == 0)
            c.theta_hat0 = draw_initial_estimate(cfg.seed, ParameterBox::symmetric(Vec::Zero(2), c.theta_bar));
        return scenarios::build_overtake(c, cfg.controller);
    }
    auto c = cfg.gap;
    if (cfg.seed != 0 && c.theta_hat0.size() == 0)
        c.theta_hat0 = draw_initial_estimate(cfg.seed, ParameterBox::symmetric(c.theta_center, c.theta_bar));
    return scenarios::build_gap(c, cfg.controller);
}

json num_or_null(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

}  // namespace

RunSummary summarize(const ExperimentConfig& cfg, const scenarios::Scenario& sc, const sim::SimulationResult& res) {
    const auto& tr = res.trace;
    RunSummary s;
    s.scenario = sc.id;
    s.controller = scenarios::to_string(sc.kind);
    s.theta_bar = cfg.theta_bar();
    s.dt = sc.options.dt;
    s.outcome = outcome_name(res.outcome);
    s.message = res.message;
    s.stop_time = res.stop_time;
    s.barrier_labels = sc.barrier_labels;
    s.min_h.assign(tr.q, kInf);
    for (const auto& h : tr.barrier_values)
        for (int i = 0; i < tr.q; ++i) s.min_h[i] = std::min(s.min_h[i], h(i));
    s.safe = std::all_of(s.min_h.begin(), s.min_h.end(), [](double h) { return h >= -kSafetyTol; });
    s.estimator_activated = tr.estimator_activated;
    s.t_activate = tr.t_activate;
    s.settling_time = settling_time(tr, sc.plant.theta_true);
    s.envelope_violations = count_envelope_violations(tr, sc.plant.theta_true);
    s.infeasible_steps = res.infeasible_steps;
    s.rate_clamps = res.rate_clamps;

    double T = kInf;
    if (sc.id == "gap") {
        T = scenarios::gap_completion_time(tr, cfg.gap.goal_radius);
        s.passed_gap = scenarios::passed_through_gap(cfg.gap, tr);
    } else {
        T = scenarios::overtake_completion_time(tr);
    }
    // An unsafe run does not count as having completed anything.
    if (!s.safe) T = kInf;
    s.completion_time = T;
    s.goal_reached = std::isfinite(T);
    if (sc.id == "overtake")
        s.decision = scenarios::to_string(
            scenarios::overtake_decision(T, cfg.overtake.oncoming_first, cfg.overtake.oncoming_spacing));
    return s;
}

RunOutput run(const ExperimentConfig& cfg) {
    scenarios::Scenario sc = build(cfg);
    RunOutput out;
    out.result = sc.run();
    out.summary = summarize(cfg, sc, out.result);
    return out;
}

int exit_code(const RunSummary& s) {
    if (s.outcome != "completed") return 3;
    if (!s.safe) return 2;
    return 0;
}

json summary_to_json(const RunSummary& s) {
    json j;
    j["scenario"] = s.scenario;
    j["controller"] = s.controller;
    j["theta_bar"] = s.theta_bar;
    j["dt"] = s.dt;
    j["outcome"] = s.outcome;
    j["message"] = s.message;
    j["stop_time"] = s.stop_time;
    j["goal_reached"] = s.goal_reached;
    j["completion_time"] = num_or_null(s.completion_time);
    json mins = json::object();
    for (std::size_t i = 0; i < s.min_h.size(); ++i) mins[s.barrier_labels.at(i)] = num_or_null(s.min_h[i]);
    j["min_h"] = mins;
    j["safe"] = s.safe;
    j["estimator_activated"] = s.estimator_activated;
    j["t_activate"] = s.t_activate;
    j["settling_time"] = num_or_null(s.settling_time);
    j["envelope_violations"] = s.envelope_violations;
    j["infeasible_steps"] = s.infeasible_steps;
    j["rate_clamps"] = s.rate_clamps;
    if (s.scenario == "gap") j["passed_gap"] = s.passed_gap;
    if (!s.decision.empty()) j["decision"] = s.decision;
    return j;
}

// ---------------------------------------------------------------------------
// Trace CSV

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> trace_header(const sim::SimulationTrace& tr) {
    std::vector<std::string> h{"t"};
    for (int i = 1; i <= tr.n; ++i) h.push_back("x" + std::to_string(i));
    for (int i = 1; i <= tr.m; ++i) h.push_back("u" + std::to_string(i));
    for (int i = 1; i <= tr.p; ++i) h.push_back("theta_hat_" + std::to_string(i));
    h.push_back("eta");
    for (int i = 1; i <= tr.q; ++i) h.push_back("h_" + std::to_string(i));
    for (int i = 1; i <= tr.q; ++i) h.push_back("h_r_" + std::to_string(i));
    h.push_back("V");
    for (int i = 0; i <= tr.q; ++i) h.push_back("delta_" + std::to_string(i));
    h.push_back("qp_status");
    return h;
}

void emit_trace(std::ostream& os, const sim::SimulationTrace& tr, int decimation) {
    if (decimation < 1) throw ConfigError("trace decimation must be >= 1");
    const auto header = trace_header(tr);
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    auto put = [&os](const Vec& v, int expected) {
        for (int i = 0; i < expected; ++i) os << ',' << (i < v.size() ? format_double(v(i)) : "nan");
    };
    for (std::size_t k = 0; k < tr.size(); ++k) {
        if (k % static_cast<std::size_t>(decimation) != 0 && k + 1 != tr.size()) continue;
        os << format_double(tr.times[k]);
        put(tr.states[k], tr.n);
        put(tr.controls[k], tr.m);
        put(tr.estimates[k], tr.p);
        os << ',' << format_double(tr.envelope[k]);
        put(tr.barrier_values[k], tr.q);
        put(tr.shrunken_values[k], tr.q);
        os << ',' << format_double(tr.lyapunov_values[k]);
        put(tr.slacks[k], tr.q + 1);
        os << ',' << qp::to_string(tr.qp_statuses[k]) << '\n';
    }
}

int CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable parse_csv(std::istream& is) {
    CsvTable t;
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> out;
        std::stringstream ss(l);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        if (!l.empty() && l.back() == ',') out.emplace_back();
        return out;
    };
    if (!std::getline(is, line)) return t;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split(line);
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto row = split(line);
        if (row.size() != t.header.size()) throw ConfigError("csv row has " + std::to_string(row.size()) + " cells, header has " + std::to_string(t.header.size()));
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_csv(std::ostream& os, const CsvTable& table) {
    auto line = [&os](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
        os << '\n';
    };
    line(table.header);
    for (const auto& r : table.rows) line(r);
}

// ---------------------------------------------------------------------------
// Sweep, compare, artifacts

std::vector<SweepRow> sweep(const ExperimentConfig& cfg) {
    const std::vector<double> grid = cfg.sweep.empty() ? std::vector<double>{1, 2, 4, 6, 8, 10} : cfg.sweep;
    std::vector<SweepRow> rows(grid.size());
    const std::size_t jobs = 2 * grid.size();
    unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(jobs)));

    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    auto worker = [&]() {
        for (std::size_t job = next++; job < jobs; job = next++) {
            const std::size_t r = job / 2;
            const bool baseline = job % 2 == 1;
            ExperimentConfig c = cfg;
            c.set_theta_bar(grid[r]);
            c.controller = baseline ? scenarios::ControllerKind::robust_baseline : scenarios::ControllerKind::proposed;
            try {
                RunSummary s = run(c).summary;
                if (baseline)
                    rows[r].baseline = std::move(s);
                else
                    rows[r].proposed = std::move(s);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!rows[r].error.empty()) rows[r].error += "; ";
                rows[r].error += std::string(baseline ? "baseline: " : "proposed: ") + e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    const bool overtake = cfg.scenario == "overtake";
    auto decide = [&](const RunSummary& s) -> std::string {
        if (s.controller.empty()) return "error";
        if (overtake) return s.decision;
        return s.goal_reached ? "goal" : "no-goal";
    };
    for (std::size_t r = 0; r < grid.size(); ++r) {
        auto& row = rows[r];
        row.theta_bar = grid[r];
        row.T_proposed = row.proposed.controller.empty() ? kInf : row.proposed.completion_time;
        row.T_baseline = row.baseline.controller.empty() ? kInf : row.baseline.completion_time;
        row.decision_proposed = decide(row.proposed);
        row.decision_baseline = decide(row.baseline);
    }
    return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "theta_bar,T_proposed,T_baseline,decision_proposed,decision_baseline\n";
    for (const auto& r : rows)
        os << format_double(r.theta_bar) << ',' << format_double(r.T_proposed) << ',' << format_double(r.T_baseline)
           << ',' << r.decision_proposed << ',' << r.decision_baseline << '\n';
}

json compare(const json& a, const json& b) {
    json out = json::object();
    json keys = json::array();
    for (auto it = a.begin(); it != a.end(); ++it) keys.push_back(it.key());
    for (auto it = b.begin(); it != b.end(); ++it)
        if (!a.contains(it.key())) keys.push_back(it.key());
    for (const auto& k : keys) {
        const std::string key = k.get<std::string>();
        json entry;
        entry["a"] = a.contains(key) ? a.at(key) : json(nullptr);
        entry["b"] = b.contains(key) ? b.at(key) : json(nullptr);
        if (entry["a"].is_number() && entry["b"].is_number())
            entry["diff"] = entry["b"].get<double>() - entry["a"].get<double>();
        out[key] = entry;
    }
    return out;
}

std::string output_root(const ExperimentConfig& cfg) {
    if (const char* env = std::getenv("FXTSAFE_OUTPUT_ROOT"); env != nullptr && *env != '\0') return env;
    return cfg.output_dir;
}

void write_run_artifacts(const std::string& dir, const ExperimentConfig& cfg, const RunOutput& out) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
    auto open = [&](const std::string& name) {
        std::ofstream f(std::filesystem::path(dir) / name);
        if (!f) throw ConfigError("cannot write " + dir + "/" + name);
        return f;
    };
    {
        auto f = open("config.json");
        f << config_to_json(cfg).dump(2) << '\n';
    }
    {
        auto f = open("summary.json");
        f << summary_to_json(out.summary).dump(2) << '\n';
    }
    {
        auto f = open("trace.csv");
        emit_trace(f, out.result.trace, cfg.trace_decimation);
    }
}

}  // namespace fxtsafe::harness
