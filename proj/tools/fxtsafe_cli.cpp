#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fxtsafe/harness.hpp"

namespace fs = std::filesystem;
using namespace fxtsafe;

namespace {

struct CommonOpts {
    std::string config;
    std::string scenario;
    std::string controller;
    std::optional<double> theta_bar;
    std::optional<double> dt;
    std::optional<double> t_final;
    std::optional<int> decimation;
    std::optional<unsigned> seed;
    std::string output;
    std::vector<std::string> sets;
};

void add_common(CLI::App* app, CommonOpts& o) {
    app->add_option("-c,--config", o.config, "JSON config file");
    app->add_option("--scenario", o.scenario, "gap | overtake");
    app->add_option("--controller", o.controller, "proposed | robust_baseline | certainty_equivalent");
    app->add_option("--theta-bar", o.theta_bar, "parameter box half-width");
    app->add_option("--dt", o.dt, "step size [s]");
    app->add_option("--t-final", o.t_final, "horizon [s]");
    app->add_option("--decimation", o.decimation, "keep every k-th trace row");
    app->add_option("--seed", o.seed, "draw the initial estimate from the box with this seed");
    app->add_option("-o,--output", o.output, "output root directory");
    app->add_option("--set", o.sets, "dotted override, e.g. estimator.c1e=50")->allow_extra_args(false);
}

harness::ExperimentConfig resolve(const CommonOpts& o) {
    std::vector<std::string> sets;
    if (!o.scenario.empty()) sets.push_back("scenario=\"" + o.scenario + "\"");
    if (!o.controller.empty()) sets.push_back("controller=\"" + o.controller + "\"");
    auto num = [](double v) {
        std::ostringstream s;
        s.precision(17);
        s << v;
        return s.str();
    };
    if (o.theta_bar) sets.push_back("theta_bar=" + num(*o.theta_bar));
    if (o.dt) sets.push_back("dt=" + num(*o.dt));
    if (o.t_final) sets.push_back("t_final=" + num(*o.t_final));
    if (o.decimation) sets.push_back("trace_decimation=" + std::to_string(*o.decimation));
    if (o.seed) sets.push_back("seed=" + std::to_string(*o.seed));
    if (!o.output.empty()) sets.push_back("output_dir=\"" + o.output + "\"");
    sets.insert(sets.end(), o.sets.begin(), o.sets.end());
    return harness::load_config(o.config.empty() ? std::nullopt : std::optional<std::string>(o.config), sets);
}

std::string run_dir_name(const harness::ExperimentConfig& cfg) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "_tb%g", cfg.theta_bar());
    return cfg.scenario + "_" + scenarios::to_string(cfg.controller) + buf;
}

harness::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    harness::json j = harness::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("not valid JSON: " + path);
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fixed-time adaptive safety controller simulations"};
    app.require_subcommand(1);

    CommonOpts run_o, sweep_o, val_o;
    auto* run_cmd = app.add_subcommand("run", "simulate one scenario and write config, summary and trace");
    add_common(run_cmd, run_o);

    auto* sweep_cmd = app.add_subcommand("sweep", "proposed vs robust baseline over a theta_bar grid");
    add_common(sweep_cmd, sweep_o);
    std::vector<double> thetas;
    std::optional<int> threads;
    sweep_cmd->add_option("--thetas", thetas, "theta_bar grid")->delimiter(',');
    sweep_cmd->add_option("--threads", threads, "worker threads (0: all cores)");

    auto* cmp_cmd = app.add_subcommand("compare", "join two summary.json files");
    std::string cmp_a, cmp_b;
    cmp_cmd->add_option("a", cmp_a, "first summary")->required();
    cmp_cmd->add_option("b", cmp_b, "second summary")->required();

    auto* val_cmd = app.add_subcommand("validate-config", "resolve and print the configuration");
    add_common(val_cmd, val_o);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            const auto cfg = resolve(run_o);
            const auto out = harness::run(cfg);
            const fs::path dir = fs::path(harness::output_root(cfg)) / run_dir_name(cfg);
            harness::write_run_artifacts(dir.string(), cfg, out);
            std::cout << harness::summary_to_json(out.summary).dump(2) << '\n';
            std::cerr << "wrote " << dir.string() << '\n';
            return harness::exit_code(out.summary);
        }
        if (*sweep_cmd) {
            if (!thetas.empty()) {
                std::ostringstream s;
                s.precision(17);
                s << "sweep=[";
                for (std::size_t i = 0; i < thetas.size(); ++i) s << (i ? "," : "") << thetas[i];
                s << "]";
                sweep_o.sets.insert(sweep_o.sets.begin(), s.str());
            }
            if (threads) sweep_o.sets.insert(sweep_o.sets.begin(), "threads=" + std::to_string(*threads));
            const auto cfg = resolve(sweep_o);
            const auto rows = harness::sweep(cfg);
            const fs::path root(harness::output_root(cfg));
            std::error_code ec;
            fs::create_directories(root, ec);
            if (ec) throw ConfigError("cannot create " + root.string());
            std::ofstream csv(root / (cfg.scenario + "_sweep.csv"));
            if (!csv) throw ConfigError("cannot write sweep table under " + root.string());
            harness::write_sweep_csv(csv, rows);
            harness::write_sweep_csv(std::cout, rows);
            int code = 0;
            for (const auto& r : rows) {
                if (!r.error.empty()) {
                    std::cerr << "theta_bar=" << r.theta_bar << ": " << r.error << '\n';
                    code = 3;
                }
            }
            return code;
        }
        if (*cmp_cmd) {
            std::cout << harness::compare(read_json(cmp_a), read_json(cmp_b)).dump(2) << '\n';
            return 0;
        }
        if (*val_cmd) {
            const auto cfg = resolve(val_o);
            std::cout << harness::config_to_json(cfg).dump(2) << '\n';
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const SimulationDivergence& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
