// gridsense: validate networks and run Monte Carlo estimation scenarios.
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridsense/bench.hpp"
#include "gridsense/error.hpp"

using namespace gridsense;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDiverged = 2;

struct Overrides {
    std::optional<int> max_iter;
    std::optional<double> epsilon;
    std::string em;
    std::optional<double> damping;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<int> bits;
    std::optional<int> k;
    std::string estimators;
    std::string format = "table";
    std::string output = "-";
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--max-iter", o.max_iter, "Iteration cap per trial")->check(CLI::PositiveNumber);
    cmd->add_option("--epsilon", o.epsilon, "Stop when sum |x_t - x_{t-1}|^2 falls below this")->check(CLI::PositiveNumber);
    cmd->add_option("--em", o.em, "Learn prior mean and variance")->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--damping", o.damping, "Weight on previous omega/rho")->check(CLI::Range(0.0, 0.999));
    cmd->add_option("--seed", o.seed, "Base seed");
    cmd->add_option("--trials", o.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
    cmd->add_option("--bits", o.bits, "Bits per quantized component")->check(CLI::Range(1, 30));
    cmd->add_option("--estimators", o.estimators, "Comma list of emswgamp,lmmse");
    cmd->add_option("--format", o.format, "csv, json or table")->check(CLI::IsMember({"csv", "json", "table"}));
    cmd->add_option("-o,--output", o.output, "Report path, '-' for stdout");
}

void apply(const Overrides& o, ScenarioConfig& c) {
    if (o.max_iter) c.solver.max_iterations = *o.max_iter;
    if (o.epsilon) c.solver.epsilon = *o.epsilon;
    if (!o.em.empty()) c.solver.em_enabled = o.em == "on";
    if (o.damping) c.solver.damping = *o.damping;
    if (o.seed) c.seed = *o.seed;
    if (o.trials) c.trials = *o.trials;
    if (o.bits) c.profile.bits = *o.bits;
    if (o.k) {
        c.profile.mode = *o.k == 0 ? ProfileConfig::Mode::Full : ProfileConfig::Mode::KLadder;
        c.profile.k = *o.k;
    }
    if (!o.estimators.empty()) {
        c.estimators.clear();
        std::stringstream ss(o.estimators);
        for (std::string name; std::getline(ss, name, ',');) c.estimators.push_back(parse_estimator(name));
    }
}

std::vector<int> parse_ks(const std::string& list) {
    std::vector<int> ks;
    std::stringstream ss(list);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            ks.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw Error(ErrorCode::ConfigParseError, "bad K value '" + item + "'");
        }
    }
    if (ks.empty()) throw Error(ErrorCode::ConfigParseError, "empty K list");
    return ks;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"State estimation from mixed-resolution phasor measurements"};
    app.require_subcommand(1);

    std::string network_path;
    auto* validate = app.add_subcommand("validate", "Check a network file and print its dimensions");
    validate->add_option("network", network_path, "Network JSON")->required();

    std::string scenario_path;
    Overrides run_opts;
    auto* run_cmd = app.add_subcommand("run", "Run one scenario");
    run_cmd->add_option("scenario", scenario_path, "Scenario JSON")->required();
    add_common(run_cmd, run_opts);
    run_cmd->add_option("--k", run_opts.k, "Quantize the ladder entry with this many channels (0 = none)");

    Overrides sweep_opts;
    std::string ks = "2,4,17,19,23,27,34,42";
    auto* sweep = app.add_subcommand("sweep", "Run a scenario across a list of K values");
    sweep->add_option("scenario", scenario_path, "Scenario JSON")->required();
    sweep->add_option("--k", ks, "Comma-separated K values (0 = all full precision)");
    add_common(sweep, sweep_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*validate) {
            const auto net = validate_network(load_network(network_path));
            const auto topo = assemble_topology(net);
            std::cout << "valid: N=" << net.bus_count() << " L=" << net.pmu_count() << " M=" << net.meter_count()
                      << " P=" << net.channel_count() << " phases=" << net.phase_count() << " H=" << topo.H.rows()
                      << "x" << topo.H.cols() << '\n';
            return kExitOk;
        }

        ScenarioConfig config = load_scenario(scenario_path);
        if (*run_cmd) {
            apply(run_opts, config);
            const auto report = run_scenario(config);
            emit_report(report, parse_format(run_opts.format), run_opts.output);
            return report.any_diverged() ? kExitDiverged : kExitOk;
        }
        apply(sweep_opts, config);
        const auto reports = run_sweep(config, parse_ks(ks));
        write_text(format_sweep(reports, parse_format(sweep_opts.format)), sweep_opts.output);
        for (const auto& r : reports)
            if (r.any_diverged()) return kExitDiverged;
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "gridsense: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "gridsense: " << e.what() << '\n';
        return kExitConfig;
    }
}
