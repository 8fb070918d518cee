// vpon-dba: dual-DBA PON latency budgets and frame-level simulation.
//
// Subcommands:
//   budget    analytic per-stage latency budgets for the deployment modes
//   simulate  run one scenario, emit samples.csv + summary.csv
//   compare   run all three modes on identical traffic, emit compare.csv
//   sweep     run a list of scenarios, emit sweep.csv
//
// Exit codes: 0 success, 2 usage/config error, 3 internal invariant failure.

#include "vpon/config.hpp"
#include "vpon/report.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace vpon;

std::vector<Mode> parse_modes(const std::string& arg) {
    std::vector<Mode> modes;
    std::string token;
    std::stringstream ss(arg);
    while (std::getline(ss, token, ',')) {
        if (token == "all") {
            return {Mode::ClassicalOem, Mode::VirtualPon, Mode::FastIntercept};
        } else if (token == "classical" || token == "classical_oem") {
            modes.push_back(Mode::ClassicalOem);
        } else if (token == "virtual" || token == "virtual_pon") {
            modes.push_back(Mode::VirtualPon);
        } else if (token == "fast" || token == "fast_intercept") {
            modes.push_back(Mode::FastIntercept);
        } else {
            throw Error(Errc::ConfigError,
                        "unknown mode '" + token + "' (classical, virtual, fast, all)");
        }
    }
    if (modes.empty()) {
        throw Error(Errc::ConfigError, "--modes selected nothing");
    }
    return modes;
}

std::string resolve_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("VPON_DBA_OUT"); env != nullptr && *env != '\0') {
        return env;
    }
    return ".";
}

struct CommonOpts {
    std::string out_dir;
    bool no_timestamp = false;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool pin_variance = false;

    report::OutputOptions output() const {
        return report::OutputOptions{resolve_out_dir(out_dir), !no_timestamp};
    }

    void apply_overrides(Scenario& sc) const {
        if (seed_set) sc.seed = seed;
        if (pin_variance) sc.pin_variance = true;
    }
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_sim_flags) {
    cmd->add_option("--out-dir", opts.out_dir, "Output directory (default: $VPON_DBA_OUT or .)");
    cmd->add_flag("--no-timestamp", opts.no_timestamp,
                  "Omit the generated-at header line from CSV files");
    if (with_sim_flags) {
        cmd->add_option("--seed", opts.seed, "Override the scenario seed")
            ->each([&opts](const std::string&) { opts.seed_set = true; });
        cmd->add_flag("--pin-variance", opts.pin_variance,
                      "Pin stochastic stages to their means");
    }
}

int cmd_budget(const std::string& preset, const std::string& modes_arg,
               const CommonOpts& opts) {
    const LatencyParams params = preset_by_name(preset);
    const auto rows = report::budget_rows(params, parse_modes(modes_arg));
    std::cout << report::budget_table(rows);
    report::write_text_file(opts.output(), "budget.csv", report::budget_csv(rows, opts.output()));
    return 0;
}

int cmd_simulate(const std::string& config_path, const CommonOpts& opts) {
    Scenario sc = load_scenario_file(config_path);
    opts.apply_overrides(sc);
    const RunResult result = run(sc);
    const auto out = opts.output();
    report::write_text_file(out, "samples.csv", report::samples_csv(result, out));
    report::write_text_file(out, "summary.csv", report::summary_csv(result, sc.mode, out));
    std::cout << report::summary_table(result, sc.mode);
    return 0;
}

int cmd_compare(const std::string& config_path, const CommonOpts& opts) {
    Scenario sc = load_scenario_file(config_path);
    opts.apply_overrides(sc);
    const report::CompareReport rep = report::run_compare(sc);
    const auto out = opts.output();
    report::write_text_file(out, "compare.csv", report::compare_csv(rep, out));
    std::cout << report::compare_table(rep);
    return 0;
}

int cmd_sweep(const std::string& config_path, const CommonOpts& opts) {
    SweepConfig cfg = load_sweep_file(config_path);
    for (Scenario& sc : cfg.scenarios) opts.apply_overrides(sc);
    const auto outcomes = sweep(cfg.scenarios);

    bool failed = !cfg.errors.empty();
    for (const std::string& e : cfg.errors) {
        std::cerr << "config error: " << e << "\n";
    }
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const std::size_t index = cfg.original_indices[i];
        if (!outcomes[i].error.empty()) {
            std::cerr << "scenario " << index << " failed: " << outcomes[i].error << "\n";
            failed = true;
            continue;
        }
        std::cout << "scenario " << index << " (" << mode_name(cfg.scenarios[i].mode) << ")\n"
                  << report::summary_table(*outcomes[i].result, cfg.scenarios[i].mode);
    }
    const auto out = opts.output();
    report::write_text_file(
        out, "sweep.csv", report::sweep_csv(cfg.scenarios, cfg.original_indices, outcomes, out));
    return failed ? 2 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual-DBA latency model and simulator for virtualized PONs"};
    app.require_subcommand(1);

    CommonOpts budget_opts;
    std::string preset = "default";
    std::string modes_arg = "all";
    auto* budget = app.add_subcommand("budget", "Print analytic latency budgets");
    budget->add_option("--preset", preset, "Latency parameter preset (default, s2, s3)");
    budget->add_option("--modes", modes_arg, "Comma list: classical,virtual,fast or all");
    add_common(budget, budget_opts, false);

    CommonOpts sim_opts;
    std::string sim_config;
    auto* simulate = app.add_subcommand("simulate", "Run one scenario");
    simulate->add_option("config", sim_config, "Scenario config file (JSON)")->required();
    add_common(simulate, sim_opts, true);

    CommonOpts cmp_opts;
    std::string cmp_config;
    auto* compare = app.add_subcommand("compare", "Run all three modes on one scenario");
    compare->add_option("config", cmp_config, "Scenario config file (JSON)")->required();
    add_common(compare, cmp_opts, true);

    CommonOpts sweep_opts;
    std::string sweep_config;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a list of scenarios");
    sweep_cmd->add_option("config", sweep_config, "Sweep config file (JSON)")->required();
    add_common(sweep_cmd, sweep_opts, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (budget->parsed()) return cmd_budget(preset, modes_arg, budget_opts);
        if (simulate->parsed()) return cmd_simulate(sim_config, sim_opts);
        if (compare->parsed()) return cmd_compare(cmp_config, cmp_opts);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_config, sweep_opts);
    } catch (const vpon::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == vpon::Errc::ConfigError || e.code() == vpon::Errc::UnknownAllocId
                   ? 2
                   : 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
