#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "vex/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitValidationFailure = 2;

struct CommonOpts {
    std::string scenario_path;
    std::string mode_override;
    std::int64_t seed_override = -1;
};

vex::Scenario load_with_overrides(const CommonOpts& opts) {
    vex::Scenario scenario = vex::load_scenario_file(opts.scenario_path);
    if (!opts.mode_override.empty()) {
        auto mode = vex::interaction_mode_from_string(opts.mode_override);
        if (!mode) {
            throw vex::ConfigError("unknown mode '" + opts.mode_override +
                                   "' (expected traditional_oracle, all_nodes_call or "
                                   "verifiable_external_calls)");
        }
        scenario.mode = *mode;
    }
    if (opts.seed_override >= 0) {
        scenario.network.global_seed = static_cast<std::uint64_t>(opts.seed_override);
    } else if (const char* env = std::getenv("VEXSIM_SEED")) {
        scenario.network.global_seed = std::strtoull(env, nullptr, 10);
    }
    return scenario;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw vex::IoError("cannot open file for writing: " + path);
    }
    for (const std::string& line : lines) {
        out << line << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vexsim - blockchain network simulator with verifiable external calls"};
    app.require_subcommand(1);

    CommonOpts run_opts;
    std::string export_path;
    std::string trace_path;
    auto* run_cmd = app.add_subcommand("run", "run a scenario and print its metrics report");
    run_cmd->add_option("scenario", run_opts.scenario_path, "scenario file (JSON)")->required();
    run_cmd->add_option("--mode", run_opts.mode_override,
                        "override the scenario's oracle interaction mode");
    run_cmd->add_option("--seed", run_opts.seed_override, "override the global seed");
    run_cmd->add_option("--export", export_path, "write the chain export to this path");
    run_cmd->add_option("--trace", trace_path, "write the event trace to this path");

    std::string validate_path;
    auto* validate_cmd =
        app.add_subcommand("validate", "revalidate an exported chain from genesis, offline");
    validate_cmd->add_option("chain", validate_path, "chain export file")->required();

    CommonOpts report_opts;
    std::string format = "text";
    auto* report_cmd =
        app.add_subcommand("report", "run a scenario and emit only the formatted report");
    report_cmd->add_option("scenario", report_opts.scenario_path, "scenario file (JSON)")
        ->required();
    report_cmd->add_option("--format", format, "text or json-lines")
        ->check(CLI::IsMember({"text", "json-lines"}));
    report_cmd->add_option("--mode", report_opts.mode_override,
                           "override the scenario's oracle interaction mode");
    report_cmd->add_option("--seed", report_opts.seed_override, "override the global seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            const vex::Scenario scenario = load_with_overrides(run_opts);
            const vex::RunResult result = vex::run_scenario(scenario);
            if (!export_path.empty()) {
                std::ofstream out(export_path, std::ios::binary);
                if (!out) {
                    throw vex::IoError("cannot open export file: " + export_path);
                }
                out << vex::export_chain_text(result.chain, vex::chain_meta_for(scenario));
            }
            if (!trace_path.empty()) {
                write_lines(trace_path, result.trace);
            }
            std::cout << "ran to tick " << result.final_tick << ", height "
                      << result.chain.height() << ", " << result.trace.size()
                      << " trace events\n\n";
            std::cout << vex::report_text(result.report, scenario.mode);
            return kExitOk;
        }
        if (validate_cmd->parsed()) {
            const vex::ChainValidationResult result = vex::validate_chain_file(validate_path);
            if (result.valid) {
                std::cout << "valid\n";
                return kExitOk;
            }
            std::cout << "invalid: height " << result.failed_height << ": "
                      << vex::to_string(result.reason)
                      << (result.detail.empty() ? "" : " (" + result.detail + ")") << "\n";
            return kExitValidationFailure;
        }
        if (report_cmd->parsed()) {
            const vex::Scenario scenario = load_with_overrides(report_opts);
            const vex::RunResult result = vex::run_scenario(scenario);
            if (format == "json-lines") {
                std::cout << vex::report_json_lines(result.report, scenario.mode);
            } else {
                std::cout << vex::report_text(result.report, scenario.mode);
            }
            return kExitOk;
        }
    } catch (const vex::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitValidationFailure;
    } catch (const vex::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfigError;
    } catch (const vex::IoError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
    return kExitConfigError;
}
