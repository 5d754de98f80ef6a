#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vex/chain_io.hpp"
#include "vex/sim.hpp"

namespace vex {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OracleSpec {
    std::string uri;
    OracleBehavior behavior;
    std::optional<SecretSeed> key_seed;  // derived from the uri when absent
    bool up = true;
};

struct ScriptEntry {
    std::uint64_t tick = 0;
    AccountId initiator;
    Action action;
    ResolutionMode resolution = ResolutionMode::FinalizerResolved;
    std::uint32_t max_calls = 4;
};

struct StopRule {
    enum class Kind { AtHeight, AtTick };
    Kind kind = Kind::AtHeight;
    std::uint64_t value = 1;
};

struct Scenario {
    NetworkConfig network;
    ResolutionPolicy policy;
    InteractionMode mode = InteractionMode::VerifiableExternalCalls;
    std::vector<OracleSpec> oracles;
    std::map<AccountId, std::uint64_t> genesis_balances;
    std::vector<ScriptEntry> script;
    StopRule stop;
    FaultPlan fault;
    std::uint64_t max_ticks = 2000000;  // hard cap for at-height runs
};

Scenario parse_scenario_text(const std::string& text);
Scenario load_scenario_file(const std::string& path);  // IoError, ConfigError

SecretSeed derive_oracle_key_seed(const std::string& uri);
OracleDirectory build_directory(const Scenario& scenario);

struct MetricsReport {
    std::map<std::string, std::uint64_t> blocks_to_completion;
    std::map<std::string, std::uint64_t> oracle_invocations;
    std::uint64_t cache_hits = 0;
    Hash32 final_state_root{};
    bool chain_valid = false;
};

struct RunResult {
    MetricsReport report;
    std::vector<std::string> trace;
    Chain chain;  // node 0's chain at the end of the run
    std::uint64_t final_tick = 0;
    std::uint64_t validations_performed = 0;
    std::uint64_t validation_invocation_delta = 0;
};

// Builds the deterministic world for a scenario. Injecting the script and
// running to the stop rule are separate so tests can interleave checks.
World make_world(const Scenario& scenario);
void inject_script(World& world, const Scenario& scenario);
void run_to_stop(World& world, const Scenario& scenario);

ChainFileMeta chain_meta_for(const Scenario& scenario);
MetricsReport collect_report(const Scenario& scenario, World& world);

RunResult run_scenario(const Scenario& scenario);

std::string report_text(const MetricsReport& report, InteractionMode mode);
std::string report_json_lines(const MetricsReport& report, InteractionMode mode);

}  // namespace vex
