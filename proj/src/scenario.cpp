#include "vex/scenario.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace vex {

using ordered_json = nlohmann::ordered_json;

namespace {

const ordered_json& need(const ordered_json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) {
        throw ConfigError("config error at " + path + ": expected an object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ConfigError("config error at " + path + ": missing key '" + key + "'");
    }
    return *it;
}

std::uint64_t need_u64(const ordered_json& obj, const char* key, const std::string& path) {
    const auto& v = need(obj, key, path);
    if (!v.is_number_unsigned()) {
        throw ConfigError("config error at " + path + "/" + key + ": expected unsigned integer");
    }
    return v.get<std::uint64_t>();
}

std::uint64_t opt_u64(const ordered_json& obj, const char* key, std::uint64_t fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        return fallback;
    }
    if (!it->is_number_unsigned()) {
        throw ConfigError(std::string("config error: '") + key +
                          "' must be an unsigned integer");
    }
    return it->get<std::uint64_t>();
}

std::string need_string(const ordered_json& obj, const char* key, const std::string& path) {
    const auto& v = need(obj, key, path);
    if (!v.is_string()) {
        throw ConfigError("config error at " + path + "/" + key + ": expected string");
    }
    return v.get<std::string>();
}

Bytes need_hex(const ordered_json& obj, const char* key, const std::string& path) {
    auto bytes = hex_decode(need_string(obj, key, path));
    if (!bytes) {
        throw ConfigError("config error at " + path + "/" + key + ": expected hex string");
    }
    return *bytes;
}

OracleBehavior parse_behavior(const ordered_json& j, const std::string& path) {
    const std::string kind = need_string(j, "kind", path);
    if (kind == "constant") {
        return ConstantValue{need_hex(j, "value", path)};
    }
    if (kind == "seeded_stream") {
        return SeededStream{need_u64(j, "seed", path)};
    }
    if (kind == "stepped_feed") {
        const auto& values = need(j, "values", path);
        if (!values.is_array() || values.empty()) {
            throw ConfigError("config error at " + path + "/values: expected non-empty array");
        }
        SteppedFeed feed;
        for (const auto& v : values) {
            if (!v.is_string()) {
                throw ConfigError("config error at " + path + "/values: expected hex strings");
            }
            auto bytes = hex_decode(v.get<std::string>());
            if (!bytes) {
                throw ConfigError("config error at " + path + "/values: invalid hex");
            }
            feed.values.push_back(*bytes);
        }
        return feed;
    }
    if (kind == "fail_after") {
        return FailAfter{need_u64(j, "count", path)};
    }
    throw ConfigError("config error at " + path + ": unknown behavior kind '" + kind + "'");
}

Action parse_action(const ordered_json& j, const std::string& path) {
    const std::string kind = need_string(j, "kind", path);
    if (kind == "noop") {
        return Noop{};
    }
    if (kind == "place_bet") {
        return PlaceBet{need_u64(j, "stake", path)};
    }
    if (kind == "settle_bet") {
        return SettleBet{need_u64(j, "bet_id", path), need_string(j, "rng_uri", path)};
    }
    if (kind == "price_transfer") {
        PriceTransfer t;
        t.from = need_string(j, "from", path);
        t.to = need_string(j, "to", path);
        t.feed_uri = need_string(j, "feed_uri", path);
        auto it = j.find("historical");
        t.historical = it != j.end() && it->is_boolean() && it->get<bool>();
        return t;
    }
    if (kind == "rng_input") {
        return RngInput{need_u64(j, "bet_id", path), need_hex(j, "value", path)};
    }
    if (kind == "feed_input") {
        return FeedInput{need_string(j, "feed_uri", path), need_hex(j, "value", path)};
    }
    throw ConfigError("config error at " + path + ": unknown action kind '" + kind + "'");
}

}  // namespace

SecretSeed derive_oracle_key_seed(const std::string& uri) {
    return sha256(to_bytes("vexsim-oracle-key:" + uri));
}

Scenario parse_scenario_text(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config error: not valid JSON: ") + e.what());
    }

    Scenario scenario;
    const auto& network = need(j, "network", "/");
    scenario.network.node_count =
        static_cast<std::uint32_t>(need_u64(network, "node_count", "/network"));
    scenario.network.link_latency = opt_u64(network, "link_latency", 1);
    scenario.network.difficulty =
        static_cast<std::uint32_t>(need_u64(network, "difficulty", "/network"));
    scenario.network.completion_timeout = opt_u64(network, "completion_timeout", 50);
    scenario.network.global_seed = need_u64(network, "global_seed", "/network");
    if (auto it = network.find("drop_probability"); it != network.end()) {
        if (!it->is_number()) {
            throw ConfigError("config error at /network/drop_probability: expected number");
        }
        const double p = it->get<double>();
        if (p < 0.0 || p > 1.0) {
            throw ConfigError("config error at /network/drop_probability: must be in [0,1]");
        }
        scenario.network.drop_probability = p;
    }

    auto mode = interaction_mode_from_string(need_string(j, "mode", "/"));
    if (!mode) {
        throw ConfigError("config error at /mode: unknown mode");
    }
    scenario.mode = *mode;

    if (auto it = j.find("policy"); it != j.end()) {
        scenario.policy.fresh_max_age =
            opt_u64(*it, "fresh_max_age", scenario.policy.fresh_max_age);
        scenario.policy.history_window =
            opt_u64(*it, "history_window", scenario.policy.history_window);
        scenario.policy.block_call_cap = static_cast<std::uint32_t>(
            opt_u64(*it, "block_call_cap", scenario.policy.block_call_cap));
    }

    const auto& oracles = need(j, "oracles", "/");
    if (!oracles.is_array()) {
        throw ConfigError("config error at /oracles: expected array");
    }
    std::size_t oracle_index = 0;
    for (const auto& o : oracles) {
        const std::string path = "/oracles[" + std::to_string(oracle_index++) + "]";
        OracleSpec spec;
        spec.uri = need_string(o, "uri", path);
        spec.behavior = parse_behavior(need(o, "behavior", path), path + "/behavior");
        if (auto it = o.find("key_seed"); it != o.end()) {
            auto seed = hex_decode_fixed<32>(it->get<std::string>());
            if (!seed) {
                throw ConfigError("config error at " + path + "/key_seed: expected 32 hex bytes");
            }
            spec.key_seed = *seed;
        }
        if (auto it = o.find("up"); it != o.end()) {
            spec.up = it->get<bool>();
        }
        scenario.oracles.push_back(std::move(spec));
    }

    const auto& genesis = need(j, "genesis", "/");
    for (const auto& [account, amount] : need(genesis, "balances", "/genesis").items()) {
        if (!amount.is_number_unsigned()) {
            throw ConfigError("config error at /genesis/balances/" + account +
                              ": expected unsigned integer");
        }
        scenario.genesis_balances[account] = amount.get<std::uint64_t>();
    }

    const auto& script = need(j, "script", "/");
    if (!script.is_array()) {
        throw ConfigError("config error at /script: expected array");
    }
    std::size_t entry_index = 0;
    std::uint64_t last_tick = 0;
    for (const auto& e : script) {
        const std::string path = "/script[" + std::to_string(entry_index) + "]";
        ScriptEntry entry;
        entry.tick = need_u64(e, "tick", path);
        if (entry_index > 0 && entry.tick <= last_tick) {
            throw ConfigError("config error at " + path + ": script ticks must strictly increase");
        }
        last_tick = entry.tick;
        entry.initiator = need_string(e, "initiator", path);
        entry.action = parse_action(need(e, "action", path), path + "/action");
        if (auto it = e.find("resolution"); it != e.end()) {
            const std::string r = it->get<std::string>();
            if (r == "initiator") {
                entry.resolution = ResolutionMode::InitiatorResolved;
            } else if (r == "finalizer") {
                entry.resolution = ResolutionMode::FinalizerResolved;
            } else {
                throw ConfigError("config error at " + path + "/resolution: unknown value");
            }
        }
        entry.max_calls = static_cast<std::uint32_t>(opt_u64(e, "max_calls", 4));
        scenario.script.push_back(std::move(entry));
        ++entry_index;
    }

    const auto& stop = need(j, "stop", "/");
    if (auto it = stop.find("at_height"); it != stop.end()) {
        scenario.stop.kind = StopRule::Kind::AtHeight;
        scenario.stop.value = it->get<std::uint64_t>();
    } else if (auto it2 = stop.find("at_tick"); it2 != stop.end()) {
        scenario.stop.kind = StopRule::Kind::AtTick;
        scenario.stop.value = it2->get<std::uint64_t>();
    } else {
        throw ConfigError("config error at /stop: expected at_height or at_tick");
    }

    if (auto it = j.find("fault"); it != j.end()) {
        const std::string kind = need_string(*it, "kind", "/fault");
        if (kind == "crash_winner_after_partial") {
            scenario.fault.kind = FaultPlan::Kind::CrashWinnerAfterPartial;
            scenario.fault.height = need_u64(*it, "height", "/fault");
        } else {
            throw ConfigError("config error at /fault/kind: unknown fault");
        }
    }
    scenario.max_ticks = opt_u64(j, "max_ticks", scenario.max_ticks);
    return scenario;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open scenario file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario_text(buffer.str());
}

OracleDirectory build_directory(const Scenario& scenario) {
    OracleDirectory directory;
    for (const OracleSpec& spec : scenario.oracles) {
        OracleEndpoint ep;
        ep.uri = spec.uri;
        ep.keys = keypair_from_seed(spec.key_seed ? *spec.key_seed
                                                  : derive_oracle_key_seed(spec.uri));
        ep.behavior = spec.behavior;
        ep.up = spec.up;
        directory.add(std::move(ep));
    }
    return directory;
}

World make_world(const Scenario& scenario) {
    ContractState genesis;
    genesis.balances = scenario.genesis_balances;
    World world(scenario.network, scenario.mode, scenario.policy, build_directory(scenario),
                std::move(genesis));
    world.set_fault(scenario.fault);
    // the traditional agent pushes rng values to the endpoint the script's
    // settle actions name
    for (const ScriptEntry& entry : scenario.script) {
        if (const auto* settle = std::get_if<SettleBet>(&entry.action)) {
            world.set_agent_rng_uri(settle->rng_uri);
            break;
        }
    }
    return world;
}

void inject_script(World& world, const Scenario& scenario) {
    NonceStream initiator_nonces("initiator-nonce", scenario.network.global_seed, 0);
    ContractState genesis;
    genesis.balances = scenario.genesis_balances;
    std::uint64_t salt = 1;
    for (const ScriptEntry& entry : scenario.script) {
        if (scenario.mode == InteractionMode::TraditionalOracle &&
            std::holds_alternative<SettleBet>(entry.action)) {
            // in the traditional flow the trusted party's pushed input
            // settles the bet; the user does not submit a settle
            ++salt;
            continue;
        }
        std::vector<VerifiableExternalCall> attached;
        if (entry.resolution == ResolutionMode::InitiatorResolved) {
            // the submitter performs its calls up front and attaches the
            // signed responses
            Transaction probe = make_transaction(entry.initiator, salt, entry.action,
                                                 ResolutionMode::FinalizerResolved, {},
                                                 entry.max_calls);
            for (const auto& req :
                 declared_calls(probe, genesis, scenario.mode, initiator_nonces)) {
                auto response = handle_request(world.oracles(), req, entry.tick);
                if (response) {
                    auto key = world.registry().find(req.endpoint_uri);
                    if (key != world.registry().end()) {
                        attached.push_back(VerifiableExternalCall{req, key->second, *response});
                    }
                }
            }
        }
        Transaction tx = make_transaction(entry.initiator, salt, entry.action, entry.resolution,
                                          std::move(attached), entry.max_calls);
        world.submit_at(entry.tick, tx);
        ++salt;
    }
}

void run_to_stop(World& world, const Scenario& scenario) {
    if (scenario.stop.kind == StopRule::Kind::AtHeight) {
        world.run_until_height(scenario.stop.value, scenario.max_ticks);
    } else {
        world.run_until_tick(scenario.stop.value);
    }
}

ChainFileMeta chain_meta_for(const Scenario& scenario) {
    ChainFileMeta meta;
    meta.mode = scenario.mode;
    meta.difficulty = scenario.network.difficulty;
    meta.policy = scenario.policy;
    meta.genesis_balances = scenario.genesis_balances;
    for (const OracleSpec& spec : scenario.oracles) {
        meta.oracle_keys[spec.uri] =
            keypair_from_seed(spec.key_seed ? *spec.key_seed : derive_oracle_key_seed(spec.uri))
                .pub;
    }
    return meta;
}

MetricsReport collect_report(const Scenario& scenario, World& world) {
    MetricsReport report;
    for (const auto& [id, completed_height] : world.bet_completed_height()) {
        auto placed = world.bet_placed_height().find(id);
        if (placed != world.bet_placed_height().end()) {
            report.blocks_to_completion["bet:" + std::to_string(id)] =
                completed_height - placed->second + 1;
        }
    }
    report.oracle_invocations = invocation_counts(world.oracles());
    report.cache_hits = world.cache_hits();
    const Chain& chain = world.nodes().at(0).chain;
    report.final_state_root = state_root(chain.tip_state());
    // a fresh validator replays the exported chain with no oracle access
    const std::string exported = export_chain_text(chain, chain_meta_for(scenario));
    report.chain_valid = validate_loaded_chain(parse_chain_text(exported)).valid;
    return report;
}

RunResult run_scenario(const Scenario& scenario) {
    if (scenario.network.node_count == 0) {
        throw ConfigError("config error at /network/node_count: must be at least 1");
    }
    World world = make_world(scenario);
    inject_script(world, scenario);
    run_to_stop(world, scenario);

    RunResult result{.report = collect_report(scenario, world),
                     .trace = world.trace(),
                     .chain = world.nodes().at(0).chain,
                     .final_tick = world.now(),
                     .validations_performed = world.validations_performed(),
                     .validation_invocation_delta = world.validation_invocation_delta()};
    return result;
}

std::string report_text(const MetricsReport& report, InteractionMode mode) {
    std::ostringstream out;
    out << "vexsim report\n";
    out << "mode: " << to_string(mode) << "\n";
    out << "final_state_root: " << hex_encode(report.final_state_root) << "\n";
    out << "chain_valid: " << (report.chain_valid ? "true" : "false") << "\n";
    out << "cache_hits: " << report.cache_hits << "\n";
    out << "blocks_to_completion:\n";
    for (const auto& [process, blocks] : report.blocks_to_completion) {
        out << "  " << process << " = " << blocks << "\n";
    }
    out << "oracle_invocations:\n";
    for (const auto& [uri, count] : report.oracle_invocations) {
        out << "  " << uri << " = " << count << "\n";
    }
    return out.str();
}

std::string report_json_lines(const MetricsReport& report, InteractionMode mode) {
    std::ostringstream out;
    ordered_json meta;
    meta["record"] = "report_meta";
    meta["version"] = 1;
    meta["mode"] = to_string(mode);
    meta["final_state_root"] = hex_encode(report.final_state_root);
    meta["chain_valid"] = report.chain_valid;
    meta["cache_hits"] = report.cache_hits;
    out << meta.dump() << "\n";
    for (const auto& [process, blocks] : report.blocks_to_completion) {
        ordered_json line;
        line["record"] = "process";
        line["id"] = process;
        line["blocks"] = blocks;
        out << line.dump() << "\n";
    }
    for (const auto& [uri, count] : report.oracle_invocations) {
        ordered_json line;
        line["record"] = "oracle";
        line["uri"] = uri;
        line["invocations"] = count;
        out << line.dump() << "\n";
    }
    return out.str();
}

}  // namespace vex
