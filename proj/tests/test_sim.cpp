#include "doctest.h"

#include <sstream>

#include "scenario_fixtures.hpp"
#include "test_util.hpp"
#include "vex/sim.hpp"

using namespace vex;

namespace {

struct TraceStats {
    std::uint64_t partials = 0;
    std::uint64_t completions = 0;
    std::uint64_t oracle_requests = 0;
    std::set<std::string> oracle_request_sources;
};

TraceStats scan_trace(const std::vector<std::string>& trace) {
    TraceStats stats;
    for (const std::string& line : trace) {
        std::istringstream ls(line);
        std::string tick, src, dst, kind;
        ls >> tick >> src >> dst >> kind;
        if (kind == "partial") ++stats.partials;
        if (kind == "completion") ++stats.completions;
        if (kind == "oracle_request") {
            ++stats.oracle_requests;
            stats.oracle_request_sources.insert(src);
        }
    }
    return stats;
}

}  // namespace

TEST_SUITE_BEGIN("sim");

TEST_CASE("a world without nodes stays empty") {
    Scenario s = vextest::rng_bet_scenario(InteractionMode::VerifiableExternalCalls);
    s.network.node_count = 0;
    s.script.clear();
    World world = make_world(s);
    for (int i = 0; i < 100; ++i) {
        CHECK_FALSE(world.step());
    }
    CHECK(world.trace().empty());
    CHECK(world.now() == 0);
}

TEST_CASE("identical seeds produce identical traces and roots") {
    auto run = [] {
        Scenario s = vextest::rng_bet_scenario(InteractionMode::VerifiableExternalCalls, 4, 33);
        World world = make_world(s);
        inject_script(world, s);
        run_to_stop(world, s);
        return std::make_pair(world.trace(),
                              state_root(world.nodes().at(0).chain.tip_state()));
    };
    auto [trace_a, root_a] = run();
    auto [trace_b, root_b] = run();
    CHECK(trace_a == trace_b);
    CHECK(root_a == root_b);
    CHECK_FALSE(trace_a.empty());

    Scenario other = vextest::rng_bet_scenario(InteractionMode::VerifiableExternalCalls, 4, 34);
    World world = make_world(other);
    inject_script(world, other);
    run_to_stop(world, other);
    CHECK(world.trace() != trace_a);
}

TEST_CASE("tips that share a hash share a state root at every step") {
    Scenario s = vextest::rng_bet_scenario(InteractionMode::VerifiableExternalCalls, 4, 35);
    World world = make_world(s);
    inject_script(world, s);
    std::uint64_t steps = 0;
    while (!world.all_heights_at_least(4) && world.step()) {
        REQUIRE(world.tips_consistent());
        if (++steps > 2000000) break;
    }
    CHECK(world.all_heights_at_least(4));
}

TEST_CASE("drop probability one keeps every block at its producer") {
    Scenario s = vextest::rng_bet_scenario(InteractionMode::VerifiableExternalCalls, 3, 36);
    s.network.drop_probability = 1.0;
    s.stop = {StopRule::Kind::AtTick, 2000};
    World world = make_world(s);
    inject_script(world, s);
    run_to_stop(world, s);

    const TraceStats stats = scan_trace(world.trace());
    CHECK(stats.partials == 0);      // nothing was ever delivered to a peer
    CHECK(stats.completions == 0);
    // producers still mine their own chains
    std::uint64_t max_height = 0;
    for (const Node& node : world.nodes()) {
        max_height = std::max(max_height, node.chain.height());
    }
    CHECK(max_height > 0);
}

TEST_CASE("exactly one node contacts the oracle per block") {
    for (std::uint32_t n : {2u, 4u, 8u}) {
        Scenario s = vextest::rng_bet_scenario(InteractionMode::VerifiableExternalCalls, n, 40 + n);
        World world = make_world(s);
        inject_script(world, s);
        run_to_stop(world, s);

        CHECK(world.all_heights_at_least(8));
        const TraceStats stats = scan_trace(world.trace());
        // the settle declared one fresh call: one request, from one node
        CHECK(stats.oracle_requests == 1);
        CHECK(stats.oracle_request_sources.size() == 1);
        CHECK(world.oracles().find(vextest::kRng)->invocation_count == 1);
    }
}

TEST_CASE("zero-call blocks complete without oracle traffic") {
    Scenario s = vextest::rng_bet_scenario(InteractionMode::VerifiableExternalCalls, 3, 55);
    s.script.clear();  // only empty blocks
    s.stop = {StopRule::Kind::AtHeight, 3};
    World world = make_world(s);
    inject_script(world, s);
    run_to_stop(world, s);

    CHECK(world.all_heights_at_least(3));
    const TraceStats stats = scan_trace(world.trace());
    CHECK(stats.oracle_requests == 0);
    CHECK(stats.completions > 0);
    CHECK(total_invocations(world.oracles()) == 0);
}

TEST_CASE("validation performs zero oracle invocations across a run") {
    Scenario s = vextest::rng_bet_scenario(InteractionMode::VerifiableExternalCalls, 4, 60);
    World world = make_world(s);
    inject_script(world, s);
    run_to_stop(world, s);

    CHECK(world.validations_performed() > 0);
    CHECK(world.validation_invocation_delta() == 0);
}

TEST_CASE("liveness: the chain advances past a crashed winner") {
    Scenario s = vextest::rng_bet_scenario(InteractionMode::VerifiableExternalCalls, 4, 61);
    s.fault = {FaultPlan::Kind::CrashWinnerAfterPartial, 2};
    s.stop = {StopRule::Kind::AtHeight, 4};
    World world = make_world(s);
    inject_script(world, s);

    // run until the fault fires
    std::uint64_t crash_tick = 0;
    while (crash_tick == 0 && world.step()) {
        for (const Node& node : world.nodes()) {
            if (node.crashed) {
                crash_tick = world.now();
            }
        }
    }
    REQUIRE(crash_tick > 0);

    const std::uint64_t bound = crash_tick + s.network.completion_timeout + 10000;
    while (!world.all_heights_at_least(2) && world.now() <= bound && world.step()) {
    }
    CHECK(world.all_heights_at_least(2));
    CHECK(world.now() <= bound);

    // surviving nodes observed at least one completion timeout
    std::uint64_t timeouts = 0;
    for (const Node& node : world.nodes()) {
        timeouts += node.timeouts;
    }
    CHECK(timeouts >= 1);
}

TEST_CASE("degenerate completion timeout still makes progress via supersession") {
    Scenario s = vextest::rng_bet_scenario(InteractionMode::VerifiableExternalCalls, 3, 62);
    s.network.completion_timeout = 0;
    s.script.clear();
    s.stop = {StopRule::Kind::AtHeight, 2};
    s.max_ticks = 500000;
    World world = make_world(s);
    inject_script(world, s);
    run_to_stop(world, s);
    CHECK(world.all_heights_at_least(2));
}

TEST_CASE("shared cacheable calls cost one invocation regardless of network size") {
    for (std::uint32_t n : {2u, 4u, 8u}) {
        Scenario s = vextest::price_feed_scenario(InteractionMode::VerifiableExternalCalls, n,
                                                  90 + n);
        // two transfers against the same feed, inseparable into different
        // blocks because both precede the first possible non-empty block
        s.script.clear();
        s.script.push_back({1, "alice", PriceTransfer{"alice", "bob", vextest::kFeed}});
        s.script.push_back({2, "bob", PriceTransfer{"bob", "alice", vextest::kFeed}});
        World world = make_world(s);
        inject_script(world, s);
        run_to_stop(world, s);

        CHECK(world.all_heights_at_least(3));
        CHECK(world.oracles().find(vextest::kFeed)->invocation_count == 1);
        CHECK(world.cache_hits() == 1);
    }
}

TEST_CASE("all-nodes-call mode invokes the oracle once per validating node") {
    for (std::uint32_t n : {2u, 4u, 8u}) {
        Scenario s = vextest::price_feed_scenario(InteractionMode::AllNodesCall, n, 70 + n);
        World world = make_world(s);
        inject_script(world, s);
        run_to_stop(world, s);

        CHECK(world.all_heights_at_least(3));
        CHECK(world.oracles().find(vextest::kFeed)->invocation_count == n);
        CHECK(world.tips_consistent());
    }
}

TEST_CASE("traditional mode settles the bet in a strictly later block") {
    Scenario s = vextest::rng_bet_scenario(InteractionMode::TraditionalOracle, 4, 80);
    World world = make_world(s);
    inject_script(world, s);
    run_to_stop(world, s);

    REQUIRE(world.bet_placed_height().count(1) == 1);
    REQUIRE(world.bet_completed_height().count(1) == 1);
    CHECK(world.bet_completed_height().at(1) > world.bet_placed_height().at(1));
}

TEST_CASE("verifiable mode settles the bet within the block that placed it") {
    Scenario s = vextest::rng_bet_scenario(InteractionMode::VerifiableExternalCalls, 4, 81);
    World world = make_world(s);
    inject_script(world, s);
    run_to_stop(world, s);

    REQUIRE(world.bet_placed_height().count(1) == 1);
    REQUIRE(world.bet_completed_height().count(1) == 1);
    CHECK(world.bet_completed_height().at(1) == world.bet_placed_height().at(1));
}

TEST_SUITE_END();
