#pragma once

// Shared scenario fixtures for the simulation, scenario and acceptance
// suites. Script ticks 1 and 2 guarantee the bet and its settle enter every
// pool before any non-empty block can be mined, so both land in one block
// under verifiable external calls.

#include "vex/scenario.hpp"

namespace vextest {

inline const std::string kRng = "oracle://rng";
inline const std::string kFeed = "oracle://feed/gold";

inline vex::Scenario rng_bet_scenario(vex::InteractionMode mode, std::uint32_t nodes = 4,
                                      std::uint64_t seed = 11) {
    vex::Scenario s;
    s.network.node_count = nodes;
    s.network.link_latency = 1;
    s.network.difficulty = 8;
    s.network.completion_timeout = 60;
    s.network.global_seed = seed;
    s.mode = mode;
    s.oracles.push_back({kRng, vex::SeededStream{7}, std::nullopt, true});
    s.genesis_balances = {{"alice", 100}, {vex::kHouseAccount, 1000}};
    s.script.push_back({1, "alice", vex::PlaceBet{10}});
    s.script.push_back({2, "alice", vex::SettleBet{1, kRng}});
    s.stop = {vex::StopRule::Kind::AtHeight, 8};
    return s;
}

inline vex::Scenario price_feed_scenario(vex::InteractionMode mode, std::uint32_t nodes = 4,
                                         std::uint64_t seed = 21) {
    vex::Scenario s;
    s.network.node_count = nodes;
    s.network.link_latency = 1;
    s.network.difficulty = 8;
    s.network.completion_timeout = 60;
    s.network.global_seed = seed;
    s.mode = mode;
    s.oracles.push_back({kFeed, vex::ConstantValue{vex::Bytes{0x00, 0x07}}, std::nullopt, true});
    s.genesis_balances = {{"alice", 100}, {"bob", 50}, {vex::kHouseAccount, 1000}};
    s.script.push_back({5, "alice", vex::PriceTransfer{"alice", "bob", kFeed}});
    s.stop = {vex::StopRule::Kind::AtHeight, 3};
    return s;
}

}  // namespace vextest
