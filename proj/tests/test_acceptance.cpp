#include "doctest.h"

#include <cstdio>

#include "reference_transitions.hpp"
#include "scenario_fixtures.hpp"
#include "test_util.hpp"
#include "vex/scenario.hpp"

using namespace vex;

namespace {

void report_criterion(int number, bool pass, const char* description) {
    std::printf("ACCEPTANCE %d %s: %s\n", number, pass ? "PASS" : "FAIL", description);
    std::fflush(stdout);
}

SecretSeed seed_of(std::uint8_t fill) {
    SecretSeed s{};
    s.fill(fill);
    return s;
}

// mixed 20-block scenario: a bet settled by a fresh call plus transfers
// sharing one cacheable feed
Scenario mixed_scenario(std::uint64_t seed, std::uint64_t target_height) {
    Scenario s;
    s.network.node_count = 4;
    s.network.link_latency = 1;
    s.network.difficulty = 8;
    s.network.completion_timeout = 60;
    s.network.global_seed = seed;
    s.mode = InteractionMode::VerifiableExternalCalls;
    s.oracles.push_back({vextest::kRng, SeededStream{7}, std::nullopt, true});
    s.oracles.push_back({vextest::kFeed, ConstantValue{Bytes{0x00, 0x03}}, std::nullopt, true});
    s.genesis_balances = {{"alice", 100}, {"bob", 50}, {kHouseAccount, 1000}};
    s.script.push_back({1, "alice", PlaceBet{10}});
    s.script.push_back({2, "alice", SettleBet{1, vextest::kRng}});
    s.script.push_back({3, "alice", PriceTransfer{"alice", "bob", vextest::kFeed}});
    s.script.push_back({4, "bob", PriceTransfer{"bob", "alice", vextest::kFeed}});
    s.stop = {StopRule::Kind::AtHeight, target_height};
    return s;
}

struct LedgerHarness {
    OracleDirectory oracles;
    std::map<std::string, PublicKey> registry;
    ResolutionPolicy policy;
    Chain chain;
    NonceStream nonces{"acceptance", 3, 0};
    std::uint32_t difficulty = 4;

    LedgerHarness() : chain(Chain::with_genesis(genesis_state())) {
        OracleEndpoint rng;
        rng.uri = vextest::kRng;
        rng.keys = keypair_from_seed(seed_of(0x71));
        rng.behavior = SeededStream{5};
        oracles.add(rng);
        OracleEndpoint feed;
        feed.uri = vextest::kFeed;
        feed.keys = keypair_from_seed(seed_of(0x72));
        feed.behavior = ConstantValue{Bytes{0x00, 0x04}};
        oracles.add(feed);
        registry = public_keys(oracles);
    }

    static ContractState genesis_state() {
        ContractState s;
        s.balances = {{"alice", 100}, {"bob", 100}, {kHouseAccount, 1000}};
        return s;
    }

    CompletedBlock mine(std::vector<Transaction> txs, std::uint64_t now) {
        PartialBlock partial = build_partial_block(chain, std::move(txs), difficulty);
        return complete_block(chain, partial, InteractionMode::VerifiableExternalCalls,
                              direct_oracle_access(oracles, now), registry, policy, nonces, now);
    }
};

}  // namespace

TEST_SUITE_BEGIN("acceptance");

TEST_CASE("criterion 1: rng bet completes in 1 block with verifiable calls, 2+ traditionally") {
    const RunResult vec =
        run_scenario(vextest::rng_bet_scenario(InteractionMode::VerifiableExternalCalls));
    const RunResult trad =
        run_scenario(vextest::rng_bet_scenario(InteractionMode::TraditionalOracle));

    const bool vec_one = vec.report.blocks_to_completion.count("bet:1") == 1 &&
                         vec.report.blocks_to_completion.at("bet:1") == 1;
    const bool trad_two = trad.report.blocks_to_completion.count("bet:1") == 1 &&
                          trad.report.blocks_to_completion.at("bet:1") >= 2;
    report_criterion(1, vec_one && trad_two,
                     "rng bet: 1 block under verifiable calls, >= 2 blocks traditionally");
    CHECK(vec_one);
    CHECK(trad_two);
}

TEST_CASE("criterion 2: one call site costs N invocations all-nodes, 1 with verifiable calls") {
    bool pass = true;
    for (std::uint32_t n : {2u, 4u, 8u}) {
        const RunResult all =
            run_scenario(vextest::price_feed_scenario(InteractionMode::AllNodesCall, n, 70 + n));
        const RunResult vec = run_scenario(
            vextest::price_feed_scenario(InteractionMode::VerifiableExternalCalls, n, 70 + n));
        const std::uint64_t all_calls = all.report.oracle_invocations.at(vextest::kFeed);
        const std::uint64_t vec_calls = vec.report.oracle_invocations.at(vextest::kFeed);
        pass = pass && all_calls == n && vec_calls == 1;
        CHECK(all_calls == n);
        CHECK(vec_calls == 1);
    }
    report_criterion(2, pass, "oracle invocations per call site: N all-nodes, 1 verifiable");
    CHECK(pass);
}

TEST_CASE("criterion 3: response cache reuse within and across blocks") {
    LedgerHarness h;
    auto tx1 = make_transaction("alice", 1, PriceTransfer{"alice", "bob", vextest::kFeed});
    auto tx2 = make_transaction("bob", 2, PriceTransfer{"bob", "alice", vextest::kFeed});
    auto b1 = h.mine({tx1, tx2}, 10);
    const std::uint64_t after_block1 = h.oracles.find(vextest::kFeed)->invocation_count;
    h.chain.append(b1.block, b1.post_state);

    auto tx3 = make_transaction("alice", 3, PriceTransfer{"alice", "bob", vextest::kFeed, true});
    auto b2 = h.mine({tx3}, 20);
    const std::uint64_t after_block2 = h.oracles.find(vextest::kFeed)->invocation_count;

    const bool one_in_block = after_block1 == 1;
    const bool none_in_next = after_block2 == after_block1;
    const bool shared_key =
        b1.block.transactions[0].receipt.calls_used == b1.block.transactions[1].receipt.calls_used;
    const bool applied = b2.block.transactions[0].receipt.status == ReceiptStatus::Applied;
    report_criterion(3, one_in_block && none_in_next && shared_key && applied,
                     "cache: 1 invocation for two sharing txs, 0 for historical reuse");
    CHECK(one_in_block);
    CHECK(none_in_next);
    CHECK(shared_key);
    CHECK(applied);
}

TEST_CASE("criterion 4: peer validation performs zero oracle invocations over 20 blocks") {
    Scenario s = mixed_scenario(101, 20);
    World world = make_world(s);
    inject_script(world, s);
    run_to_stop(world, s);

    const bool reached = world.all_heights_at_least(20);
    const bool validated = world.validations_performed() >= 20;
    const bool pure = world.validation_invocation_delta() == 0;
    report_criterion(4, reached && validated && pure,
                     "validation purity: 0 oracle invocations across a 20-block run");
    CHECK(reached);
    CHECK(validated);
    CHECK(pure);
}

TEST_CASE("criterion 5: a 20-block chain revalidates from genesis with oracles down") {
    Scenario s = mixed_scenario(102, 20);
    World world = make_world(s);
    inject_script(world, s);
    run_to_stop(world, s);
    REQUIRE(world.all_heights_at_least(20));

    const std::string exported =
        export_chain_text(world.nodes().at(0).chain, chain_meta_for(s));

    set_all_availability(world.oracles(), false);
    reset_counters(world.oracles());
    const ChainValidationResult result = validate_loaded_chain(parse_chain_text(exported));
    const bool no_calls = total_invocations(world.oracles()) == 0;

    report_criterion(5, result.valid && no_calls,
                     "future verifiability: full offline revalidation of a 20-block chain");
    CHECK(result.valid);
    CHECK(no_calls);
}

TEST_CASE("criterion 6: determinism of traces, roots and tip consistency") {
    const Scenario s = mixed_scenario(103, 6);
    auto run_collect = [&] {
        World world = make_world(s);
        inject_script(world, s);
        run_to_stop(world, s);
        return std::make_pair(world.trace(), state_root(world.nodes().at(0).chain.tip_state()));
    };
    auto [trace_a, root_a] = run_collect();
    auto [trace_b, root_b] = run_collect();
    const bool identical = trace_a == trace_b && root_a == root_b;

    World stepped = make_world(s);
    inject_script(stepped, s);
    bool consistent = true;
    std::uint64_t guard = 0;
    while (!stepped.all_heights_at_least(6) && stepped.step()) {
        consistent = consistent && stepped.tips_consistent();
        if (++guard > 5000000) break;
    }
    const bool reached = stepped.all_heights_at_least(6);

    report_criterion(6, identical && consistent && reached,
                     "determinism: identical traces and roots; consistent tips every tick");
    CHECK(identical);
    CHECK(consistent);
    CHECK(reached);
}

TEST_CASE("criterion 7: adversarial suite") {
    LedgerHarness h;
    auto placed = h.mine({make_transaction("alice", 1, PlaceBet{10})}, 2);
    h.chain.append(placed.block, placed.post_state);
    auto honest = h.mine({make_transaction("alice", 2, SettleBet{1, vextest::kRng}),
                          make_transaction("bob", 3, PriceTransfer{"bob", "alice", vextest::kFeed})},
                         8);

    // forged-signature completion rejected by every peer
    Block forged = honest.block;
    forged.transactions[0].fresh_calls[0].signed_response.signature[7] ^= 0x20;
    int rejecting_peers = 0;
    const int peer_count = 8;
    for (int p = 0; p < peer_count; ++p) {
        Chain peer = Chain::with_genesis(LedgerHarness::genesis_state());
        peer.append(h.chain.blocks[1], h.chain.states[1]);
        auto outcome =
            validate_block(peer, peer.height(), forged, h.registry, h.policy, h.difficulty);
        if (!outcome.accepted && outcome.reason == RejectReason::BadSignature) {
            ++rejecting_peers;
        }
    }
    const bool all_reject = rejecting_peers == peer_count;

    // replayed fresh nonce rejected
    h.chain.append(honest.block, honest.post_state);
    auto placed2 = h.mine({make_transaction("bob", 4, PlaceBet{10})}, 12);
    h.chain.append(placed2.block, placed2.post_state);
    auto replay_target = make_transaction("bob", 5, SettleBet{2, vextest::kRng});
    PartialBlock partial = build_partial_block(h.chain, {replay_target}, h.difficulty);
    const SitePlan plan = plan_block_sites(partial.transactions, h.chain.tip_state(),
                                           InteractionMode::VerifiableExternalCalls, h.policy);
    std::vector<ResolvedCalls> per_tx{{honest.block.transactions[0].fresh_calls[0]}};
    auto replayed = assemble_block(h.chain, partial, InteractionMode::VerifiableExternalCalls,
                                   plan, per_tx, ResponseCache{}, h.policy, 14);
    auto replay_outcome = validate_block(h.chain, h.chain.height(), replayed.block, h.registry,
                                         h.policy, h.difficulty);
    const bool replay_rejected =
        !replay_outcome.accepted && replay_outcome.reason == RejectReason::ReplayedNonce;

    // >= 1000 random single-bit tamperings of stored calls all fail
    std::vector<VerifiableExternalCall> stored;
    for (const Block& b : h.chain.blocks) {
        for (const BlockTx& btx : b.transactions) {
            for (const auto& call : btx.fresh_calls) stored.push_back(call);
        }
        for (const auto& [key, call] : b.response_cache.entries) stored.push_back(call);
    }
    REQUIRE(!stored.empty());
    std::mt19937_64 rng(0xadbeef);
    int tampered_rejected = 0;
    const int kTamperCases = 1000;
    for (int i = 0; i < kTamperCases; ++i) {
        VerifiableExternalCall call = stored[rng() % stored.size()];
        switch (rng() % 5) {
            case 0: {
                auto& p = call.signed_response.payload;
                if (p.empty()) {
                    call.signed_response.responder_timestamp ^= 1ull << (rng() % 64);
                } else {
                    p[rng() % p.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
                }
                break;
            }
            case 1: {
                if (call.signed_response.response_nonce) {
                    auto& n = *call.signed_response.response_nonce;
                    n[rng() % n.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
                } else {
                    call.signed_response.responder_timestamp ^= 1ull << (rng() % 64);
                }
                break;
            }
            case 2:
                call.signed_response.responder_timestamp ^= 1ull << (rng() % 64);
                break;
            case 3: {
                auto& sig = call.signed_response.signature;
                sig[rng() % sig.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
                break;
            }
            case 4: {
                auto& key = call.public_key;
                key[rng() % key.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
                break;
            }
        }
        if (verify_external_call(call, call.signed_response.responder_timestamp, kNoMaxAge) !=
            VerificationResult::Ok) {
            ++tampered_rejected;
        }
    }
    const bool all_tampering_fails = tampered_rejected == kTamperCases;

    report_criterion(7, all_reject && replay_rejected && all_tampering_fails,
                     "adversarial: forged signatures, replayed nonces, bit tampering all rejected");
    CHECK(all_reject);
    CHECK(replay_rejected);
    CHECK(all_tampering_fails);
}

TEST_CASE("criterion 8: chain height advances past a crashed winner in bounded time") {
    Scenario s = vextest::rng_bet_scenario(InteractionMode::VerifiableExternalCalls, 4, 61);
    s.fault = {FaultPlan::Kind::CrashWinnerAfterPartial, 2};
    s.stop = {StopRule::Kind::AtHeight, 4};
    World world = make_world(s);
    inject_script(world, s);

    std::uint64_t crash_tick = 0;
    while (crash_tick == 0 && world.step()) {
        for (const Node& node : world.nodes()) {
            if (node.crashed) crash_tick = world.now();
        }
    }
    const bool crashed = crash_tick > 0;
    const std::uint64_t bound = crash_tick + s.network.completion_timeout + 10000;
    while (!world.all_heights_at_least(2) && world.now() <= bound && world.step()) {
    }
    const bool advanced = world.all_heights_at_least(2) && world.now() <= bound;
    report_criterion(8, crashed && advanced,
                     "liveness: height passes the crashed winner's block within the bound");
    CHECK(crashed);
    CHECK(advanced);
}

TEST_CASE("criterion 9: execution agrees with an independent reference on 200 random cases") {
    const KeyPair oracle_keys = keypair_from_seed(seed_of(0x90));
    std::mt19937_64 rng(424242);
    const auto mode = InteractionMode::VerifiableExternalCalls;
    int agreements = 0;
    const int kRounds = 200;
    for (int round = 0; round < kRounds; ++round) {
        ContractState state;
        const char* names[] = {"alice", "bob", "carol"};
        for (const char* n : names) {
            if (rng() % 4 != 0) state.balances[n] = rng() % 200;
        }
        state.balances[kHouseAccount] = rng() % 500;
        const std::uint64_t nbets = rng() % 3;
        for (std::uint64_t b = 1; b <= nbets; ++b) {
            state.bets[b] = Bet{names[rng() % 3], rng() % 50, static_cast<BetStatus>(rng() % 3)};
        }

        const AccountId initiator = names[rng() % 3];
        const Bytes payload = vextest::random_bytes(rng, 0, 10);
        Transaction tx;
        std::optional<ContractState> expected;
        switch (rng() % 3) {
            case 0: {
                const std::uint64_t stake = rng() % 120;
                tx = make_transaction(initiator, round, PlaceBet{stake});
                expected = vextest::ref_place_bet(state, initiator, stake);
                break;
            }
            case 1: {
                const BetId id = 1 + rng() % 3;
                tx = make_transaction(initiator, round, SettleBet{id, vextest::kRng});
                expected = vextest::ref_settle_bet(state, id, payload);
                break;
            }
            default: {
                const AccountId to = names[rng() % 3];
                tx = make_transaction(initiator, round,
                                      PriceTransfer{initiator, to, vextest::kFeed});
                expected = vextest::ref_price_transfer(state, initiator, to, vextest::kFeed,
                                                       payload);
                break;
            }
        }

        ResolvedCalls resolved;
        for (const auto& site : declared_call_sites(tx, state, mode)) {
            ExternalCallRequest req;
            req.endpoint_uri = site.uri;
            req.payload = site.payload;
            req.freshness = site.freshness;
            if (site.freshness == Freshness::Fresh) {
                Nonce16 n{};
                for (auto& x : n) x = static_cast<std::uint8_t>(rng());
                req.request_nonce = n;
            }
            resolved.emplace_back(VerifiableExternalCall{
                req, oracle_keys.pub,
                sign_response(payload, req.request_nonce, 1, oracle_keys.seed)});
        }

        const ApplyResult result = apply_transaction(state, tx, resolved, 1, 100, mode);
        const bool ok = expected ? (result.receipt.status == ReceiptStatus::Applied &&
                                    result.state == *expected)
                                 : (result.receipt.status == ReceiptStatus::FailedLogic &&
                                    result.state == state);
        if (ok) ++agreements;
    }
    const bool pass = agreements == kRounds;
    report_criterion(9, pass, "execution equals the straight-line reference on 200 random cases");
    CHECK(agreements == kRounds);
}

TEST_SUITE_END();
