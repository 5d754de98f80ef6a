#include "vex/contract.hpp"

#include <algorithm>

namespace vex {

std::string bet_feed_key(BetId bet_id) { return "rng/bet/" + std::to_string(bet_id); }

const char* to_string(InteractionMode m) {
    switch (m) {
        case InteractionMode::TraditionalOracle: return "traditional_oracle";
        case InteractionMode::AllNodesCall: return "all_nodes_call";
        case InteractionMode::VerifiableExternalCalls: return "verifiable_external_calls";
    }
    return "?";
}

std::optional<InteractionMode> interaction_mode_from_string(std::string_view s) {
    if (s == "traditional_oracle") return InteractionMode::TraditionalOracle;
    if (s == "all_nodes_call") return InteractionMode::AllNodesCall;
    if (s == "verifiable_external_calls") return InteractionMode::VerifiableExternalCalls;
    return std::nullopt;
}

const char* to_string(ReceiptStatus s) {
    switch (s) {
        case ReceiptStatus::Applied: return "applied";
        case ReceiptStatus::FailedVerification: return "failed_verification";
        case ReceiptStatus::FailedNoResponse: return "failed_no_response";
        case ReceiptStatus::FailedLogic: return "failed_logic";
    }
    return "?";
}

Bytes canonical_encode_state(const ContractState& state) {
    Encoder enc;
    enc.u32be(static_cast<std::uint32_t>(state.balances.size()));
    for (const auto& [account, balance] : state.balances) {
        enc.length_prefixed(account);
        enc.u64be(balance);
    }
    enc.u32be(static_cast<std::uint32_t>(state.bets.size()));
    for (const auto& [id, bet] : state.bets) {
        enc.u64be(id);
        enc.length_prefixed(bet.bettor);
        enc.u64be(bet.stake);
        enc.u8(static_cast<std::uint8_t>(bet.status));
    }
    enc.u32be(static_cast<std::uint32_t>(state.feed_values.size()));
    for (const auto& [key, value] : state.feed_values) {
        enc.length_prefixed(key);
        enc.length_prefixed(as_view(value));
    }
    return enc.take();
}

Hash32 state_root(const ContractState& state) { return sha256(canonical_encode_state(state)); }

namespace {

void encode_action(Encoder& enc, const Action& action) {
    if (std::holds_alternative<Noop>(action)) {
        enc.u8(0);
    } else if (const auto* place = std::get_if<PlaceBet>(&action)) {
        enc.u8(1);
        enc.u64be(place->stake);
    } else if (const auto* settle = std::get_if<SettleBet>(&action)) {
        enc.u8(2);
        enc.u64be(settle->bet_id);
        enc.length_prefixed(settle->rng_uri);
    } else if (const auto* transfer = std::get_if<PriceTransfer>(&action)) {
        enc.u8(3);
        enc.length_prefixed(transfer->from);
        enc.length_prefixed(transfer->to);
        enc.length_prefixed(transfer->feed_uri);
        enc.u8(transfer->historical ? 1 : 0);
    } else if (const auto* rng = std::get_if<RngInput>(&action)) {
        enc.u8(4);
        enc.u64be(rng->bet_id);
        enc.length_prefixed(as_view(rng->value));
    } else if (const auto* feed = std::get_if<FeedInput>(&action)) {
        enc.u8(5);
        enc.length_prefixed(feed->feed_uri);
        enc.length_prefixed(as_view(feed->value));
    }
}

// Big-endian integer value of a feed payload, reduced mod 2^64.
std::uint64_t feed_amount(const Bytes& payload) {
    std::uint64_t v = 0;
    const std::size_t start = payload.size() > 8 ? payload.size() - 8 : 0;
    for (std::size_t i = start; i < payload.size(); ++i) {
        v = (v << 8) | payload[i];
    }
    return v;
}

bool first_byte_even(const Bytes& payload) {
    return !payload.empty() && payload.front() % 2 == 0;
}

std::uint64_t balance_of(const ContractState& state, const AccountId& account) {
    auto it = state.balances.find(account);
    return it == state.balances.end() ? 0 : it->second;
}

void credit(ContractState& state, const AccountId& account, std::uint64_t amount) {
    if (amount > 0) {
        state.balances[account] += amount;
    }
}

// Settles an existing Placed bet with an rng value. Returns false when the
// house cannot cover the payout.
bool settle_with_value(ContractState& state, Bet& bet, const Bytes& rng_value) {
    if (first_byte_even(rng_value)) {
        const std::uint64_t payout = 2 * bet.stake;
        if (balance_of(state, kHouseAccount) < payout) {
            return false;
        }
        state.balances[kHouseAccount] -= payout;
        credit(state, bet.bettor, payout);
        bet.status = BetStatus::Won;
    } else {
        bet.status = BetStatus::Lost;
    }
    return true;
}

}  // namespace

Bytes canonical_encode_call(const VerifiableExternalCall& call) {
    Encoder enc;
    enc.length_prefixed(as_view(canonical_encode_request(call.request, /*include_nonce=*/true)));
    enc.u8(static_cast<std::uint8_t>(call.request.freshness));
    enc.raw(call.public_key);
    enc.length_prefixed(as_view(call.signed_response.payload));
    if (call.signed_response.response_nonce) {
        enc.u8(1);
        enc.raw(*call.signed_response.response_nonce);
    } else {
        enc.u8(0);
    }
    enc.u64be(call.signed_response.responder_timestamp);
    enc.raw(call.signed_response.signature);
    return enc.take();
}

Bytes canonical_encode_transaction(const Transaction& tx) {
    Encoder enc;
    enc.length_prefixed(tx.initiator);
    enc.u64be(tx.salt);
    encode_action(enc, tx.action);
    enc.u8(static_cast<std::uint8_t>(tx.mode));
    enc.u32be(tx.max_calls);
    enc.u32be(static_cast<std::uint32_t>(tx.initiator_calls.size()));
    for (const auto& call : tx.initiator_calls) {
        enc.length_prefixed(as_view(canonical_encode_call(call)));
    }
    return enc.take();
}

Hash32 transaction_id(const Transaction& tx) { return sha256(canonical_encode_transaction(tx)); }

Transaction make_transaction(AccountId initiator, std::uint64_t salt, Action action,
                             ResolutionMode mode,
                             std::vector<VerifiableExternalCall> initiator_calls,
                             std::uint32_t max_calls) {
    Transaction tx;
    tx.initiator = std::move(initiator);
    tx.salt = salt;
    tx.action = std::move(action);
    tx.mode = mode;
    tx.initiator_calls = std::move(initiator_calls);
    tx.max_calls = max_calls;
    tx.tx_id = transaction_id(tx);
    return tx;
}

CallKey site_key(const CallSite& site) {
    ExternalCallRequest req;
    req.endpoint_uri = site.uri;
    req.payload = site.payload;
    req.freshness = site.freshness;
    return call_key(req);
}

bool site_matches(const CallSite& site, const ExternalCallRequest& req) {
    // a cacheable site may be served by a call declared with either
    // cacheable flavor (reuse across blocks changes the declared flavor,
    // never the payload or the nonce discipline)
    const bool site_fresh = site.freshness == Freshness::Fresh;
    const bool req_fresh = req.freshness == Freshness::Fresh;
    return req.endpoint_uri == site.uri && req.payload == site.payload &&
           site_fresh == req_fresh && req.nonce_rule_ok();
}

std::vector<CallSite> declared_call_sites(const Transaction& tx, const ContractState& state,
                                          InteractionMode mode) {
    (void)state;  // declarations are state-independent for the built-in templates
    std::vector<CallSite> sites;
    if (mode != InteractionMode::TraditionalOracle) {
        if (const auto* settle = std::get_if<SettleBet>(&tx.action)) {
            Encoder payload;
            payload.u64be(settle->bet_id);
            sites.push_back({settle->rng_uri, payload.take(), Freshness::Fresh});
        } else if (const auto* transfer = std::get_if<PriceTransfer>(&tx.action)) {
            const Freshness f = transfer->historical ? Freshness::CacheableHistorical
                                                     : Freshness::CacheableIntraBlock;
            sites.push_back({transfer->feed_uri, Bytes{}, f});
        }
    }
    if (sites.size() > tx.max_calls) {
        throw CallBudgetExceeded("transaction declares more call sites than max_calls");
    }
    return sites;
}

ExternalCallRequest materialize_request(const CallSite& site, NonceStream& nonces) {
    ExternalCallRequest req;
    req.endpoint_uri = site.uri;
    req.payload = site.payload;
    req.freshness = site.freshness;
    if (site.freshness == Freshness::Fresh) {
        req.request_nonce = make_nonce(nonces);
    }
    return req;
}

std::vector<ExternalCallRequest> declared_calls(const Transaction& tx, const ContractState& state,
                                                InteractionMode mode, NonceStream& nonces) {
    std::vector<ExternalCallRequest> requests;
    for (const CallSite& site : declared_call_sites(tx, state, mode)) {
        requests.push_back(materialize_request(site, nonces));
    }
    return requests;
}

Bytes canonical_encode_receipt(const Receipt& receipt) {
    Encoder enc;
    enc.raw(receipt.tx_id);
    enc.u8(static_cast<std::uint8_t>(receipt.status));
    enc.u32be(static_cast<std::uint32_t>(receipt.calls_used.size()));
    for (const CallKey& key : receipt.calls_used) {
        enc.raw(key.digest);
    }
    enc.raw(receipt.state_root_after);
    return enc.take();
}

ApplyResult apply_transaction(const ContractState& state, const Transaction& tx,
                              const ResolvedCalls& resolved, std::uint64_t now,
                              std::uint64_t fresh_max_age, InteractionMode mode) {
    Receipt receipt;
    receipt.tx_id = tx.tx_id;

    auto failed = [&](ReceiptStatus status) {
        receipt.status = status;
        receipt.state_root_after = state_root(state);
        return ApplyResult{state, receipt};
    };

    std::vector<CallSite> sites;
    try {
        sites = declared_call_sites(tx, state, mode);
    } catch (const CallBudgetExceeded&) {
        return failed(ReceiptStatus::FailedLogic);
    }
    if (resolved.size() != sites.size()) {
        throw AlignmentError("resolved call list does not align with the declaration");
    }

    for (std::size_t i = 0; i < sites.size(); ++i) {
        if (resolved[i]) {
            receipt.calls_used.push_back(call_key(resolved[i]->request));
        }
    }
    for (std::size_t i = 0; i < sites.size(); ++i) {
        if (!resolved[i]) {
            return failed(ReceiptStatus::FailedNoResponse);
        }
        const VerifiableExternalCall& call = *resolved[i];
        if (!site_matches(sites[i], call.request)) {
            return failed(ReceiptStatus::FailedVerification);
        }
        const std::uint64_t max_age =
            sites[i].freshness == Freshness::Fresh ? fresh_max_age : kNoMaxAge;
        if (verify_external_call(call, now, max_age) != VerificationResult::Ok) {
            return failed(ReceiptStatus::FailedVerification);
        }
    }

    ContractState next = state;

    if (std::holds_alternative<Noop>(tx.action)) {
        // no state change
    } else if (const auto* place = std::get_if<PlaceBet>(&tx.action)) {
        if (place->stake == 0 || balance_of(next, tx.initiator) < place->stake) {
            return failed(ReceiptStatus::FailedLogic);
        }
        next.balances[tx.initiator] -= place->stake;
        credit(next, kHouseAccount, place->stake);
        const BetId id = next.bets.empty() ? 1 : next.bets.rbegin()->first + 1;
        next.bets[id] = Bet{tx.initiator, place->stake, BetStatus::Placed};
    } else if (const auto* settle = std::get_if<SettleBet>(&tx.action)) {
        auto it = next.bets.find(settle->bet_id);
        if (it == next.bets.end() || it->second.status != BetStatus::Placed) {
            return failed(ReceiptStatus::FailedLogic);
        }
        Bytes rng_value;
        if (mode == InteractionMode::TraditionalOracle) {
            auto feed = next.feed_values.find(bet_feed_key(settle->bet_id));
            if (feed == next.feed_values.end()) {
                return failed(ReceiptStatus::FailedLogic);
            }
            rng_value = feed->second;
        } else {
            rng_value = resolved[0]->signed_response.payload;
        }
        if (!settle_with_value(next, it->second, rng_value)) {
            return failed(ReceiptStatus::FailedLogic);
        }
    } else if (const auto* transfer = std::get_if<PriceTransfer>(&tx.action)) {
        if (tx.initiator != transfer->from) {
            return failed(ReceiptStatus::FailedLogic);
        }
        Bytes value;
        if (mode == InteractionMode::TraditionalOracle) {
            auto feed = next.feed_values.find(transfer->feed_uri);
            if (feed == next.feed_values.end()) {
                return failed(ReceiptStatus::FailedLogic);
            }
            value = feed->second;
        } else {
            value = resolved[0]->signed_response.payload;
            next.feed_values[transfer->feed_uri] = value;
        }
        const std::uint64_t amount =
            std::min(feed_amount(value), balance_of(next, transfer->from));
        if (amount > 0) {
            next.balances[transfer->from] -= amount;
            credit(next, transfer->to, amount);
        }
    } else if (const auto* rng = std::get_if<RngInput>(&tx.action)) {
        auto it = next.bets.find(rng->bet_id);
        if (it != next.bets.end() && it->second.status == BetStatus::Placed) {
            if (!settle_with_value(next, it->second, rng->value)) {
                return failed(ReceiptStatus::FailedLogic);
            }
        }
        next.feed_values[bet_feed_key(rng->bet_id)] = rng->value;
    } else if (const auto* feed = std::get_if<FeedInput>(&tx.action)) {
        next.feed_values[feed->feed_uri] = feed->value;
    }

    receipt.status = ReceiptStatus::Applied;
    receipt.state_root_after = state_root(next);
    return ApplyResult{std::move(next), receipt};
}

}  // namespace vex
