#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vex/call.hpp"

namespace vex {

using AccountId = std::string;
using BetId = std::uint64_t;

// Counterparty account for bets: stakes accumulate here and payouts are drawn
// from it. Must be funded in genesis for bets to be winnable.
inline const std::string kHouseAccount = "house";

// Feed key under which a pushed RNG value for a bet is recorded
// (TraditionalOracle mode).
std::string bet_feed_key(BetId bet_id);

// How oracle data reaches contract logic. Traditional: pushed in by trusted
// parties as plain transactions. AllNodesCall: every validating node performs
// the call live. VerifiableExternalCalls: the finalizer attaches signed
// responses that peers verify offline.
enum class InteractionMode : std::uint8_t {
    TraditionalOracle = 0,
    AllNodesCall = 1,
    VerifiableExternalCalls = 2,
};

const char* to_string(InteractionMode m);
std::optional<InteractionMode> interaction_mode_from_string(std::string_view s);

enum class BetStatus : std::uint8_t { Placed = 0, Won = 1, Lost = 2 };

struct Bet {
    AccountId bettor;
    std::uint64_t stake = 0;
    BetStatus status = BetStatus::Placed;

    bool operator==(const Bet&) const = default;
};

struct ContractState {
    std::map<AccountId, std::uint64_t> balances;
    std::map<BetId, Bet> bets;
    std::map<std::string, Bytes> feed_values;

    bool operator==(const ContractState&) const = default;
};

Bytes canonical_encode_state(const ContractState& state);
Hash32 state_root(const ContractState& state);

// Contract actions. PlaceBet escrows the stake with the house; SettleBet
// consumes one fresh RNG value (bet wins iff the first payload byte is even,
// paying out double the stake); PriceTransfer moves the feed value, decoded
// as a big-endian integer and capped at the sender balance. RngInput and
// FeedInput are the plain oracle-push transactions of the traditional flow.
struct Noop {
    bool operator==(const Noop&) const = default;
};

struct PlaceBet {
    std::uint64_t stake = 0;
    bool operator==(const PlaceBet&) const = default;
};

struct SettleBet {
    BetId bet_id = 0;
    std::string rng_uri;
    bool operator==(const SettleBet&) const = default;
};

struct PriceTransfer {
    AccountId from;
    AccountId to;
    std::string feed_uri;
    bool historical = false;  // reuse a recent block's cached response if available
    bool operator==(const PriceTransfer&) const = default;
};

struct RngInput {
    BetId bet_id = 0;
    Bytes value;
    bool operator==(const RngInput&) const = default;
};

struct FeedInput {
    std::string feed_uri;
    Bytes value;
    bool operator==(const FeedInput&) const = default;
};

using Action = std::variant<Noop, PlaceBet, SettleBet, PriceTransfer, RngInput, FeedInput>;

enum class ResolutionMode : std::uint8_t {
    FinalizerResolved = 0,   // the block finalizer performs the calls
    InitiatorResolved = 1,   // the submitter attached the signed results
};

struct Transaction {
    Hash32 tx_id{};
    AccountId initiator;
    std::uint64_t salt = 0;  // submission-side uniquifier folded into tx_id
    Action action;
    ResolutionMode mode = ResolutionMode::FinalizerResolved;
    std::vector<VerifiableExternalCall> initiator_calls;
    std::uint32_t max_calls = 4;

    bool operator==(const Transaction&) const = default;
};

// Full canonical encoding, including attached initiator calls; tx_id is the
// hash of this.
Bytes canonical_encode_transaction(const Transaction& tx);
Hash32 transaction_id(const Transaction& tx);

Transaction make_transaction(AccountId initiator, std::uint64_t salt, Action action,
                             ResolutionMode mode = ResolutionMode::FinalizerResolved,
                             std::vector<VerifiableExternalCall> initiator_calls = {},
                             std::uint32_t max_calls = 4);

Bytes canonical_encode_call(const VerifiableExternalCall& call);

struct CallBudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AlignmentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A declared call site: the request minus any nonce. Fresh sites get their
// nonce drawn when the request is materialized.
struct CallSite {
    std::string uri;
    Bytes payload;
    Freshness freshness = Freshness::CacheableIntraBlock;

    bool operator==(const CallSite&) const = default;
};

CallKey site_key(const CallSite& site);
bool site_matches(const CallSite& site, const ExternalCallRequest& req);

// Deterministic in (tx, state, mode). Throws CallBudgetExceeded when the
// declaration is longer than tx.max_calls.
std::vector<CallSite> declared_call_sites(const Transaction& tx, const ContractState& state,
                                          InteractionMode mode);

ExternalCallRequest materialize_request(const CallSite& site, NonceStream& nonces);

// Spec-shaped convenience: declared sites materialized into concrete
// requests, drawing fresh nonces from the node's stream.
std::vector<ExternalCallRequest> declared_calls(const Transaction& tx, const ContractState& state,
                                                InteractionMode mode, NonceStream& nonces);

enum class ReceiptStatus : std::uint8_t {
    Applied = 0,
    FailedVerification = 1,
    FailedNoResponse = 2,
    FailedLogic = 3,
};

const char* to_string(ReceiptStatus s);

struct Receipt {
    Hash32 tx_id{};
    ReceiptStatus status = ReceiptStatus::Applied;
    std::vector<CallKey> calls_used;
    Hash32 state_root_after{};

    bool operator==(const Receipt&) const = default;
};

Bytes canonical_encode_receipt(const Receipt& receipt);

using ResolvedCalls = std::vector<std::optional<VerifiableExternalCall>>;

struct ApplyResult {
    ContractState state;
    Receipt receipt;
};

// Pure transition: any non-Applied receipt leaves the state unchanged.
// `resolved` aligns positionally with the declared sites; absent entries mean
// no response was received. Fresh calls are verified with fresh_max_age,
// cacheable ones without a staleness bound.
ApplyResult apply_transaction(const ContractState& state, const Transaction& tx,
                              const ResolvedCalls& resolved, std::uint64_t now,
                              std::uint64_t fresh_max_age,
                              InteractionMode mode = InteractionMode::VerifiableExternalCalls);

}  // namespace vex
