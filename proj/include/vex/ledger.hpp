#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vex/contract.hpp"
#include "vex/oracle.hpp"

namespace vex {

// Shared per-block store of verified cacheable calls. Fresh calls never
// appear here; they are stored per transaction.
struct ResponseCache {
    std::map<CallKey, VerifiableExternalCall> entries;

    bool operator==(const ResponseCache&) const = default;
};

// First-phase block: everything committed under proof-of-work, which is
// everything except call results, receipts, cache and resulting state.
struct PartialBlock {
    std::uint64_t height = 0;
    Hash32 parent_hash{};
    std::vector<Transaction> transactions;
    std::uint64_t nonce_pow = 0;
    Hash32 partial_hash{};

    bool operator==(const PartialBlock&) const = default;
};

struct BlockTx {
    Transaction tx;
    Receipt receipt;
    std::vector<VerifiableExternalCall> fresh_calls;  // finalizer-resolved fresh results

    bool operator==(const BlockTx&) const = default;
};

struct Block {
    std::uint64_t height = 0;
    Hash32 parent_hash{};
    std::uint64_t nonce_pow = 0;
    Hash32 partial_hash{};
    std::uint64_t completed_at = 0;
    Hash32 state_root_after{};
    std::vector<BlockTx> transactions;
    ResponseCache response_cache;
    Hash32 block_hash{};

    bool operator==(const Block&) const = default;
};

struct ResolutionPolicy {
    std::uint64_t fresh_max_age = 100000;  // ticks a fresh response stays acceptable
    std::uint64_t history_window = 2;      // how many blocks back historical reuse may reach
    std::uint32_t block_call_cap = 64;     // total declared call sites per block

    bool operator==(const ResolutionPolicy&) const = default;
};

// Transaction encoding as committed by the partial block: the call-free
// header fields plus the tx id (which itself pins any attached calls).
Bytes encode_tx_for_partial(const Transaction& tx);
Bytes serialize_partial(const PartialBlock& partial);

Hash32 compute_partial_hash(std::uint64_t height, const Hash32& parent_hash,
                            const std::vector<Transaction>& txs);
Hash32 compute_block_hash(const Block& block);

bool pow_valid(const Hash32& partial_hash, std::uint64_t nonce_pow, std::uint32_t difficulty_bits);

struct Chain {
    std::vector<Block> blocks;         // blocks[h] has height h; blocks[0] is genesis
    std::vector<ContractState> states; // post-state per height; states[0] is genesis state

    static Chain with_genesis(ContractState genesis_state);

    const Block& tip() const { return blocks.back(); }
    std::uint64_t height() const { return tip().height; }
    const ContractState& tip_state() const { return states.back(); }

    void append(Block block, ContractState new_tip_state);
    void truncate_to(std::uint64_t height);
};

Block make_genesis(const ContractState& genesis_state);

// All fresh request nonces carried by a block (per-tx stored calls plus
// initiator-attached calls).
std::vector<Nonce16> collect_fresh_nonces(const Block& block);

// Cached response for `key` from a prior block, usable when the holding
// block is at most `history_window` behind the block being built. Most
// recent holder wins.
const VerifiableExternalCall* historical_lookup(const std::vector<Block>& blocks,
                                                const CallKey& key, std::uint64_t building_height,
                                                std::uint64_t history_window);

// Finalizer's live channel to the external world. Absent result models a
// failed call.
using OracleAccess = std::function<std::optional<SignedResponse>(const ExternalCallRequest&)>;

OracleAccess direct_oracle_access(OracleDirectory& directory, std::uint64_t now);

// Declared call sites for a whole block against the pre-block state, with
// per-transaction and block-level budgets applied. Deterministic; shared by
// the finalizer and every validator.
struct TxSitePlan {
    bool budget_ok = true;
    std::vector<CallSite> sites;
};

struct SitePlan {
    std::vector<TxSitePlan> txs;
};

SitePlan plan_block_sites(const std::vector<Transaction>& txs, const ContractState& state,
                          InteractionMode mode, const ResolutionPolicy& policy);

// Concrete requests for finalizer-resolved transactions, fresh nonces drawn
// once. Initiator-resolved transactions keep their attached requests.
std::vector<std::vector<ExternalCallRequest>> materialize_block_requests(
    const std::vector<Transaction>& txs, const SitePlan& plan, NonceStream& nonces);

struct ResolveResult {
    std::vector<ResolvedCalls> per_tx;
    ResponseCache cache;
    std::uint64_t cache_hits = 0;
};

// Resolves every declared call in transaction order: fresh sites invoke
// live, cacheable sites are served from the cache (then, for historical
// sites, from recent blocks' caches) before invoking. Live responses are
// verified against the trusted key registry before use; failures surface as
// absent entries, never as raised errors.
ResolveResult resolve_calls(const std::vector<Transaction>& txs, const SitePlan& plan,
                            const std::vector<std::vector<ExternalCallRequest>>& requests,
                            ResponseCache cache, const Chain& chain, std::uint64_t building_height,
                            const OracleAccess& oracle_access,
                            const std::map<std::string, PublicKey>& registry,
                            const ResolutionPolicy& policy, std::uint64_t now);

// Spec-shaped convenience overload: plans, materializes and resolves.
ResolveResult resolve_calls(const std::vector<Transaction>& txs, const ContractState& state,
                            ResponseCache cache, const Chain& chain,
                            const OracleAccess& oracle_access,
                            const std::map<std::string, PublicKey>& registry,
                            const ResolutionPolicy& policy, InteractionMode mode,
                            NonceStream& nonces, std::uint64_t building_height, std::uint64_t now);

// The requests the finalizer must invoke live for this block, deduplicated
// (cacheable sites that will be served once and then hit the cache appear a
// single time). Order is deterministic.
std::vector<ExternalCallRequest> live_requests_for(
    const std::vector<Transaction>& txs, const SitePlan& plan,
    const std::vector<std::vector<ExternalCallRequest>>& requests, const Chain& chain,
    std::uint64_t building_height, const ResolutionPolicy& policy);

struct ExecutionOutcome {
    std::vector<Receipt> receipts;
    std::vector<std::vector<VerifiableExternalCall>> fresh_calls;
    ContractState state;
};

ExecutionOutcome execute_transactions(const std::vector<Transaction>& txs, const SitePlan& plan,
                                      const std::vector<ResolvedCalls>& per_tx,
                                      const ContractState& pre_state, std::uint64_t now,
                                      const ResolutionPolicy& policy, InteractionMode mode);

PartialBlock build_partial_block(const Chain& chain, std::vector<Transaction> pending,
                                 std::uint32_t difficulty, std::uint64_t nonce_start = 0);

struct CompletedBlock {
    Block block;
    ContractState post_state;
    std::uint64_t cache_hits = 0;
};

// Second phase: performs the external calls through `oracle_access`, executes
// every transaction and fills receipts, per-tx calls, cache and resulting
// state root. Call failures surface in receipts.
CompletedBlock complete_block(const Chain& chain, const PartialBlock& partial, InteractionMode mode,
                              const OracleAccess& oracle_access,
                              const std::map<std::string, PublicKey>& registry,
                              const ResolutionPolicy& policy, NonceStream& nonces,
                              std::uint64_t now);

// Assembly from already-resolved calls (the asynchronous completion path).
CompletedBlock assemble_block(const Chain& chain, const PartialBlock& partial, InteractionMode mode,
                              const SitePlan& plan, const std::vector<ResolvedCalls>& per_tx,
                              ResponseCache cache, const ResolutionPolicy& policy,
                              std::uint64_t now, std::uint64_t cache_hits = 0);

enum class RejectReason : std::uint8_t {
    None = 0,
    BadPow,
    BadSignature,
    ReplayedNonce,
    StateMismatch,
    MalformedCache,
};

const char* to_string(RejectReason r);

struct ValidationOutcome {
    bool accepted = false;
    RejectReason reason = RejectReason::None;
    std::string detail;
    ContractState resulting_state;  // filled when accepted
};

// Peer-side acceptance check: proof of work over the partial commitment,
// signature checks of every stored call against the configured public key
// for its URI, replay protection for fresh nonces, and full deterministic
// re-execution from the stored calls alone. Performs no oracle invocations.
// The block must extend chain.blocks[parent_height].
ValidationOutcome validate_block(const Chain& chain, std::uint64_t parent_height,
                                 const Block& block,
                                 const std::map<std::string, PublicKey>& registry,
                                 const ResolutionPolicy& policy, std::uint32_t difficulty);

// Comparison-mode acceptance checks. TraditionalOracle re-executes plain
// transactions; AllNodesCall re-executes by performing every declared call
// live through `oracle_access` (the baseline where each validating node
// undertakes the external call itself).
ValidationOutcome validate_block_traditional(const Chain& chain, std::uint64_t parent_height,
                                             const Block& block, const ResolutionPolicy& policy,
                                             std::uint32_t difficulty);
ValidationOutcome validate_block_all_nodes(const Chain& chain, std::uint64_t parent_height,
                                           const Block& block, const OracleAccess& oracle_access,
                                           const std::map<std::string, PublicKey>& registry,
                                           const ResolutionPolicy& policy,
                                           std::uint32_t difficulty, NonceStream& nonces);

}  // namespace vex
