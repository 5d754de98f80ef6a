#include "vex/ledger.hpp"

#include <algorithm>
#include <cassert>

namespace vex {

const char* to_string(RejectReason r) {
    switch (r) {
        case RejectReason::None: return "none";
        case RejectReason::BadPow: return "bad_pow";
        case RejectReason::BadSignature: return "bad_signature";
        case RejectReason::ReplayedNonce: return "replayed_nonce";
        case RejectReason::StateMismatch: return "state_mismatch";
        case RejectReason::MalformedCache: return "malformed_cache";
    }
    return "?";
}

Bytes encode_tx_for_partial(const Transaction& tx) {
    Encoder enc;
    enc.raw(tx.tx_id);
    // Call-free header fields; the id above pins any attached call bytes, so
    // a later completion cannot swap transaction content.
    Transaction stripped = tx;
    stripped.initiator_calls.clear();
    enc.length_prefixed(as_view(canonical_encode_transaction(stripped)));
    return enc.take();
}

Hash32 compute_partial_hash(std::uint64_t height, const Hash32& parent_hash,
                            const std::vector<Transaction>& txs) {
    Encoder enc;
    enc.u64be(height);
    enc.raw(parent_hash);
    enc.u32be(static_cast<std::uint32_t>(txs.size()));
    for (const Transaction& tx : txs) {
        enc.length_prefixed(as_view(encode_tx_for_partial(tx)));
    }
    return sha256(enc.take());
}

Bytes serialize_partial(const PartialBlock& partial) {
    Encoder enc;
    enc.u64be(partial.height);
    enc.raw(partial.parent_hash);
    enc.u32be(static_cast<std::uint32_t>(partial.transactions.size()));
    for (const Transaction& tx : partial.transactions) {
        enc.length_prefixed(as_view(encode_tx_for_partial(tx)));
    }
    enc.u64be(partial.nonce_pow);
    enc.raw(partial.partial_hash);
    return enc.take();
}

Hash32 compute_block_hash(const Block& block) {
    Encoder enc;
    enc.raw(block.partial_hash);
    enc.u64be(block.nonce_pow);
    enc.u64be(block.completed_at);
    enc.raw(block.state_root_after);
    enc.u32be(static_cast<std::uint32_t>(block.transactions.size()));
    for (const BlockTx& btx : block.transactions) {
        enc.length_prefixed(as_view(canonical_encode_receipt(btx.receipt)));
        enc.u32be(static_cast<std::uint32_t>(btx.fresh_calls.size()));
        for (const auto& call : btx.fresh_calls) {
            enc.length_prefixed(as_view(canonical_encode_call(call)));
        }
    }
    enc.u32be(static_cast<std::uint32_t>(block.response_cache.entries.size()));
    for (const auto& [key, call] : block.response_cache.entries) {
        enc.raw(key.digest);
        enc.length_prefixed(as_view(canonical_encode_call(call)));
    }
    return sha256(enc.take());
}

bool pow_valid(const Hash32& partial_hash, std::uint64_t nonce_pow, std::uint32_t difficulty_bits) {
    Encoder enc;
    enc.raw(partial_hash);
    enc.u64be(nonce_pow);
    return leading_zero_bits(sha256(enc.take())) >= difficulty_bits;
}

Block make_genesis(const ContractState& genesis_state) {
    Block genesis;
    genesis.height = 0;
    genesis.partial_hash = compute_partial_hash(0, Hash32{}, {});
    genesis.state_root_after = state_root(genesis_state);
    genesis.block_hash = compute_block_hash(genesis);
    return genesis;
}

Chain Chain::with_genesis(ContractState genesis_state) {
    Chain chain;
    chain.blocks.push_back(make_genesis(genesis_state));
    chain.states.push_back(std::move(genesis_state));
    return chain;
}

std::vector<Nonce16> collect_fresh_nonces(const Block& block) {
    std::vector<Nonce16> nonces;
    for (const BlockTx& btx : block.transactions) {
        for (const auto& call : btx.fresh_calls) {
            if (call.request.request_nonce) {
                nonces.push_back(*call.request.request_nonce);
            }
        }
        for (const auto& call : btx.tx.initiator_calls) {
            if (call.request.request_nonce) {
                nonces.push_back(*call.request.request_nonce);
            }
        }
    }
    return nonces;
}

void Chain::append(Block block, ContractState new_tip_state) {
    assert(block.height == height() + 1);
    assert(block.parent_hash == tip().block_hash);
    blocks.push_back(std::move(block));
    states.push_back(std::move(new_tip_state));
}

void Chain::truncate_to(std::uint64_t new_height) {
    assert(new_height <= height());
    blocks.resize(new_height + 1);
    states.resize(new_height + 1);
}

const VerifiableExternalCall* historical_lookup(const std::vector<Block>& blocks,
                                                const CallKey& key, std::uint64_t building_height,
                                                std::uint64_t history_window) {
    if (building_height == 0) {
        return nullptr;
    }
    const std::uint64_t last = std::min<std::uint64_t>(building_height - 1, blocks.size() - 1);
    const std::uint64_t first = building_height > history_window ? building_height - history_window : 0;
    for (std::uint64_t h = last + 1; h-- > first;) {
        auto it = blocks[h].response_cache.entries.find(key);
        if (it != blocks[h].response_cache.entries.end()) {
            return &it->second;
        }
    }
    return nullptr;
}

OracleAccess direct_oracle_access(OracleDirectory& directory, std::uint64_t now) {
    return [&directory, now](const ExternalCallRequest& req) {
        return handle_request(directory, req, now);
    };
}

SitePlan plan_block_sites(const std::vector<Transaction>& txs, const ContractState& state,
                          InteractionMode mode, const ResolutionPolicy& policy) {
    SitePlan plan;
    std::uint64_t block_sites = 0;
    for (const Transaction& tx : txs) {
        TxSitePlan tx_plan;
        try {
            tx_plan.sites = declared_call_sites(tx, state, mode);
        } catch (const CallBudgetExceeded&) {
            tx_plan.budget_ok = false;
            tx_plan.sites.clear();
        }
        if (tx_plan.budget_ok && block_sites + tx_plan.sites.size() > policy.block_call_cap) {
            tx_plan.budget_ok = false;
            tx_plan.sites.clear();
        }
        if (tx_plan.budget_ok) {
            block_sites += tx_plan.sites.size();
        }
        plan.txs.push_back(std::move(tx_plan));
    }
    return plan;
}

std::vector<std::vector<ExternalCallRequest>> materialize_block_requests(
    const std::vector<Transaction>& txs, const SitePlan& plan, NonceStream& nonces) {
    std::vector<std::vector<ExternalCallRequest>> requests(txs.size());
    for (std::size_t i = 0; i < txs.size(); ++i) {
        if (!plan.txs[i].budget_ok || txs[i].mode == ResolutionMode::InitiatorResolved) {
            continue;
        }
        for (const CallSite& site : plan.txs[i].sites) {
            requests[i].push_back(materialize_request(site, nonces));
        }
    }
    return requests;
}

namespace {

std::optional<VerifiableExternalCall> verified_live_call(
    const ExternalCallRequest& req, const OracleAccess& oracle_access,
    const std::map<std::string, PublicKey>& registry, std::uint64_t now, std::uint64_t max_age) {
    auto key_it = registry.find(req.endpoint_uri);
    if (key_it == registry.end()) {
        return std::nullopt;  // no trusted key configured for this endpoint
    }
    auto response = oracle_access(req);
    if (!response) {
        return std::nullopt;
    }
    VerifiableExternalCall call{req, key_it->second, std::move(*response)};
    if (verify_external_call(call, now, max_age) != VerificationResult::Ok) {
        return std::nullopt;  // unverifiable responses are treated as failures
    }
    return call;
}

}  // namespace

ResolveResult resolve_calls(const std::vector<Transaction>& txs, const SitePlan& plan,
                            const std::vector<std::vector<ExternalCallRequest>>& requests,
                            ResponseCache cache, const Chain& chain, std::uint64_t building_height,
                            const OracleAccess& oracle_access,
                            const std::map<std::string, PublicKey>& registry,
                            const ResolutionPolicy& policy, std::uint64_t now) {
    ResolveResult result;
    result.per_tx.resize(txs.size());

    for (std::size_t i = 0; i < txs.size(); ++i) {
        const TxSitePlan& tx_plan = plan.txs[i];
        if (!tx_plan.budget_ok) {
            continue;  // transaction will fail on budget, nothing to resolve
        }
        ResolvedCalls& slots = result.per_tx[i];
        if (txs[i].mode == ResolutionMode::InitiatorResolved) {
            // The submitter already performed these; consume positionally.
            for (std::size_t j = 0; j < tx_plan.sites.size(); ++j) {
                if (j < txs[i].initiator_calls.size()) {
                    slots.emplace_back(txs[i].initiator_calls[j]);
                } else {
                    slots.emplace_back(std::nullopt);
                }
            }
            continue;
        }
        for (std::size_t j = 0; j < tx_plan.sites.size(); ++j) {
            const CallSite& site = tx_plan.sites[j];
            const ExternalCallRequest& req = requests[i][j];
            if (site.freshness == Freshness::Fresh) {
                slots.emplace_back(
                    verified_live_call(req, oracle_access, registry, now, policy.fresh_max_age));
                continue;
            }
            const CallKey key = call_key(req);
            auto cached = cache.entries.find(key);
            if (cached != cache.entries.end() &&
                verify_external_call(cached->second, now, kNoMaxAge) == VerificationResult::Ok) {
                slots.emplace_back(cached->second);
                ++result.cache_hits;
                continue;
            }
            if (site.freshness == Freshness::CacheableHistorical) {
                const VerifiableExternalCall* prior =
                    historical_lookup(chain.blocks, key, building_height, policy.history_window);
                if (prior != nullptr &&
                    verify_external_call(*prior, now, kNoMaxAge) == VerificationResult::Ok) {
                    slots.emplace_back(*prior);
                    ++result.cache_hits;
                    continue;
                }
            }
            auto live = verified_live_call(req, oracle_access, registry, now, kNoMaxAge);
            if (live) {
                cache.entries.emplace(key, *live);
            }
            slots.emplace_back(std::move(live));
        }
    }
    result.cache = std::move(cache);
    return result;
}

ResolveResult resolve_calls(const std::vector<Transaction>& txs, const ContractState& state,
                            ResponseCache cache, const Chain& chain,
                            const OracleAccess& oracle_access,
                            const std::map<std::string, PublicKey>& registry,
                            const ResolutionPolicy& policy, InteractionMode mode,
                            NonceStream& nonces, std::uint64_t building_height, std::uint64_t now) {
    const SitePlan plan = plan_block_sites(txs, state, mode, policy);
    const auto requests = materialize_block_requests(txs, plan, nonces);
    return resolve_calls(txs, plan, requests, std::move(cache), chain, building_height,
                         oracle_access, registry, policy, now);
}

std::vector<ExternalCallRequest> live_requests_for(
    const std::vector<Transaction>& txs, const SitePlan& plan,
    const std::vector<std::vector<ExternalCallRequest>>& requests, const Chain& chain,
    std::uint64_t building_height, const ResolutionPolicy& policy) {
    std::vector<ExternalCallRequest> live;
    std::set<CallKey> queued;
    for (std::size_t i = 0; i < txs.size(); ++i) {
        const TxSitePlan& tx_plan = plan.txs[i];
        if (!tx_plan.budget_ok || txs[i].mode == ResolutionMode::InitiatorResolved) {
            continue;
        }
        for (std::size_t j = 0; j < tx_plan.sites.size(); ++j) {
            const CallSite& site = tx_plan.sites[j];
            const ExternalCallRequest& req = requests[i][j];
            if (site.freshness == Freshness::Fresh) {
                live.push_back(req);
                continue;
            }
            const CallKey key = call_key(req);
            if (queued.count(key) > 0) {
                continue;
            }
            if (site.freshness == Freshness::CacheableHistorical &&
                historical_lookup(chain.blocks, key, building_height, policy.history_window) !=
                    nullptr) {
                continue;
            }
            queued.insert(key);
            live.push_back(req);
        }
    }
    return live;
}

ExecutionOutcome execute_transactions(const std::vector<Transaction>& txs, const SitePlan& plan,
                                      const std::vector<ResolvedCalls>& per_tx,
                                      const ContractState& pre_state, std::uint64_t now,
                                      const ResolutionPolicy& policy, InteractionMode mode) {
    ExecutionOutcome outcome;
    outcome.state = pre_state;
    outcome.fresh_calls.resize(txs.size());
    for (std::size_t i = 0; i < txs.size(); ++i) {
        if (!plan.txs[i].budget_ok) {
            Receipt receipt;
            receipt.tx_id = txs[i].tx_id;
            receipt.status = ReceiptStatus::FailedLogic;
            receipt.state_root_after = state_root(outcome.state);
            outcome.receipts.push_back(std::move(receipt));
            continue;
        }
        ApplyResult applied =
            apply_transaction(outcome.state, txs[i], per_tx[i], now, policy.fresh_max_age, mode);
        if (txs[i].mode == ResolutionMode::FinalizerResolved) {
            for (std::size_t j = 0; j < plan.txs[i].sites.size(); ++j) {
                if (plan.txs[i].sites[j].freshness == Freshness::Fresh && per_tx[i][j]) {
                    outcome.fresh_calls[i].push_back(*per_tx[i][j]);
                }
            }
        }
        outcome.state = std::move(applied.state);
        outcome.receipts.push_back(std::move(applied.receipt));
    }
    return outcome;
}

PartialBlock build_partial_block(const Chain& chain, std::vector<Transaction> pending,
                                 std::uint32_t difficulty, std::uint64_t nonce_start) {
    PartialBlock partial;
    partial.height = chain.height() + 1;
    partial.parent_hash = chain.tip().block_hash;
    partial.transactions = std::move(pending);
    partial.partial_hash =
        compute_partial_hash(partial.height, partial.parent_hash, partial.transactions);
    std::uint64_t nonce = nonce_start;
    while (!pow_valid(partial.partial_hash, nonce, difficulty)) {
        ++nonce;
        if (nonce - nonce_start > (1ull << 34)) {
            throw std::runtime_error("proof-of-work search exhausted; difficulty too high");
        }
    }
    partial.nonce_pow = nonce;
    return partial;
}

CompletedBlock assemble_block(const Chain& chain, const PartialBlock& partial, InteractionMode mode,
                              const SitePlan& plan, const std::vector<ResolvedCalls>& per_tx,
                              ResponseCache cache, const ResolutionPolicy& policy,
                              std::uint64_t now, std::uint64_t cache_hits) {
    ExecutionOutcome outcome = execute_transactions(partial.transactions, plan, per_tx,
                                                    chain.tip_state(), now, policy, mode);

    CompletedBlock completed;
    completed.cache_hits = cache_hits;
    Block& block = completed.block;
    block.height = partial.height;
    block.parent_hash = partial.parent_hash;
    block.nonce_pow = partial.nonce_pow;
    block.partial_hash = partial.partial_hash;
    block.completed_at = now;
    block.state_root_after = state_root(outcome.state);
    for (std::size_t i = 0; i < partial.transactions.size(); ++i) {
        BlockTx btx;
        btx.tx = partial.transactions[i];
        btx.receipt = outcome.receipts[i];
        btx.fresh_calls = std::move(outcome.fresh_calls[i]);
        block.transactions.push_back(std::move(btx));
    }
    if (mode == InteractionMode::VerifiableExternalCalls) {
        block.response_cache = std::move(cache);
    } else {
        // Comparison modes store no call evidence: traditional blocks have
        // none, all-nodes-call blocks expect peers to re-call.
        for (BlockTx& btx : block.transactions) {
            btx.fresh_calls.clear();
        }
    }
    block.block_hash = compute_block_hash(block);
    completed.post_state = std::move(outcome.state);
    return completed;
}

CompletedBlock complete_block(const Chain& chain, const PartialBlock& partial, InteractionMode mode,
                              const OracleAccess& oracle_access,
                              const std::map<std::string, PublicKey>& registry,
                              const ResolutionPolicy& policy, NonceStream& nonces,
                              std::uint64_t now) {
    const SitePlan plan = plan_block_sites(partial.transactions, chain.tip_state(), mode, policy);
    const auto requests = materialize_block_requests(partial.transactions, plan, nonces);
    ResolveResult resolved =
        resolve_calls(partial.transactions, plan, requests, ResponseCache{}, chain, partial.height,
                      oracle_access, registry, policy, now);
    return assemble_block(chain, partial, mode, plan, resolved.per_tx, std::move(resolved.cache),
                          policy, now, resolved.cache_hits);
}

namespace {

ValidationOutcome reject(RejectReason reason, std::string detail) {
    ValidationOutcome outcome;
    outcome.accepted = false;
    outcome.reason = reason;
    outcome.detail = std::move(detail);
    return outcome;
}

// Checks shared by every mode: linkage, transaction integrity and the
// proof-of-work over the partial commitment.
std::optional<ValidationOutcome> check_commitment(const Chain& chain, std::uint64_t parent_height,
                                                  const Block& block, std::uint32_t difficulty) {
    if (parent_height >= chain.blocks.size()) {
        return reject(RejectReason::StateMismatch, "parent height unknown");
    }
    const Block& parent = chain.blocks[parent_height];
    if (block.height != parent.height + 1 || block.parent_hash != parent.block_hash) {
        return reject(RejectReason::StateMismatch, "block does not extend the given parent");
    }
    std::vector<Transaction> txs;
    for (const BlockTx& btx : block.transactions) {
        if (transaction_id(btx.tx) != btx.tx.tx_id) {
            return reject(RejectReason::BadPow, "transaction id does not match content");
        }
        txs.push_back(btx.tx);
    }
    if (compute_partial_hash(block.height, block.parent_hash, txs) != block.partial_hash) {
        return reject(RejectReason::BadPow, "partial hash does not match");
    }
    if (!pow_valid(block.partial_hash, block.nonce_pow, difficulty)) {
        return reject(RejectReason::BadPow, "proof of work below difficulty");
    }
    return std::nullopt;
}

ValidationOutcome compare_execution(const Block& block, ExecutionOutcome outcome) {
    if (outcome.receipts.size() != block.transactions.size()) {
        return reject(RejectReason::StateMismatch, "receipt count mismatch");
    }
    for (std::size_t i = 0; i < outcome.receipts.size(); ++i) {
        if (!(outcome.receipts[i] == block.transactions[i].receipt)) {
            return reject(RejectReason::StateMismatch,
                          "receipt mismatch at transaction " + std::to_string(i));
        }
    }
    if (state_root(outcome.state) != block.state_root_after) {
        return reject(RejectReason::StateMismatch, "state root mismatch");
    }
    ValidationOutcome ok;
    ok.accepted = true;
    ok.resulting_state = std::move(outcome.state);
    return ok;
}

std::vector<Transaction> block_transactions(const Block& block) {
    std::vector<Transaction> txs;
    txs.reserve(block.transactions.size());
    for (const BlockTx& btx : block.transactions) {
        txs.push_back(btx.tx);
    }
    return txs;
}

}  // namespace

ValidationOutcome validate_block(const Chain& chain, std::uint64_t parent_height,
                                 const Block& block,
                                 const std::map<std::string, PublicKey>& registry,
                                 const ResolutionPolicy& policy, std::uint32_t difficulty) {
    if (auto rejected = check_commitment(chain, parent_height, block, difficulty)) {
        return *rejected;
    }

    // Replay protection: no fresh nonce may repeat, within this block or
    // against any ancestor block.
    std::set<Nonce16> seen;
    for (std::uint64_t h = 0; h <= parent_height; ++h) {
        for (const Nonce16& nonce : collect_fresh_nonces(chain.blocks[h])) {
            seen.insert(nonce);
        }
    }
    for (const Nonce16& nonce : collect_fresh_nonces(block)) {
        if (!seen.insert(nonce).second) {
            return reject(RejectReason::ReplayedNonce, "fresh nonce seen before");
        }
    }

    // Every stored call must be duly signed by the configured trusted key.
    auto check_stored = [&](const VerifiableExternalCall& call,
                            std::uint64_t max_age) -> std::optional<ValidationOutcome> {
        auto key_it = registry.find(call.request.endpoint_uri);
        if (key_it == registry.end()) {
            return reject(RejectReason::BadSignature,
                          "no trusted key for " + call.request.endpoint_uri);
        }
        if (!(call.public_key == key_it->second)) {
            return reject(RejectReason::BadSignature, "stored key is not the trusted key");
        }
        const VerificationResult vr = verify_external_call(call, block.completed_at, max_age);
        if (vr != VerificationResult::Ok) {
            return reject(RejectReason::BadSignature, std::string("stored call: ") + to_string(vr));
        }
        return std::nullopt;
    };

    for (const BlockTx& btx : block.transactions) {
        for (const auto& call : btx.fresh_calls) {
            if (call.request.freshness != Freshness::Fresh || !call.request.nonce_rule_ok()) {
                return reject(RejectReason::MalformedCache, "non-fresh call stored per transaction");
            }
            if (auto rejected = check_stored(call, policy.fresh_max_age)) {
                return *rejected;
            }
        }
    }
    for (const auto& [key, call] : block.response_cache.entries) {
        if (call.request.freshness == Freshness::Fresh || !call.request.nonce_rule_ok()) {
            return reject(RejectReason::MalformedCache, "fresh or nonce-bearing call in cache");
        }
        if (!(call_key(call.request) == key)) {
            return reject(RejectReason::MalformedCache, "cache key does not match entry");
        }
        if (auto rejected = check_stored(call, kNoMaxAge)) {
            return *rejected;
        }
    }

    // Re-execute from stored evidence only, then require exact agreement.
    const std::vector<Transaction> txs = block_transactions(block);
    const ContractState& pre_state = chain.states[parent_height];
    const SitePlan plan =
        plan_block_sites(txs, pre_state, InteractionMode::VerifiableExternalCalls, policy);

    std::vector<ResolvedCalls> per_tx(txs.size());
    for (std::size_t i = 0; i < txs.size(); ++i) {
        const TxSitePlan& tx_plan = plan.txs[i];
        if (!tx_plan.budget_ok) {
            if (!block.transactions[i].fresh_calls.empty()) {
                return reject(RejectReason::MalformedCache,
                              "stored calls for an over-budget transaction");
            }
            continue;
        }
        if (txs[i].mode == ResolutionMode::InitiatorResolved) {
            if (!block.transactions[i].fresh_calls.empty()) {
                return reject(RejectReason::MalformedCache,
                              "stored calls for an initiator-resolved transaction");
            }
            for (std::size_t j = 0; j < tx_plan.sites.size(); ++j) {
                if (j < txs[i].initiator_calls.size()) {
                    per_tx[i].emplace_back(txs[i].initiator_calls[j]);
                } else {
                    per_tx[i].emplace_back(std::nullopt);
                }
            }
            continue;
        }
        const auto& stored = block.transactions[i].fresh_calls;
        std::size_t cursor = 0;
        for (std::size_t j = 0; j < tx_plan.sites.size(); ++j) {
            const CallSite& site = tx_plan.sites[j];
            if (site.freshness == Freshness::Fresh) {
                if (cursor < stored.size() && site_matches(site, stored[cursor].request)) {
                    per_tx[i].emplace_back(stored[cursor]);
                    ++cursor;
                } else {
                    per_tx[i].emplace_back(std::nullopt);
                }
                continue;
            }
            const CallKey key = site_key(site);
            auto cached = block.response_cache.entries.find(key);
            if (cached != block.response_cache.entries.end()) {
                per_tx[i].emplace_back(cached->second);
                continue;
            }
            if (site.freshness == Freshness::CacheableHistorical) {
                const VerifiableExternalCall* prior =
                    historical_lookup(chain.blocks, key, block.height, policy.history_window);
                if (prior != nullptr) {
                    per_tx[i].emplace_back(*prior);
                    continue;
                }
            }
            per_tx[i].emplace_back(std::nullopt);
        }
        if (cursor != stored.size()) {
            return reject(RejectReason::MalformedCache, "stored call not referenced by any site");
        }
    }

    ExecutionOutcome outcome =
        execute_transactions(txs, plan, per_tx, pre_state, block.completed_at, policy,
                             InteractionMode::VerifiableExternalCalls);
    return compare_execution(block, std::move(outcome));
}

ValidationOutcome validate_block_traditional(const Chain& chain, std::uint64_t parent_height,
                                             const Block& block, const ResolutionPolicy& policy,
                                             std::uint32_t difficulty) {
    if (auto rejected = check_commitment(chain, parent_height, block, difficulty)) {
        return *rejected;
    }
    if (!block.response_cache.entries.empty()) {
        return reject(RejectReason::MalformedCache, "traditional block carries a response cache");
    }
    const std::vector<Transaction> txs = block_transactions(block);
    const ContractState& pre_state = chain.states[parent_height];
    const SitePlan plan =
        plan_block_sites(txs, pre_state, InteractionMode::TraditionalOracle, policy);
    std::vector<ResolvedCalls> per_tx(txs.size());
    ExecutionOutcome outcome = execute_transactions(
        txs, plan, per_tx, pre_state, block.completed_at, policy, InteractionMode::TraditionalOracle);
    return compare_execution(block, std::move(outcome));
}

ValidationOutcome validate_block_all_nodes(const Chain& chain, std::uint64_t parent_height,
                                           const Block& block, const OracleAccess& oracle_access,
                                           const std::map<std::string, PublicKey>& registry,
                                           const ResolutionPolicy& policy,
                                           std::uint32_t difficulty, NonceStream& nonces) {
    if (auto rejected = check_commitment(chain, parent_height, block, difficulty)) {
        return *rejected;
    }
    const std::vector<Transaction> txs = block_transactions(block);
    const ContractState& pre_state = chain.states[parent_height];
    // Every validating node repeats the external calls itself and accepts
    // only if its own results reproduce the block exactly.
    ResolveResult resolved =
        resolve_calls(txs, pre_state, ResponseCache{}, chain, oracle_access, registry, policy,
                      InteractionMode::AllNodesCall, nonces, block.height, block.completed_at);
    const SitePlan plan = plan_block_sites(txs, pre_state, InteractionMode::AllNodesCall, policy);
    ExecutionOutcome outcome =
        execute_transactions(txs, plan, resolved.per_tx, pre_state, block.completed_at, policy,
                             InteractionMode::AllNodesCall);
    // Receipt call keys still agree across nodes: cache identity excludes
    // nonces, so a node's own fresh request carries the finalizer's key.
    return compare_execution(block, std::move(outcome));
}

}  // namespace vex
