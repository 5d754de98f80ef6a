#include "vex/sim.hpp"

#include <algorithm>
#include <cassert>
#include <cinttypes>
#include <cstdio>

namespace vex {

namespace {

std::uint64_t derive_seed(std::string_view domain, std::uint64_t global_seed, std::uint64_t id) {
    Encoder enc;
    enc.length_prefixed(domain);
    enc.u64be(global_seed);
    enc.u64be(id);
    const Hash32 digest = sha256(enc.take());
    return read_u64be(ByteView{digest.data(), 8});
}

std::string entity_name(std::int32_t id) {
    if (id == kOracleEntity) return "oracle";
    if (id == kScriptEntity) return "script";
    if (id == kAgentEntity) return "agent";
    return "node" + std::to_string(id);
}

std::string hex_u64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
    return buf;
}

std::set<Hash32> block_tx_ids(const Block& block) {
    std::set<Hash32> ids;
    for (const BlockTx& btx : block.transactions) {
        ids.insert(btx.tx.tx_id);
    }
    return ids;
}

}  // namespace

Node::Node(std::uint32_t node_id, ContractState genesis, std::uint64_t global_seed)
    : id(node_id),
      chain(Chain::with_genesis(std::move(genesis))),
      nonces("node-nonce", global_seed, node_id),
      pow_rng(derive_seed("pow-rng", global_seed, node_id)) {}

World::World(NetworkConfig cfg, InteractionMode mode, ResolutionPolicy policy,
             OracleDirectory oracles, ContractState genesis_state)
    : cfg_(cfg),
      mode_(mode),
      policy_(policy),
      oracles_(std::move(oracles)),
      drop_rng_(derive_seed("drop-rng", cfg.global_seed, 0)) {
    registry_ = public_keys(oracles_);
    if (cfg_.drop_probability >= 1.0) {
        drop_threshold_ = UINT64_MAX;
    } else if (cfg_.drop_probability > 0.0) {
        drop_threshold_ = static_cast<std::uint64_t>(cfg_.drop_probability *
                                                     18446744073709551616.0 /* 2^64 */);
    }
    nodes_.reserve(cfg_.node_count);
    for (std::uint32_t i = 0; i < cfg_.node_count; ++i) {
        nodes_.emplace_back(i, genesis_state, cfg_.global_seed);
        schedule_mining(nodes_.back());
    }
    if (mode_ == InteractionMode::TraditionalOracle) {
        // traditional push-based feeds: the trusted party publishes every
        // constant feed value up front
        for (const auto& [uri, ep] : oracles_.entries) {
            if (std::holds_alternative<ConstantValue>(ep.behavior)) {
                schedule(0, kAgentEntity, kAgentEntity, AgentFeedObserve{uri});
            }
        }
    }
}

void World::schedule(std::uint64_t delay, std::int32_t src, std::int32_t dst, Message message) {
    SimEvent ev;
    ev.deliver_at = now_ + delay;
    ev.seq = seq_++;
    ev.src = src;
    ev.dst = dst;
    ev.message = std::move(message);
    queue_.emplace(std::make_pair(ev.deliver_at, ev.seq), std::move(ev));
}

bool World::link_drops() {
    if (drop_threshold_ == 0) {
        return false;
    }
    if (drop_threshold_ == UINT64_MAX) {
        return true;
    }
    return drop_rng_() < drop_threshold_;
}

void World::broadcast_from(std::uint32_t src_node, const Message& message) {
    for (std::uint32_t dst = 0; dst < nodes_.size(); ++dst) {
        if (dst == src_node) {
            continue;
        }
        if (link_drops()) {
            continue;
        }
        schedule(cfg_.link_latency, static_cast<std::int32_t>(src_node),
                 static_cast<std::int32_t>(dst), message);
    }
}

void World::schedule_mining(Node& node) {
    if (node.crashed || node.phase != NodePhase::Mining || node.mine_scheduled) {
        return;
    }
    node.mine_scheduled = true;
    schedule(1, static_cast<std::int32_t>(node.id), static_cast<std::int32_t>(node.id),
             MineTick{});
}

void World::submit_at(std::uint64_t tick, const Transaction& tx) {
    assert(tick >= now_);
    const std::uint64_t delay = tick - now_;
    for (std::uint32_t dst = 0; dst < nodes_.size(); ++dst) {
        schedule(delay, kScriptEntity, static_cast<std::int32_t>(dst), SubmitTx{tx});
    }
}

void World::trace_event(const SimEvent& ev) {
    std::string kind;
    std::string digest;
    if (const auto* submit = std::get_if<SubmitTx>(&ev.message)) {
        kind = "submit_tx";
        digest = short_digest(submit->tx.tx_id);
    } else if (const auto* partial = std::get_if<PartialBlockMsg>(&ev.message)) {
        kind = "partial";
        digest = short_digest(partial->partial.partial_hash);
    } else if (const auto* completion = std::get_if<CompletionMsg>(&ev.message)) {
        kind = "completion";
        digest = short_digest(completion->block.block_hash);
    } else if (const auto* req = std::get_if<OracleRequest>(&ev.message)) {
        kind = "oracle_request";
        digest = short_digest(sha256(canonical_encode_request(req->request, true)));
    } else if (const auto* reply = std::get_if<OracleReply>(&ev.message)) {
        kind = "oracle_reply";
        digest = reply->response
                     ? short_digest(sha256(canonical_encode_response(
                           reply->response->payload, reply->response->response_nonce,
                           reply->response->responder_timestamp)))
                     : "none";
    } else if (const auto* timeout = std::get_if<CompletionTimeout>(&ev.message)) {
        kind = "completion_timeout";
        digest = short_digest(timeout->partial_hash);
    } else if (const auto* rng = std::get_if<AgentRngObserve>(&ev.message)) {
        kind = "agent_rng";
        digest = hex_u64(rng->bet_id);
    } else if (const auto* feed = std::get_if<AgentFeedObserve>(&ev.message)) {
        kind = "agent_feed";
        digest = short_digest(sha256(to_bytes(feed->uri)));
    } else {
        return;  // mining ticks are internal, not message traffic
    }
    trace_.push_back(std::to_string(ev.deliver_at) + " " + entity_name(ev.src) + " " +
                     entity_name(ev.dst) + " " + kind + " " + digest);
}

bool World::step() {
    if (queue_.empty()) {
        return false;
    }
    auto it = queue_.begin();
    SimEvent ev = std::move(it->second);
    queue_.erase(it);
    assert(ev.deliver_at >= now_);
    now_ = ev.deliver_at;
    trace_event(ev);
    dispatch(ev);
    return true;
}

void World::run_until_height(std::uint64_t height, std::uint64_t max_ticks) {
    const std::uint64_t deadline = now_ + max_ticks;
    while (!all_heights_at_least(height) && !queue_.empty() &&
           queue_.begin()->second.deliver_at <= deadline) {
        step();
    }
}

void World::run_until_tick(std::uint64_t tick) {
    while (!queue_.empty() && queue_.begin()->second.deliver_at <= tick) {
        step();
    }
    now_ = std::max(now_, tick);
}

bool World::all_heights_at_least(std::uint64_t height) const {
    for (const Node& node : nodes_) {
        if (!node.crashed && node.chain.height() < height) {
            return false;
        }
    }
    return true;
}

bool World::tips_consistent() const {
    std::map<Hash32, Hash32> roots;
    for (const Node& node : nodes_) {
        if (node.crashed) {
            continue;
        }
        const Hash32 tip = node.chain.tip().block_hash;
        const Hash32 root = state_root(node.chain.tip_state());
        auto [it, inserted] = roots.emplace(tip, root);
        if (!inserted && it->second != root) {
            return false;
        }
    }
    return true;
}

void World::dispatch(const SimEvent& ev) {
    if (ev.dst == kOracleEntity) {
        on_oracle_request(ev);
        return;
    }
    if (ev.dst == kAgentEntity) {
        if (const auto* rng = std::get_if<AgentRngObserve>(&ev.message)) {
            on_agent_rng(*rng);
        } else if (const auto* feed = std::get_if<AgentFeedObserve>(&ev.message)) {
            on_agent_feed(*feed);
        }
        return;
    }
    if (ev.dst < 0 || static_cast<std::size_t>(ev.dst) >= nodes_.size()) {
        return;
    }
    Node& node = nodes_[static_cast<std::size_t>(ev.dst)];
    if (const auto* submit = std::get_if<SubmitTx>(&ev.message)) {
        on_submit_tx(node, submit->tx);
    } else if (std::get_if<MineTick>(&ev.message) != nullptr) {
        on_mine_tick(node);
    } else if (const auto* partial = std::get_if<PartialBlockMsg>(&ev.message)) {
        on_partial_received(node, partial->partial);
    } else if (const auto* completion = std::get_if<CompletionMsg>(&ev.message)) {
        on_completion_received(node, completion->block);
    } else if (const auto* timeout = std::get_if<CompletionTimeout>(&ev.message)) {
        on_completion_timeout(node, timeout->partial_hash);
    } else if (const auto* reply = std::get_if<OracleReply>(&ev.message)) {
        on_oracle_reply(node, *reply);
    }
}

void World::on_submit_tx(Node& node, const Transaction& tx) {
    if (node.crashed) {
        return;
    }
    if (!node.seen_tx_ids.insert(tx.tx_id).second) {
        return;
    }
    node.pool.push_back(tx);
}

void World::on_mine_tick(Node& node) {
    node.mine_scheduled = false;
    if (node.crashed || node.phase != NodePhase::Mining) {
        return;
    }
    PartialBlock candidate;
    candidate.height = node.chain.height() + 1;
    candidate.parent_hash = node.chain.tip().block_hash;
    candidate.transactions = node.pool;
    candidate.partial_hash =
        compute_partial_hash(candidate.height, candidate.parent_hash, candidate.transactions);
    candidate.nonce_pow = node.pow_rng();
    if (pow_valid(candidate.partial_hash, candidate.nonce_pow, cfg_.difficulty)) {
        on_mine_success(node, std::move(candidate));
        return;
    }
    schedule_mining(node);
}

void World::on_mine_success(Node& node, PartialBlock partial) {
    trace_.push_back(std::to_string(now_) + " " + entity_name(node.id) + " " +
                     entity_name(node.id) + " mine_success " + short_digest(partial.partial_hash));
    if (mode_ == InteractionMode::VerifiableExternalCalls) {
        // announce the solution so peers stop mining and wait for the
        // completion, then perform the calls
        broadcast_from(node.id, PartialBlockMsg{partial});
        if (fault_.kind == FaultPlan::Kind::CrashWinnerAfterPartial && !fault_fired_ &&
            partial.height == fault_.height) {
            fault_fired_ = true;
            node.crashed = true;
            return;
        }
        begin_completion(node, std::move(partial));
        return;
    }
    if (fault_.kind == FaultPlan::Kind::CrashWinnerAfterPartial && !fault_fired_ &&
        partial.height == fault_.height) {
        fault_fired_ = true;
        node.crashed = true;
        return;
    }
    // single-phase comparison modes: finalize immediately and broadcast the
    // full block
    CompletedBlock completed =
        complete_block(node.chain, partial, mode_, direct_oracle_access(oracles_, now_), registry_,
                       policy_, node.nonces, now_);
    cache_hits_ += completed.cache_hits;
    broadcast_from(node.id, CompletionMsg{completed.block});
    accept_block(node, std::move(completed.block), std::move(completed.post_state));
}

void World::begin_completion(Node& node, PartialBlock partial) {
    node.phase = NodePhase::Completing;
    PendingCompletion pending;
    pending.plan = plan_block_sites(partial.transactions, node.chain.tip_state(), mode_, policy_);
    pending.requests = materialize_block_requests(partial.transactions, pending.plan, node.nonces);
    const std::vector<ExternalCallRequest> live = live_requests_for(
        partial.transactions, pending.plan, pending.requests, node.chain, partial.height, policy_);
    pending.partial = std::move(partial);
    node.completing = std::move(pending);
    if (live.empty()) {
        finish_completion(node);
        return;
    }
    node.completing.outstanding = live.size();
    for (const ExternalCallRequest& req : live) {
        schedule(cfg_.link_latency, static_cast<std::int32_t>(node.id), kOracleEntity,
                 OracleRequest{req});
    }
}

void World::on_oracle_request(const SimEvent& ev) {
    const auto* msg = std::get_if<OracleRequest>(&ev.message);
    if (msg == nullptr) {
        return;
    }
    auto response = handle_request(oracles_, msg->request, now_);
    OracleReply reply{canonical_encode_request(msg->request, true), std::move(response)};
    // the provider channel has latency but is not subject to gossip drops
    schedule(cfg_.link_latency, kOracleEntity, ev.src, std::move(reply));
}

void World::on_oracle_reply(Node& node, const OracleReply& reply) {
    if (node.crashed || node.phase != NodePhase::Completing) {
        return;
    }
    auto [it, inserted] = node.completing.replies.emplace(reply.request_encoding, reply.response);
    if (!inserted) {
        return;
    }
    if (--node.completing.outstanding == 0) {
        finish_completion(node);
    }
}

void World::finish_completion(Node& node) {
    PendingCompletion pending = std::move(node.completing);
    node.completing = PendingCompletion{};
    const auto& replies = pending.replies;
    OracleAccess access =
        [&replies](const ExternalCallRequest& req) -> std::optional<SignedResponse> {
        auto it = replies.find(canonical_encode_request(req, true));
        if (it == replies.end()) {
            return std::nullopt;
        }
        return it->second;
    };
    ResolveResult resolved = resolve_calls(pending.partial.transactions, pending.plan,
                                           pending.requests, ResponseCache{}, node.chain,
                                           pending.partial.height, access, registry_, policy_, now_);
    cache_hits_ += resolved.cache_hits;
    CompletedBlock completed =
        assemble_block(node.chain, pending.partial, mode_, pending.plan, resolved.per_tx,
                       std::move(resolved.cache), policy_, now_, resolved.cache_hits);
    node.phase = NodePhase::Mining;
    broadcast_from(node.id, CompletionMsg{completed.block});
    accept_block(node, std::move(completed.block), std::move(completed.post_state));
}

void World::on_partial_received(Node& node, const PartialBlock& partial) {
    if (node.crashed || mode_ != InteractionMode::VerifiableExternalCalls) {
        return;
    }
    if (compute_partial_hash(partial.height, partial.parent_hash, partial.transactions) !=
        partial.partial_hash) {
        return;
    }
    if (!pow_valid(partial.partial_hash, partial.nonce_pow, cfg_.difficulty)) {
        return;
    }
    try_adopt_ancestry(node, partial.parent_hash);
    if (node.phase != NodePhase::Mining) {
        return;  // first accepted partial wins; own completion wins
    }
    if (partial.height != node.chain.height() + 1 ||
        partial.parent_hash != node.chain.tip().block_hash) {
        return;
    }
    node.phase = NodePhase::AwaitingCompletion;
    node.awaiting_hash = partial.partial_hash;
    node.awaiting_deadline = now_ + cfg_.completion_timeout;
    schedule(cfg_.completion_timeout, static_cast<std::int32_t>(node.id),
             static_cast<std::int32_t>(node.id), CompletionTimeout{partial.partial_hash});
}

ValidationOutcome World::validate_for_mode(Node& node, std::uint64_t parent_height,
                                           const Block& block) {
    if (mode_ == InteractionMode::AllNodesCall) {
        ++validations_performed_;
        return validate_block_all_nodes(node.chain, parent_height, block,
                                        direct_oracle_access(oracles_, now_), registry_, policy_,
                                        cfg_.difficulty, node.nonces);
    }
    const std::uint64_t before = total_invocations(oracles_);
    ValidationOutcome outcome;
    if (mode_ == InteractionMode::TraditionalOracle) {
        outcome =
            validate_block_traditional(node.chain, parent_height, block, policy_, cfg_.difficulty);
    } else {
        outcome =
            validate_block(node.chain, parent_height, block, registry_, policy_, cfg_.difficulty);
    }
    ++validations_performed_;
    validation_invocation_delta_ += total_invocations(oracles_) - before;
    return outcome;
}

void World::on_completion_received(Node& node, const Block& incoming) {
    if (node.crashed) {
        return;
    }
    Block block = incoming;
    block.block_hash = compute_block_hash(block);
    try_adopt_ancestry(node, block.parent_hash);

    const bool extends_tip = block.height == node.chain.height() + 1 &&
                             block.parent_hash == node.chain.tip().block_hash;
    const bool sibling_of_tip =
        node.chain.height() >= 1 && block.height == node.chain.height() &&
        block.parent_hash == node.chain.blocks[node.chain.height() - 1].block_hash;

    if (mode_ == InteractionMode::VerifiableExternalCalls) {
        const bool awaited = node.phase == NodePhase::AwaitingCompletion &&
                             node.awaiting_hash == block.partial_hash && extends_tip;
        if (awaited) {
            ValidationOutcome outcome = validate_for_mode(node, node.chain.height(), block);
            if (!outcome.accepted) {
                ++node.completions_rejected;
                node.last_reject = outcome.reason;
                return;  // keep waiting until the deadline
            }
            node.phase = NodePhase::Mining;
            accept_block(node, std::move(block), std::move(outcome.resulting_state));
            return;
        }
        // Not the awaited completion. Blocks that validate against a known
        // parent are stashed; they are adopted only once the network builds
        // on them (longest chain supersedes).
        if (extends_tip) {
            ValidationOutcome outcome = validate_for_mode(node, node.chain.height(), block);
            if (outcome.accepted) {
                stash_side_completion(node, block, outcome.resulting_state);
            } else {
                ++node.completions_rejected;
                node.last_reject = outcome.reason;
            }
        } else if (sibling_of_tip) {
            ValidationOutcome outcome = validate_for_mode(node, node.chain.height() - 1, block);
            if (outcome.accepted) {
                stash_side_completion(node, block, outcome.resulting_state);
            }
        }
        return;
    }

    // single-phase modes accept any full block that extends the tip
    if (extends_tip) {
        ValidationOutcome outcome = validate_for_mode(node, node.chain.height(), block);
        if (!outcome.accepted) {
            ++node.completions_rejected;
            node.last_reject = outcome.reason;
            return;
        }
        accept_block(node, std::move(block), std::move(outcome.resulting_state));
        return;
    }
    if (sibling_of_tip) {
        ValidationOutcome outcome = validate_for_mode(node, node.chain.height() - 1, block);
        if (outcome.accepted) {
            stash_side_completion(node, block, outcome.resulting_state);
        }
    }
}

void World::on_completion_timeout(Node& node, const Hash32& partial_hash) {
    if (node.crashed || node.phase != NodePhase::AwaitingCompletion ||
        node.awaiting_hash != partial_hash || now_ < node.awaiting_deadline) {
        return;
    }
    // discard the pending partial; its transactions never left the pool
    node.phase = NodePhase::Mining;
    ++node.timeouts;
    schedule_mining(node);
}

void World::stash_side_completion(Node& node, const Block& block,
                                  const ContractState& resulting_state) {
    node.side_completions[block.block_hash] = {block, resulting_state};
}

bool World::try_adopt_ancestry(Node& node, const Hash32& parent_hash) {
    if (node.side_completions.find(parent_hash) == node.side_completions.end()) {
        return false;
    }
    // walk back through stashed blocks to the first one that attaches
    std::vector<Hash32> path{parent_hash};
    while (true) {
        const Block& head = node.side_completions.at(path.back()).first;
        auto up = node.side_completions.find(head.parent_hash);
        if (up == node.side_completions.end()) {
            break;
        }
        path.push_back(up->first);
    }
    std::vector<Transaction> displaced;
    bool adopted = false;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        auto entry = node.side_completions.find(*it);
        if (entry == node.side_completions.end()) {
            continue;
        }
        Block block = entry->second.first;
        ContractState state = entry->second.second;
        node.side_completions.erase(entry);
        if (block.height == node.chain.height() + 1 &&
            block.parent_hash == node.chain.tip().block_hash) {
            // plain extension
        } else if (block.height == node.chain.height() && node.chain.height() >= 1 &&
                   block.parent_hash == node.chain.blocks[block.height - 1].block_hash) {
            for (const BlockTx& btx : node.chain.tip().transactions) {
                displaced.push_back(btx.tx);
            }
            node.chain.truncate_to(block.height - 1);
        } else {
            continue;  // does not attach; drop it
        }
        const ContractState pre = node.chain.tip_state();
        const auto included = block_tx_ids(block);
        std::erase_if(node.pool,
                      [&](const Transaction& tx) { return included.count(tx.tx_id) > 0; });
        if (node.id == 0) {
            note_node0_block(pre, state, block);
        }
        node.chain.append(std::move(block), std::move(state));
        adopted = true;
    }
    if (adopted) {
        // displaced transactions regain pool eligibility unless re-included
        std::set<Hash32> on_chain;
        for (const Block& b : node.chain.blocks) {
            for (const BlockTx& btx : b.transactions) {
                on_chain.insert(btx.tx.tx_id);
            }
        }
        for (Transaction& tx : displaced) {
            if (on_chain.count(tx.tx_id) == 0) {
                node.pool.push_back(std::move(tx));
            }
        }
        std::erase_if(node.side_completions, [&](const auto& kv) {
            return kv.second.first.height < node.chain.height();
        });
    }
    return adopted;
}

void World::accept_block(Node& node, Block block, ContractState post_state) {
    const auto included = block_tx_ids(block);
    std::erase_if(node.pool, [&](const Transaction& tx) { return included.count(tx.tx_id) > 0; });
    if (node.id == 0) {
        note_node0_block(node.chain.tip_state(), post_state, block);
    }
    node.chain.append(std::move(block), std::move(post_state));
    std::erase_if(node.side_completions, [&](const auto& kv) {
        return kv.second.first.height < node.chain.height();
    });
    node.phase = NodePhase::Mining;
    schedule_mining(node);
}

void World::note_node0_block(const ContractState& pre, const ContractState& post,
                             const Block& block) {
    for (const auto& [id, bet] : post.bets) {
        auto prev = pre.bets.find(id);
        if (prev == pre.bets.end()) {
            bet_placed_[id] = block.height;
            if (bet.status != BetStatus::Placed) {
                bet_completed_[id] = block.height;
            }
        } else if (prev->second.status == BetStatus::Placed && bet.status != BetStatus::Placed) {
            bet_completed_[id] = block.height;
        }
    }
    if (mode_ == InteractionMode::TraditionalOracle && !agent_rng_uri_.empty()) {
        // the trusted party watches the committed chain and pushes the rng
        // value for newly placed bets in a later block
        for (const auto& [id, bet] : post.bets) {
            if (bet.status != BetStatus::Placed || pre.bets.count(id) > 0) {
                continue;
            }
            if (agent_handled_.insert(id).second) {
                schedule(2 * cfg_.link_latency + 1, kAgentEntity, kAgentEntity,
                         AgentRngObserve{id});
            }
        }
    }
}

void World::on_agent_rng(const AgentRngObserve& msg) {
    if (mode_ != InteractionMode::TraditionalOracle || agent_rng_uri_.empty()) {
        return;
    }
    ExternalCallRequest req;
    req.endpoint_uri = agent_rng_uri_;
    Encoder payload;
    payload.u64be(msg.bet_id);
    req.payload = payload.take();
    auto response = handle_request(oracles_, req, now_);
    if (!response) {
        return;  // provider unavailable; the bet stays unsettled
    }
    Transaction tx =
        make_transaction("oracle-agent", agent_salt_++, RngInput{msg.bet_id, response->payload});
    for (std::uint32_t dst = 0; dst < nodes_.size(); ++dst) {
        schedule(cfg_.link_latency, kAgentEntity, static_cast<std::int32_t>(dst), SubmitTx{tx});
    }
}

void World::on_agent_feed(const AgentFeedObserve& msg) {
    if (mode_ != InteractionMode::TraditionalOracle) {
        return;
    }
    ExternalCallRequest req;
    req.endpoint_uri = msg.uri;
    auto response = handle_request(oracles_, req, now_);
    if (!response) {
        return;
    }
    Transaction tx =
        make_transaction("oracle-agent", agent_salt_++, FeedInput{msg.uri, response->payload});
    for (std::uint32_t dst = 0; dst < nodes_.size(); ++dst) {
        schedule(cfg_.link_latency, kAgentEntity, static_cast<std::int32_t>(dst), SubmitTx{tx});
    }
}

}  // namespace vex
