#pragma once

#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "vex/ledger.hpp"

namespace vex {

struct NetworkConfig {
    std::uint32_t node_count = 3;
    std::uint64_t link_latency = 1;       // ticks per hop, node-to-node and node-to-oracle
    double drop_probability = 0.0;        // applied to node-to-node broadcasts only
    std::uint32_t difficulty = 8;         // leading zero bits
    std::uint64_t completion_timeout = 50;
    std::uint64_t global_seed = 1;
};

struct FaultPlan {
    enum class Kind { None, CrashWinnerAfterPartial };
    Kind kind = Kind::None;
    std::uint64_t height = 0;  // the winner of this height crashes after its partial broadcast
};

// Simulated messages. Every oracle request is answered by exactly one reply
// (possibly carrying no response); mining ticks and completion deadlines are
// self-addressed events.
struct SubmitTx {
    Transaction tx;
};
struct PartialBlockMsg {
    PartialBlock partial;
};
struct CompletionMsg {
    Block block;
};
struct OracleRequest {
    ExternalCallRequest request;
};
struct OracleReply {
    Bytes request_encoding;  // canonical request encoding, nonce included
    std::optional<SignedResponse> response;
};
struct MineTick {};
struct CompletionTimeout {
    Hash32 partial_hash;
};
struct AgentRngObserve {
    BetId bet_id = 0;
};
struct AgentFeedObserve {
    std::string uri;
};

using Message = std::variant<SubmitTx, PartialBlockMsg, CompletionMsg, OracleRequest, OracleReply,
                             MineTick, CompletionTimeout, AgentRngObserve, AgentFeedObserve>;

struct SimEvent {
    std::uint64_t deliver_at = 0;
    std::uint64_t seq = 0;  // insertion order; ties on deliver_at resolve by seq
    std::int32_t src = 0;
    std::int32_t dst = 0;
    Message message;
};

inline constexpr std::int32_t kOracleEntity = -1;
inline constexpr std::int32_t kScriptEntity = -2;
inline constexpr std::int32_t kAgentEntity = -3;

enum class NodePhase : std::uint8_t { Mining, AwaitingCompletion, Completing };

// In-flight second phase on the winning node: requests are keyed by their
// canonical encoding so replies can be matched and deduplicated.
struct PendingCompletion {
    PartialBlock partial;
    SitePlan plan;
    std::vector<std::vector<ExternalCallRequest>> requests;
    std::map<Bytes, std::optional<SignedResponse>> replies;
    std::size_t outstanding = 0;
};

struct Node {
    std::uint32_t id = 0;
    Chain chain;
    std::vector<Transaction> pool;
    std::set<Hash32> seen_tx_ids;
    NodePhase phase = NodePhase::Mining;
    Hash32 awaiting_hash{};
    std::uint64_t awaiting_deadline = 0;
    PendingCompletion completing;
    // validated blocks that did not extend the local tip when they arrived;
    // adopted later if the network builds on them (longest chain supersedes)
    std::map<Hash32, std::pair<Block, ContractState>> side_completions;
    NonceStream nonces;
    std::mt19937_64 pow_rng;
    bool crashed = false;
    bool mine_scheduled = false;

    std::uint64_t blocks_accepted = 0;
    std::uint64_t completions_rejected = 0;
    RejectReason last_reject = RejectReason::None;
    std::uint64_t timeouts = 0;

    Node(std::uint32_t node_id, ContractState genesis, std::uint64_t global_seed);
};

// Deterministic discrete-event world: N nodes, the oracle directory, one
// event queue. The full event trace is a pure function of the configuration
// and the injected script.
class World {
public:
    World(NetworkConfig cfg, InteractionMode mode, ResolutionPolicy policy,
          OracleDirectory oracles, ContractState genesis_state);

    // Schedules a transaction for delivery to every node at `tick`.
    void submit_at(std::uint64_t tick, const Transaction& tx);

    // Processes one event; returns false when the queue is empty.
    bool step();

    // Runs until every live node reaches `height` or `max_ticks` elapse.
    void run_until_height(std::uint64_t height, std::uint64_t max_ticks);
    // Runs every event scheduled up to and including `tick`.
    void run_until_tick(std::uint64_t tick);

    bool all_heights_at_least(std::uint64_t height) const;
    // Nodes sharing a tip hash must share the tip state root.
    bool tips_consistent() const;

    std::uint64_t now() const { return now_; }
    const NetworkConfig& config() const { return cfg_; }
    InteractionMode mode() const { return mode_; }
    const ResolutionPolicy& policy() const { return policy_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    OracleDirectory& oracles() { return oracles_; }
    const OracleDirectory& oracles() const { return oracles_; }
    const std::map<std::string, PublicKey>& registry() const { return registry_; }
    const std::vector<std::string>& trace() const { return trace_; }

    std::uint64_t cache_hits() const { return cache_hits_; }
    std::uint64_t validations_performed() const { return validations_performed_; }
    std::uint64_t validation_invocation_delta() const { return validation_invocation_delta_; }

    // Heights observed on node 0's chain, keyed by bet id.
    const std::map<BetId, std::uint64_t>& bet_placed_height() const { return bet_placed_; }
    const std::map<BetId, std::uint64_t>& bet_completed_height() const { return bet_completed_; }

    void set_fault(FaultPlan fault) { fault_ = fault; }
    void set_agent_rng_uri(std::string uri) { agent_rng_uri_ = std::move(uri); }

private:
    void schedule(std::uint64_t delay, std::int32_t src, std::int32_t dst, Message message);
    void broadcast_from(std::uint32_t src_node, const Message& message);
    void schedule_mining(Node& node);
    void trace_event(const SimEvent& ev);

    void dispatch(const SimEvent& ev);
    void on_submit_tx(Node& node, const Transaction& tx);
    void on_mine_tick(Node& node);
    void on_mine_success(Node& node, PartialBlock partial);
    void on_partial_received(Node& node, const PartialBlock& partial);
    void on_completion_received(Node& node, const Block& block);
    void on_completion_timeout(Node& node, const Hash32& partial_hash);
    void on_oracle_request(const SimEvent& ev);
    void on_oracle_reply(Node& node, const OracleReply& reply);
    void on_agent_rng(const AgentRngObserve& msg);
    void on_agent_feed(const AgentFeedObserve& msg);

    void begin_completion(Node& node, PartialBlock partial);
    void finish_completion(Node& node);
    ValidationOutcome validate_for_mode(Node& node, std::uint64_t parent_height,
                                        const Block& block);
    void accept_block(Node& node, Block block, ContractState post_state);
    void stash_side_completion(Node& node, const Block& block,
                               const ContractState& resulting_state);
    bool try_adopt_ancestry(Node& node, const Hash32& parent_hash);
    void note_node0_block(const ContractState& pre, const ContractState& post,
                          const Block& block);

    bool link_drops();

    NetworkConfig cfg_;
    InteractionMode mode_;
    ResolutionPolicy policy_;
    OracleDirectory oracles_;
    std::map<std::string, PublicKey> registry_;
    std::vector<Node> nodes_;
    std::map<std::pair<std::uint64_t, std::uint64_t>, SimEvent> queue_;
    std::uint64_t now_ = 0;
    std::uint64_t seq_ = 0;
    std::mt19937_64 drop_rng_;
    std::uint64_t drop_threshold_ = 0;
    std::vector<std::string> trace_;
    FaultPlan fault_;
    bool fault_fired_ = false;

    std::string agent_rng_uri_;
    std::set<BetId> agent_handled_;
    std::uint64_t agent_salt_ = 0;

    std::uint64_t cache_hits_ = 0;
    std::uint64_t validations_performed_ = 0;
    std::uint64_t validation_invocation_delta_ = 0;
    std::map<BetId, std::uint64_t> bet_placed_;
    std::map<BetId, std::uint64_t> bet_completed_;
};

}  // namespace vex
