#include "vex/chain_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace vex {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string freshness_name(Freshness f) { return to_string(f); }

Freshness freshness_from(const std::string& s, const std::string& where) {
    if (s == "fresh") return Freshness::Fresh;
    if (s == "cacheable_intra_block") return Freshness::CacheableIntraBlock;
    if (s == "cacheable_historical") return Freshness::CacheableHistorical;
    throw FormatError("unknown freshness '" + s + "' at " + where);
}

std::string status_name(ReceiptStatus s) { return to_string(s); }

ReceiptStatus status_from(const std::string& s, const std::string& where) {
    if (s == "applied") return ReceiptStatus::Applied;
    if (s == "failed_verification") return ReceiptStatus::FailedVerification;
    if (s == "failed_no_response") return ReceiptStatus::FailedNoResponse;
    if (s == "failed_logic") return ReceiptStatus::FailedLogic;
    throw FormatError("unknown receipt status '" + s + "' at " + where);
}

ordered_json action_to_json(const Action& action) {
    ordered_json j;
    if (std::holds_alternative<Noop>(action)) {
        j["kind"] = "noop";
    } else if (const auto* place = std::get_if<PlaceBet>(&action)) {
        j["kind"] = "place_bet";
        j["stake"] = place->stake;
    } else if (const auto* settle = std::get_if<SettleBet>(&action)) {
        j["kind"] = "settle_bet";
        j["bet_id"] = settle->bet_id;
        j["rng_uri"] = settle->rng_uri;
    } else if (const auto* transfer = std::get_if<PriceTransfer>(&action)) {
        j["kind"] = "price_transfer";
        j["from"] = transfer->from;
        j["to"] = transfer->to;
        j["feed_uri"] = transfer->feed_uri;
        j["historical"] = transfer->historical;
    } else if (const auto* rng = std::get_if<RngInput>(&action)) {
        j["kind"] = "rng_input";
        j["bet_id"] = rng->bet_id;
        j["value"] = hex_encode(as_view(rng->value));
    } else if (const auto* feed = std::get_if<FeedInput>(&action)) {
        j["kind"] = "feed_input";
        j["feed_uri"] = feed->feed_uri;
        j["value"] = hex_encode(as_view(feed->value));
    }
    return j;
}

const ordered_json& field(const ordered_json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw FormatError("missing field '" + std::string(key) + "' at " + where);
    }
    return *it;
}

std::string str_field(const ordered_json& obj, const char* key, const std::string& where) {
    const auto& f = field(obj, key, where);
    if (!f.is_string()) {
        throw FormatError("field '" + std::string(key) + "' must be a string at " + where);
    }
    return f.get<std::string>();
}

std::uint64_t u64_field(const ordered_json& obj, const char* key, const std::string& where) {
    const auto& f = field(obj, key, where);
    if (!f.is_number_unsigned()) {
        throw FormatError("field '" + std::string(key) + "' must be an unsigned integer at " +
                          where);
    }
    return f.get<std::uint64_t>();
}

Bytes hex_field(const ordered_json& obj, const char* key, const std::string& where) {
    auto bytes = hex_decode(str_field(obj, key, where));
    if (!bytes) {
        throw FormatError("field '" + std::string(key) + "' is not valid hex at " + where);
    }
    return *bytes;
}

template <std::size_t N>
std::array<std::uint8_t, N> hex_field_fixed(const ordered_json& obj, const char* key,
                                            const std::string& where) {
    auto arr = hex_decode_fixed<N>(str_field(obj, key, where));
    if (!arr) {
        throw FormatError("field '" + std::string(key) + "' must be " + std::to_string(N) +
                          " hex bytes at " + where);
    }
    return *arr;
}

Action action_from_json(const ordered_json& j, const std::string& where) {
    const std::string kind = str_field(j, "kind", where);
    if (kind == "noop") {
        return Noop{};
    }
    if (kind == "place_bet") {
        return PlaceBet{u64_field(j, "stake", where)};
    }
    if (kind == "settle_bet") {
        return SettleBet{u64_field(j, "bet_id", where), str_field(j, "rng_uri", where)};
    }
    if (kind == "price_transfer") {
        PriceTransfer t;
        t.from = str_field(j, "from", where);
        t.to = str_field(j, "to", where);
        t.feed_uri = str_field(j, "feed_uri", where);
        const auto& h = field(j, "historical", where);
        if (!h.is_boolean()) {
            throw FormatError("field 'historical' must be a boolean at " + where);
        }
        t.historical = h.get<bool>();
        return t;
    }
    if (kind == "rng_input") {
        return RngInput{u64_field(j, "bet_id", where), hex_field(j, "value", where)};
    }
    if (kind == "feed_input") {
        return FeedInput{str_field(j, "feed_uri", where), hex_field(j, "value", where)};
    }
    throw FormatError("unknown action kind '" + kind + "' at " + where);
}

ordered_json call_to_json(const VerifiableExternalCall& call) {
    ordered_json j;
    j["uri"] = call.request.endpoint_uri;
    j["payload"] = hex_encode(as_view(call.request.payload));
    j["nonce"] = call.request.request_nonce ? ordered_json(hex_encode(*call.request.request_nonce))
                                            : ordered_json(nullptr);
    j["freshness"] = freshness_name(call.request.freshness);
    j["public_key"] = hex_encode(call.public_key);
    ordered_json resp;
    resp["payload"] = hex_encode(as_view(call.signed_response.payload));
    resp["nonce"] = call.signed_response.response_nonce
                        ? ordered_json(hex_encode(*call.signed_response.response_nonce))
                        : ordered_json(nullptr);
    resp["timestamp"] = call.signed_response.responder_timestamp;
    resp["signature"] = hex_encode(call.signed_response.signature);
    j["response"] = resp;
    return j;
}

VerifiableExternalCall call_from_json(const ordered_json& j, const std::string& where) {
    VerifiableExternalCall call;
    call.request.endpoint_uri = str_field(j, "uri", where);
    call.request.payload = hex_field(j, "payload", where);
    const auto& nonce = field(j, "nonce", where);
    if (!nonce.is_null()) {
        auto n = hex_decode_fixed<16>(nonce.get<std::string>());
        if (!n) {
            throw FormatError("field 'nonce' must be 16 hex bytes at " + where);
        }
        call.request.request_nonce = *n;
    }
    call.request.freshness = freshness_from(str_field(j, "freshness", where), where);
    call.public_key = hex_field_fixed<32>(j, "public_key", where);
    const auto& resp = field(j, "response", where);
    call.signed_response.payload = hex_field(resp, "payload", where + "/response");
    const auto& rnonce = field(resp, "nonce", where + "/response");
    if (!rnonce.is_null()) {
        auto n = hex_decode_fixed<16>(rnonce.get<std::string>());
        if (!n) {
            throw FormatError("response nonce must be 16 hex bytes at " + where);
        }
        call.signed_response.response_nonce = *n;
    }
    call.signed_response.responder_timestamp = u64_field(resp, "timestamp", where + "/response");
    call.signed_response.signature = hex_field_fixed<64>(resp, "signature", where + "/response");
    return call;
}

ordered_json block_to_json(const Block& block) {
    ordered_json j;
    j["height"] = block.height;
    j["parent_hash"] = hex_encode(block.parent_hash);
    j["nonce_pow"] = block.nonce_pow;
    j["partial_hash"] = hex_encode(block.partial_hash);
    j["completed_at"] = block.completed_at;
    j["state_root_after"] = hex_encode(block.state_root_after);
    j["block_hash"] = hex_encode(block.block_hash);
    ordered_json txs = ordered_json::array();
    for (const BlockTx& btx : block.transactions) {
        ordered_json t;
        t["tx_id"] = hex_encode(btx.tx.tx_id);
        t["initiator"] = btx.tx.initiator;
        t["salt"] = btx.tx.salt;
        t["max_calls"] = btx.tx.max_calls;
        t["resolution"] =
            btx.tx.mode == ResolutionMode::InitiatorResolved ? "initiator" : "finalizer";
        t["action"] = action_to_json(btx.tx.action);
        ordered_json attached = ordered_json::array();
        for (const auto& call : btx.tx.initiator_calls) {
            attached.push_back(call_to_json(call));
        }
        t["initiator_calls"] = attached;
        ordered_json receipt;
        receipt["status"] = status_name(btx.receipt.status);
        ordered_json used = ordered_json::array();
        for (const CallKey& key : btx.receipt.calls_used) {
            used.push_back(hex_encode(key.digest));
        }
        receipt["calls_used"] = used;
        receipt["state_root_after"] = hex_encode(btx.receipt.state_root_after);
        t["receipt"] = receipt;
        ordered_json fresh = ordered_json::array();
        for (const auto& call : btx.fresh_calls) {
            fresh.push_back(call_to_json(call));
        }
        t["fresh_calls"] = fresh;
        txs.push_back(t);
    }
    j["transactions"] = txs;
    ordered_json cache = ordered_json::array();
    for (const auto& [key, call] : block.response_cache.entries) {
        ordered_json entry;
        entry["key"] = hex_encode(key.digest);
        entry["call"] = call_to_json(call);
        cache.push_back(entry);
    }
    j["response_cache"] = cache;
    return j;
}

Block block_from_json(const ordered_json& j, const std::string& where) {
    Block block;
    block.height = u64_field(j, "height", where);
    block.parent_hash = hex_field_fixed<32>(j, "parent_hash", where);
    block.nonce_pow = u64_field(j, "nonce_pow", where);
    block.partial_hash = hex_field_fixed<32>(j, "partial_hash", where);
    block.completed_at = u64_field(j, "completed_at", where);
    block.state_root_after = hex_field_fixed<32>(j, "state_root_after", where);
    const auto& txs = field(j, "transactions", where);
    if (!txs.is_array()) {
        throw FormatError("field 'transactions' must be an array at " + where);
    }
    std::size_t index = 0;
    for (const auto& t : txs) {
        const std::string txw = where + "/tx" + std::to_string(index++);
        BlockTx btx;
        btx.tx.tx_id = hex_field_fixed<32>(t, "tx_id", txw);
        btx.tx.initiator = str_field(t, "initiator", txw);
        btx.tx.salt = u64_field(t, "salt", txw);
        btx.tx.max_calls = static_cast<std::uint32_t>(u64_field(t, "max_calls", txw));
        const std::string resolution = str_field(t, "resolution", txw);
        if (resolution == "initiator") {
            btx.tx.mode = ResolutionMode::InitiatorResolved;
        } else if (resolution == "finalizer") {
            btx.tx.mode = ResolutionMode::FinalizerResolved;
        } else {
            throw FormatError("unknown resolution '" + resolution + "' at " + txw);
        }
        btx.tx.action = action_from_json(field(t, "action", txw), txw + "/action");
        for (const auto& c : field(t, "initiator_calls", txw)) {
            btx.tx.initiator_calls.push_back(call_from_json(c, txw + "/initiator_calls"));
        }
        const auto& receipt = field(t, "receipt", txw);
        btx.receipt.tx_id = btx.tx.tx_id;
        btx.receipt.status = status_from(str_field(receipt, "status", txw), txw);
        for (const auto& used : field(receipt, "calls_used", txw)) {
            if (!used.is_string()) {
                throw FormatError("calls_used entries must be hex strings at " + txw);
            }
            auto digest = hex_decode_fixed<32>(used.get<std::string>());
            if (!digest) {
                throw FormatError("calls_used entries must be 32 hex bytes at " + txw);
            }
            btx.receipt.calls_used.push_back(CallKey{*digest});
        }
        btx.receipt.state_root_after = hex_field_fixed<32>(receipt, "state_root_after", txw);
        for (const auto& c : field(t, "fresh_calls", txw)) {
            btx.fresh_calls.push_back(call_from_json(c, txw + "/fresh_calls"));
        }
        block.transactions.push_back(std::move(btx));
    }
    const auto& cache = field(j, "response_cache", where);
    if (!cache.is_array()) {
        throw FormatError("field 'response_cache' must be an array at " + where);
    }
    for (const auto& entry : cache) {
        const auto key = hex_field_fixed<32>(entry, "key", where + "/response_cache");
        block.response_cache.entries.emplace(
            CallKey{key}, call_from_json(field(entry, "call", where + "/response_cache"),
                                         where + "/response_cache"));
    }
    block.block_hash = compute_block_hash(block);
    return block;
}

}  // namespace

std::string export_chain_text(const Chain& chain, const ChainFileMeta& meta) {
    std::ostringstream out;
    ordered_json header;
    header["format"] = "vexchain";
    header["version"] = 1;
    header["mode"] = to_string(meta.mode);
    header["difficulty"] = meta.difficulty;
    ordered_json policy;
    policy["fresh_max_age"] = meta.policy.fresh_max_age;
    policy["history_window"] = meta.policy.history_window;
    policy["block_call_cap"] = meta.policy.block_call_cap;
    header["policy"] = policy;
    ordered_json balances;
    for (const auto& [account, amount] : meta.genesis_balances) {
        balances[account] = amount;
    }
    header["genesis_balances"] = balances;
    ordered_json keys;
    for (const auto& [uri, pub] : meta.oracle_keys) {
        keys[uri] = hex_encode(pub);
    }
    header["oracle_keys"] = keys;
    out << header.dump() << "\n";
    for (const Block& block : chain.blocks) {
        out << block_to_json(block).dump() << "\n";
    }
    return out.str();
}

LoadedChain parse_chain_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("empty chain file");
    }
    ordered_json header;
    try {
        header = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("header is not valid JSON: ") + e.what());
    }
    if (str_field(header, "format", "header") != "vexchain") {
        throw FormatError("not a vexchain file");
    }
    if (u64_field(header, "version", "header") != 1) {
        throw FormatError("unsupported vexchain version");
    }
    LoadedChain loaded;
    auto mode = interaction_mode_from_string(str_field(header, "mode", "header"));
    if (!mode) {
        throw FormatError("unknown mode in header");
    }
    loaded.meta.mode = *mode;
    loaded.meta.difficulty = static_cast<std::uint32_t>(u64_field(header, "difficulty", "header"));
    const auto& policy = field(header, "policy", "header");
    loaded.meta.policy.fresh_max_age = u64_field(policy, "fresh_max_age", "header/policy");
    loaded.meta.policy.history_window = u64_field(policy, "history_window", "header/policy");
    loaded.meta.policy.block_call_cap =
        static_cast<std::uint32_t>(u64_field(policy, "block_call_cap", "header/policy"));
    for (const auto& [account, amount] : field(header, "genesis_balances", "header").items()) {
        if (!amount.is_number_unsigned()) {
            throw FormatError("genesis balance for '" + account + "' must be unsigned");
        }
        loaded.meta.genesis_balances[account] = amount.get<std::uint64_t>();
    }
    for (const auto& [uri, hexkey] : field(header, "oracle_keys", "header").items()) {
        if (!hexkey.is_string()) {
            throw FormatError("oracle key for '" + uri + "' must be a hex string");
        }
        auto pub = hex_decode_fixed<32>(hexkey.get<std::string>());
        if (!pub) {
            throw FormatError("oracle key for '" + uri + "' must be 32 hex bytes");
        }
        loaded.meta.oracle_keys[uri] = *pub;
    }

    std::uint64_t line_no = 1;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError("line " + std::to_string(line_no + 1) +
                              " is not valid JSON: " + e.what());
        }
        loaded.blocks.push_back(block_from_json(j, "block" + std::to_string(line_no)));
        ++line_no;
    }
    if (loaded.blocks.empty()) {
        throw FormatError("chain file has no blocks");
    }
    for (std::size_t h = 0; h < loaded.blocks.size(); ++h) {
        if (loaded.blocks[h].height != h) {
            throw FormatError("block heights are not contiguous from zero");
        }
    }
    return loaded;
}

ChainValidationResult validate_loaded_chain(const LoadedChain& loaded) {
    ChainValidationResult result;
    ContractState genesis_state;
    genesis_state.balances = loaded.meta.genesis_balances;

    const Block expected_genesis = make_genesis(genesis_state);
    if (!(loaded.blocks[0] == expected_genesis)) {
        result.valid = false;
        result.failed_height = 0;
        result.reason = RejectReason::StateMismatch;
        result.detail = "genesis does not match the declared allocation";
        return result;
    }

    Chain chain = Chain::with_genesis(std::move(genesis_state));
    // no oracle connectivity: every live call fails
    OracleAccess no_access = [](const ExternalCallRequest&) -> std::optional<SignedResponse> {
        return std::nullopt;
    };
    NonceStream validator_nonces("fresh-validator", 0, 0);

    for (std::size_t h = 1; h < loaded.blocks.size(); ++h) {
        const Block& block = loaded.blocks[h];
        ValidationOutcome outcome;
        switch (loaded.meta.mode) {
            case InteractionMode::VerifiableExternalCalls:
                outcome = validate_block(chain, chain.height(), block, loaded.meta.oracle_keys,
                                         loaded.meta.policy, loaded.meta.difficulty);
                break;
            case InteractionMode::TraditionalOracle:
                outcome = validate_block_traditional(chain, chain.height(), block,
                                                     loaded.meta.policy, loaded.meta.difficulty);
                break;
            case InteractionMode::AllNodesCall:
                outcome = validate_block_all_nodes(chain, chain.height(), block, no_access,
                                                   loaded.meta.oracle_keys, loaded.meta.policy,
                                                   loaded.meta.difficulty, validator_nonces);
                break;
        }
        if (!outcome.accepted) {
            result.valid = false;
            result.failed_height = block.height;
            result.reason = outcome.reason;
            result.detail = outcome.detail;
            return result;
        }
        chain.append(block, std::move(outcome.resulting_state));
    }
    result.valid = true;
    return result;
}

void write_chain_file(const std::string& path, const Chain& chain, const ChainFileMeta& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open chain file for writing: " + path);
    }
    out << export_chain_text(chain, meta);
    if (!out) {
        throw IoError("failed writing chain file: " + path);
    }
}

bool validate_chain_text(const std::string& text) {
    return validate_loaded_chain(parse_chain_text(text)).valid;
}

ChainValidationResult validate_chain_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open chain file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return validate_loaded_chain(parse_chain_text(buffer.str()));
}

}  // namespace vex
