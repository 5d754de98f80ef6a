#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vex/call.hpp"

namespace vex {

// Endpoint behaviors. SeededStream output depends only on (seed, invocation
// ordinal); SteppedFeed steps once per simulated tick; FailAfter answers the
// first ok_count requests and times out afterwards.
struct ConstantValue {
    Bytes value;
};

struct SeededStream {
    std::uint64_t seed = 0;
};

struct SteppedFeed {
    std::vector<Bytes> values;
};

struct FailAfter {
    std::uint64_t ok_count = 0;
};

using OracleBehavior = std::variant<ConstantValue, SeededStream, SteppedFeed, FailAfter>;

struct OracleEndpoint {
    std::string uri;
    KeyPair keys;
    OracleBehavior behavior;
    bool up = true;
    std::uint64_t invocation_count = 0;
};

struct OracleDirectory {
    std::map<std::string, OracleEndpoint> entries;

    void add(OracleEndpoint endpoint);
    OracleEndpoint* find(const std::string& uri);
    const OracleEndpoint* find(const std::string& uri) const;
};

// Answers a request with a signed response, echoing the request nonce and
// stamping the current tick. Absent result models call failure: unknown
// endpoint, endpoint down, or FailAfter exhausted. The invocation counter
// increments exactly once per request that reaches a live endpoint, whether
// it answers or times out.
std::optional<SignedResponse> handle_request(OracleDirectory& directory,
                                             const ExternalCallRequest& req, std::uint64_t now);

void reset_counters(OracleDirectory& directory);
std::uint64_t total_invocations(const OracleDirectory& directory);
std::map<std::string, std::uint64_t> invocation_counts(const OracleDirectory& directory);

// The statically configured trusted-key registry nodes verify against.
std::map<std::string, PublicKey> public_keys(const OracleDirectory& directory);

void set_all_availability(OracleDirectory& directory, bool up);

}  // namespace vex
