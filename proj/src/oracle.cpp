#include "vex/oracle.hpp"

#include <algorithm>
#include <stdexcept>

namespace vex {

void OracleDirectory::add(OracleEndpoint endpoint) {
    auto uri = endpoint.uri;
    if (!entries.emplace(uri, std::move(endpoint)).second) {
        throw std::invalid_argument("duplicate oracle endpoint uri: " + uri);
    }
}

OracleEndpoint* OracleDirectory::find(const std::string& uri) {
    auto it = entries.find(uri);
    return it == entries.end() ? nullptr : &it->second;
}

const OracleEndpoint* OracleDirectory::find(const std::string& uri) const {
    auto it = entries.find(uri);
    return it == entries.end() ? nullptr : &it->second;
}

namespace {

std::optional<Bytes> behavior_value(const OracleEndpoint& ep, std::uint64_t ordinal,
                                    std::uint64_t now) {
    if (const auto* c = std::get_if<ConstantValue>(&ep.behavior)) {
        return c->value;
    }
    if (const auto* s = std::get_if<SeededStream>(&ep.behavior)) {
        Encoder enc;
        enc.u64be(s->seed);
        enc.u64be(ordinal);
        const Hash32 digest = sha256(enc.take());
        return Bytes(digest.begin(), digest.end());
    }
    if (const auto* f = std::get_if<SteppedFeed>(&ep.behavior)) {
        if (f->values.empty()) {
            return std::nullopt;
        }
        const std::uint64_t step = std::min<std::uint64_t>(now, f->values.size() - 1);
        return f->values[step];
    }
    if (const auto* fail = std::get_if<FailAfter>(&ep.behavior)) {
        if (ordinal >= fail->ok_count) {
            return std::nullopt;  // provider timed out
        }
        Encoder enc;
        enc.u64be(ordinal);
        return enc.take();
    }
    return std::nullopt;
}

}  // namespace

std::optional<SignedResponse> handle_request(OracleDirectory& directory,
                                             const ExternalCallRequest& req, std::uint64_t now) {
    OracleEndpoint* ep = directory.find(req.endpoint_uri);
    if (ep == nullptr || !ep->up) {
        return std::nullopt;
    }
    const std::uint64_t ordinal = ep->invocation_count++;
    auto value = behavior_value(*ep, ordinal, now);
    if (!value) {
        return std::nullopt;
    }
    return sign_response(*value, req.request_nonce, now, ep->keys.seed);
}

void reset_counters(OracleDirectory& directory) {
    for (auto& [uri, ep] : directory.entries) {
        ep.invocation_count = 0;
    }
}

std::uint64_t total_invocations(const OracleDirectory& directory) {
    std::uint64_t total = 0;
    for (const auto& [uri, ep] : directory.entries) {
        total += ep.invocation_count;
    }
    return total;
}

std::map<std::string, std::uint64_t> invocation_counts(const OracleDirectory& directory) {
    std::map<std::string, std::uint64_t> counts;
    for (const auto& [uri, ep] : directory.entries) {
        counts[uri] = ep.invocation_count;
    }
    return counts;
}

std::map<std::string, PublicKey> public_keys(const OracleDirectory& directory) {
    std::map<std::string, PublicKey> keys;
    for (const auto& [uri, ep] : directory.entries) {
        keys[uri] = ep.keys.pub;
    }
    return keys;
}

void set_all_availability(OracleDirectory& directory, bool up) {
    for (auto& [uri, ep] : directory.entries) {
        ep.up = up;
    }
}

}  // namespace vex
