#pragma once

#include <map>
#include <string>

#include "vex/ledger.hpp"

namespace vex {

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything a fresh validator needs besides the blocks themselves: the
// trusted key registry, consensus parameters and the genesis allocation.
struct ChainFileMeta {
    InteractionMode mode = InteractionMode::VerifiableExternalCalls;
    std::uint32_t difficulty = 8;
    ResolutionPolicy policy;
    std::map<AccountId, std::uint64_t> genesis_balances;
    std::map<std::string, PublicKey> oracle_keys;
};

// Canonical chain export: one JSON record per line, header first, then one
// record per block in height order. All byte strings are lowercase hex;
// field order is fixed. Identical chains export byte-identical text.
std::string export_chain_text(const Chain& chain, const ChainFileMeta& meta);

struct LoadedChain {
    ChainFileMeta meta;
    std::vector<Block> blocks;  // height order, genesis included
};

// Parses an exported chain. Structural problems (bad hex, missing fields,
// non-contiguous heights) raise FormatError; cryptographic validity is the
// business of validate_loaded_chain.
LoadedChain parse_chain_text(const std::string& text);

struct ChainValidationResult {
    bool valid = false;
    std::uint64_t failed_height = 0;
    RejectReason reason = RejectReason::None;
    std::string detail;
};

// Replays the exported chain from genesis on a fresh validator with no
// oracle connectivity. Verifiable-external-call chains validate fully
// offline; all-nodes-call chains cannot (their evidence was never stored).
ChainValidationResult validate_loaded_chain(const LoadedChain& loaded);

void write_chain_file(const std::string& path, const Chain& chain, const ChainFileMeta& meta);
bool validate_chain_text(const std::string& text);  // FormatError on structure
ChainValidationResult validate_chain_file(const std::string& path);

}  // namespace vex
