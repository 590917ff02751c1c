#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gascast::ingest {

struct TransactionRecord {
    int64_t block_number = 0;
    int64_t timestamp = 0;  // seconds since epoch
    double gas_price = 0.0;  // gwei
    bool is_contract = false;
};

struct BlockRecord {
    int64_t block_number = 0;
    int64_t timestamp = 0;
    double base_fee = 0.0;  // gwei
    double gas_used = 0.0;
    double size_gas = 0.0;
    double size_bytes = 0.0;
};

struct BlockFeatureRow {
    int64_t block_number = 0;
    int64_t timestamp = 0;
    // Gas-price aggregates are absent for empty blocks (gap markers, not 0).
    std::optional<double> min_gas_price;
    std::optional<double> max_gas_price;
    std::optional<double> avg_gas_price;
    std::map<double, std::optional<double>> pct_gas_price;
    int64_t tx_count = 0;
    int64_t contract_count = 0;
    double base_fee = 0.0;
    double gas_used = 0.0;
    double size_gas = 0.0;
    double size_bytes = 0.0;
};

struct TickRecord {
    int64_t timestamp = 0;  // minute-aligned seconds
    double open_price = 0.0;  // USDT per ETH
};

struct RejectLog {
    int64_t rejected = 0;
    std::vector<std::string> messages;  // "line N: reason", capped
};

struct ParsedTransactions {
    std::vector<TransactionRecord> records;  // sorted by (block, file order)
    RejectLog rejects;
};

// Transactions file columns: block_number, timestamp, gas_price_gwei, is_contract.
// Malformed rows (negative gas price, bad numerics) are counted per line and
// skipped; a missing mandatory column is a hard error.
ParsedTransactions parse_transactions(const std::string& path);

// Blocks file columns: block_number, timestamp, base_fee_gwei, gas_used,
// size_gas, size_bytes.
std::vector<BlockRecord> parse_blocks(const std::string& path);

// Ticks file columns: open_time_ms, open. Duplicate or non-monotone
// timestamps are a hard error naming the first offending line.
std::vector<TickRecord> parse_ticks(const std::string& path);

// One row per block record; blocks without transactions get gap-marked
// gas-price fields. Percentile ranks must lie in (0, 100).
std::vector<BlockFeatureRow> aggregate_block_features(
    const std::vector<TransactionRecord>& txs,
    const std::vector<BlockRecord>& blocks,
    const std::vector<double>& percentiles);

// Canonical interchange format: headered comma-delimited text, absent values
// as empty fields. Column order: block_number, timestamp, min_gas_price,
// max_gas_price, avg_gas_price, pct_<r>... , tx_count, contract_count,
// base_fee, gas_used, size_gas, size_bytes.
void write_block_features(const std::string& path,
                          const std::vector<BlockFeatureRow>& rows);
std::vector<BlockFeatureRow> read_block_features(const std::string& path);

}  // namespace gascast::ingest
