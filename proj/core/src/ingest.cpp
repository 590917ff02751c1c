#include "gascast/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gascast/csv.hpp"
#include "gascast/errors.hpp"
#include "gascast/stats.hpp"

namespace gascast::ingest {

namespace {

constexpr size_t kMaxRejectMessages = 50;

void note_reject(RejectLog& log, size_t line_no, const std::string& why) {
    ++log.rejected;
    if (log.messages.size() < kMaxRejectMessages) {
        log.messages.push_back("line " + std::to_string(line_no) + ": " + why);
    }
}

int require_column(const csv::Table& t, const std::string& name,
                   const std::string& path) {
    int idx = t.column(name);
    if (idx < 0)
        throw DataError("missing mandatory column '" + name + "' in " + path);
    return idx;
}

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

ParsedTransactions parse_transactions(const std::string& path) {
    csv::Table t = csv::read_table(path);
    const int c_block = require_column(t, "block_number", path);
    const int c_time = require_column(t, "timestamp", path);
    const int c_price = require_column(t, "gas_price_gwei", path);
    const int c_contract = require_column(t, "is_contract", path);

    ParsedTransactions out;
    size_t line_no = 1;  // header is line 1
    for (const auto& row : t.rows) {
        ++line_no;
        try {
            TransactionRecord rec;
            rec.block_number = std::llround(csv::parse_field(row.at(c_block)).value());
            rec.timestamp = std::llround(csv::parse_field(row.at(c_time)).value());
            rec.gas_price = csv::parse_field(row.at(c_price)).value();
            const std::string& flag = row.at(c_contract);
            rec.is_contract = (flag == "1" || flag == "true");
            if (rec.gas_price < 0.0) {
                note_reject(out.rejects, line_no, "negative gas_price");
                continue;
            }
            if (rec.block_number < 0) {
                note_reject(out.rejects, line_no, "negative block_number");
                continue;
            }
            out.records.push_back(rec);
        } catch (const std::exception& e) {
            note_reject(out.rejects, line_no, e.what());
        }
    }
    // Stable: preserves file order within a block.
    std::stable_sort(out.records.begin(), out.records.end(),
                     [](const TransactionRecord& a, const TransactionRecord& b) {
                         return a.block_number < b.block_number;
                     });
    return out;
}

std::vector<BlockRecord> parse_blocks(const std::string& path) {
    csv::Table t = csv::read_table(path);
    const int c_block = require_column(t, "block_number", path);
    const int c_time = require_column(t, "timestamp", path);
    const int c_fee = require_column(t, "base_fee_gwei", path);
    const int c_used = require_column(t, "gas_used", path);
    const int c_sgas = require_column(t, "size_gas", path);
    const int c_sbytes = require_column(t, "size_bytes", path);

    std::vector<BlockRecord> out;
    size_t line_no = 1;
    for (const auto& row : t.rows) {
        ++line_no;
        try {
            BlockRecord rec;
            rec.block_number = std::llround(csv::parse_field(row.at(c_block)).value());
            rec.timestamp = std::llround(csv::parse_field(row.at(c_time)).value());
            rec.base_fee = csv::parse_field(row.at(c_fee)).value();
            rec.gas_used = csv::parse_field(row.at(c_used)).value();
            rec.size_gas = csv::parse_field(row.at(c_sgas)).value();
            rec.size_bytes = csv::parse_field(row.at(c_sbytes)).value();
            out.push_back(rec);
        } catch (const std::exception& e) {
            throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    std::sort(out.begin(), out.end(),
              [](const BlockRecord& a, const BlockRecord& b) {
                  return a.block_number < b.block_number;
              });
    for (size_t i = 1; i < out.size(); ++i) {
        if (out[i].block_number == out[i - 1].block_number)
            throw DataError(path + ": duplicate block_number " +
                            std::to_string(out[i].block_number));
        if (out[i].timestamp <= out[i - 1].timestamp)
            throw DataError(path + ": non-increasing timestamp at block " +
                            std::to_string(out[i].block_number));
    }
    return out;
}

std::vector<TickRecord> parse_ticks(const std::string& path) {
    csv::Table t = csv::read_table(path);
    const int c_time = require_column(t, "open_time_ms", path);
    const int c_open = require_column(t, "open", path);

    std::vector<TickRecord> out;
    size_t line_no = 1;
    for (const auto& row : t.rows) {
        ++line_no;
        TickRecord rec;
        try {
            rec.timestamp = std::llround(csv::parse_field(row.at(c_time)).value() / 1000.0);
            rec.open_price = csv::parse_field(row.at(c_open)).value();
        } catch (const std::exception& e) {
            throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
        if (rec.open_price <= 0.0)
            throw DataError(path + " line " + std::to_string(line_no) +
                            ": non-positive open price");
        if (!out.empty()) {
            if (rec.timestamp == out.back().timestamp)
                throw DataError(path + " line " + std::to_string(line_no) +
                                ": duplicate timestamp");
            if (rec.timestamp < out.back().timestamp)
                throw DataError(path + " line " + std::to_string(line_no) +
                                ": non-monotone timestamp");
        }
        out.push_back(rec);
    }
    return out;
}

std::vector<BlockFeatureRow> aggregate_block_features(
    const std::vector<TransactionRecord>& txs,
    const std::vector<BlockRecord>& blocks,
    const std::vector<double>& percentiles) {
    for (double r : percentiles)
        if (r <= 0.0 || r >= 100.0)
            throw UsageError("percentile rank must lie in (0,100)");

    std::map<int64_t, std::vector<const TransactionRecord*>> by_block;
    for (const auto& tx : txs) by_block[tx.block_number].push_back(&tx);

    for (const auto& [bn, _] : by_block) {
        bool found = std::any_of(blocks.begin(), blocks.end(),
                                 [bn = bn](const BlockRecord& b) {
                                     return b.block_number == bn;
                                 });
        if (!found)
            throw DataError("transaction references unknown block " +
                            std::to_string(bn));
    }

    std::vector<BlockFeatureRow> out;
    out.reserve(blocks.size());
    for (const auto& blk : blocks) {
        BlockFeatureRow row;
        row.block_number = blk.block_number;
        row.timestamp = blk.timestamp;
        row.base_fee = blk.base_fee;
        row.gas_used = blk.gas_used;
        row.size_gas = blk.size_gas;
        row.size_bytes = blk.size_bytes;

        auto it = by_block.find(blk.block_number);
        if (it == by_block.end() || it->second.empty()) {
            row.tx_count = 0;
            for (double r : percentiles) row.pct_gas_price[r] = std::nullopt;
            out.push_back(row);
            continue;
        }
        std::vector<double> prices;
        prices.reserve(it->second.size());
        int64_t contracts = 0;
        for (const TransactionRecord* tx : it->second) {
            prices.push_back(tx->gas_price);
            if (tx->is_contract) ++contracts;
        }
        row.tx_count = static_cast<int64_t>(prices.size());
        row.contract_count = contracts;
        row.min_gas_price = *std::min_element(prices.begin(), prices.end());
        row.max_gas_price = *std::max_element(prices.begin(), prices.end());
        row.avg_gas_price = mean(prices);
        for (double r : percentiles)
            row.pct_gas_price[r] = percentile_interpolated(prices, r);
        out.push_back(row);
    }
    return out;
}

void write_block_features(const std::string& path,
                          const std::vector<BlockFeatureRow>& rows) {
    csv::Table t;
    std::vector<double> ranks;
    if (!rows.empty())
        for (const auto& [r, _] : rows.front().pct_gas_price) ranks.push_back(r);

    t.header = {"block_number", "timestamp", "min_gas_price", "max_gas_price",
                "avg_gas_price"};
    for (double r : ranks) {
        std::ostringstream os;
        os << "pct_" << r;
        t.header.push_back(os.str());
    }
    for (const char* c : {"tx_count", "contract_count", "base_fee", "gas_used",
                          "size_gas", "size_bytes"})
        t.header.push_back(c);

    auto opt_field = [](const std::optional<double>& v) {
        return v ? format_number(*v) : std::string();
    };
    for (const auto& row : rows) {
        std::vector<std::string> r;
        r.push_back(std::to_string(row.block_number));
        r.push_back(std::to_string(row.timestamp));
        r.push_back(opt_field(row.min_gas_price));
        r.push_back(opt_field(row.max_gas_price));
        r.push_back(opt_field(row.avg_gas_price));
        for (double rank : ranks) r.push_back(opt_field(row.pct_gas_price.at(rank)));
        r.push_back(std::to_string(row.tx_count));
        r.push_back(std::to_string(row.contract_count));
        r.push_back(format_number(row.base_fee));
        r.push_back(format_number(row.gas_used));
        r.push_back(format_number(row.size_gas));
        r.push_back(format_number(row.size_bytes));
        t.rows.push_back(std::move(r));
    }
    csv::write_table(path, t);
}

std::vector<BlockFeatureRow> read_block_features(const std::string& path) {
    csv::Table t = csv::read_table(path);
    std::vector<std::pair<double, int>> pct_cols;
    for (size_t i = 0; i < t.header.size(); ++i) {
        if (t.header[i].rfind("pct_", 0) == 0)
            pct_cols.emplace_back(std::stod(t.header[i].substr(4)),
                                  static_cast<int>(i));
    }
    const int c_block = require_column(t, "block_number", path);
    const int c_time = require_column(t, "timestamp", path);
    const int c_min = require_column(t, "min_gas_price", path);
    const int c_max = require_column(t, "max_gas_price", path);
    const int c_avg = require_column(t, "avg_gas_price", path);
    const int c_txc = require_column(t, "tx_count", path);
    const int c_cc = require_column(t, "contract_count", path);
    const int c_fee = require_column(t, "base_fee", path);
    const int c_used = require_column(t, "gas_used", path);
    const int c_sgas = require_column(t, "size_gas", path);
    const int c_sbytes = require_column(t, "size_bytes", path);

    std::vector<BlockFeatureRow> out;
    for (const auto& r : t.rows) {
        BlockFeatureRow row;
        row.block_number = std::llround(csv::parse_field(r.at(c_block)).value());
        row.timestamp = std::llround(csv::parse_field(r.at(c_time)).value());
        row.min_gas_price = csv::parse_field(r.at(c_min));
        row.max_gas_price = csv::parse_field(r.at(c_max));
        row.avg_gas_price = csv::parse_field(r.at(c_avg));
        for (const auto& [rank, col] : pct_cols)
            row.pct_gas_price[rank] = csv::parse_field(r.at(col));
        row.tx_count = std::llround(csv::parse_field(r.at(c_txc)).value());
        row.contract_count = std::llround(csv::parse_field(r.at(c_cc)).value());
        row.base_fee = csv::parse_field(r.at(c_fee)).value();
        row.gas_used = csv::parse_field(r.at(c_used)).value();
        row.size_gas = csv::parse_field(r.at(c_sgas)).value();
        row.size_bytes = csv::parse_field(r.at(c_sbytes)).value();
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace gascast::ingest
