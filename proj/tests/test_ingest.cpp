#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "gascast/errors.hpp"
#include "gascast/ingest.hpp"
#include "test_support.hpp"

using namespace gascast;
using testsupport::TempDir;
using testsupport::write_file;

namespace {

const char* kTxHeader = "block_number,timestamp,gas_price_gwei,is_contract\n";
const char* kBlockHeader =
    "block_number,timestamp,base_fee_gwei,gas_used,size_gas,size_bytes\n";

}  // namespace

TEST_CASE("parse_transactions: well-formed rows parse identically") {
    TempDir tmp("ingest");
    write_file(tmp.file("tx.csv"), std::string(kTxHeader) +
                                       "100,1000,25.5,0\n"
                                       "100,1000,30,1\n"
                                       "101,1012,12.25,0\n");
    const auto parsed = ingest::parse_transactions(tmp.file("tx.csv"));
    REQUIRE(parsed.records.size() == 3);
    CHECK(parsed.rejects.rejected == 0);
    CHECK(parsed.records[0].block_number == 100);
    CHECK(parsed.records[0].gas_price == doctest::Approx(25.5));
    CHECK(parsed.records[1].is_contract);
    CHECK(parsed.records[2].timestamp == 1012);
}

TEST_CASE("parse_transactions: negative gas price rejected with count 1") {
    TempDir tmp("ingest");
    write_file(tmp.file("tx.csv"), std::string(kTxHeader) +
                                       "100,1000,25.5,0\n"
                                       "100,1000,-3,0\n");
    const auto parsed = ingest::parse_transactions(tmp.file("tx.csv"));
    CHECK(parsed.records.size() == 1);
    CHECK(parsed.rejects.rejected == 1);
    REQUIRE(parsed.rejects.messages.size() == 1);
    CHECK(parsed.rejects.messages[0].find("line 3") != std::string::npos);
}

TEST_CASE("parse_transactions: malformed numeric rejected, rest kept") {
    TempDir tmp("ingest");
    write_file(tmp.file("tx.csv"), std::string(kTxHeader) +
                                       "100,1000,abc,0\n"
                                       "100,1000,9,0\n");
    const auto parsed = ingest::parse_transactions(tmp.file("tx.csv"));
    CHECK(parsed.records.size() == 1);
    CHECK(parsed.rejects.rejected == 1);
}

TEST_CASE("parse_transactions: missing mandatory column is a hard error") {
    TempDir tmp("ingest");
    write_file(tmp.file("tx.csv"), "block_number,timestamp,is_contract\n1,2,0\n");
    CHECK_THROWS_AS(ingest::parse_transactions(tmp.file("tx.csv")), DataError);
}

TEST_CASE("parse_transactions: record count equals line count minus header") {
    // Independent count: build the file and count newlines directly.
    TempDir tmp("ingest");
    std::ostringstream os;
    os << kTxHeader;
    size_t lines = 1;
    for (int b = 0; b < 40; ++b)
        for (int k = 0; k < 5; ++k) {
            os << (1000 + b) << ',' << (5000 + 12 * b) << ',' << (10 + k) << ",0\n";
            ++lines;
        }
    write_file(tmp.file("tx.csv"), os.str());

    size_t newline_count = 0;
    for (char c : testsupport::read_file(tmp.file("tx.csv")))
        if (c == '\n') ++newline_count;
    REQUIRE(newline_count == lines);

    const auto parsed = ingest::parse_transactions(tmp.file("tx.csv"));
    CHECK(parsed.records.size() == newline_count - 1);
    CHECK(parsed.rejects.rejected == 0);
}

TEST_CASE("parse_blocks: sorted, strictly increasing timestamps enforced") {
    TempDir tmp("ingest");
    write_file(tmp.file("blocks.csv"), std::string(kBlockHeader) +
                                           "101,1012,8,100,200,300\n"
                                           "100,1000,7,90,180,250\n");
    const auto blocks = ingest::parse_blocks(tmp.file("blocks.csv"));
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[0].block_number == 100);
    CHECK(blocks[1].base_fee == doctest::Approx(8.0));

    write_file(tmp.file("bad.csv"), std::string(kBlockHeader) +
                                        "100,1000,7,90,180,250\n"
                                        "101,1000,8,100,200,300\n");
    CHECK_THROWS_AS(ingest::parse_blocks(tmp.file("bad.csv")), DataError);
}

TEST_CASE("parse_ticks: 60 one-minute ticks span exactly 59 minutes") {
    TempDir tmp("ingest");
    std::ostringstream os;
    os << "open_time_ms,open\n";
    for (int i = 0; i < 60; ++i)
        os << (1600000000000ll + 60000ll * i) << ',' << (2500.0 + i) << '\n';
    write_file(tmp.file("ticks.csv"), os.str());
    const auto ticks = ingest::parse_ticks(tmp.file("ticks.csv"));
    REQUIRE(ticks.size() == 60);
    CHECK(ticks.back().timestamp - ticks.front().timestamp == 59 * 60);
    CHECK(ticks.front().open_price == doctest::Approx(2500.0));
}

TEST_CASE("parse_ticks: duplicate minute is an error naming the line") {
    TempDir tmp("ingest");
    write_file(tmp.file("ticks.csv"),
               "open_time_ms,open\n1600000000000,2500\n1600000000000,2501\n");
    CHECK_THROWS_WITH_AS(ingest::parse_ticks(tmp.file("ticks.csv")),
                         doctest::Contains("line 3"), DataError);
}

TEST_CASE("parse_ticks: min/max timestamps match the file boundaries") {
    TempDir tmp("ingest");
    std::ostringstream os;
    os << "open_time_ms,open\n";
    const int64_t first_ms = 1600001000000ll;
    const int64_t last_ms = first_ms + 60000ll * 99;
    for (int i = 0; i < 100; ++i)
        os << (first_ms + 60000ll * i) << ",3000\n";
    write_file(tmp.file("ticks.csv"), os.str());
    const auto ticks = ingest::parse_ticks(tmp.file("ticks.csv"));
    CHECK(ticks.front().timestamp == first_ms / 1000);
    CHECK(ticks.back().timestamp == last_ms / 1000);
}

TEST_CASE("aggregate: [10,20,30] gives min 10, max 30, avg 20, pct50 20") {
    std::vector<ingest::TransactionRecord> txs = {
        {1, 100, 10.0, false}, {1, 100, 20.0, true}, {1, 100, 30.0, false}};
    std::vector<ingest::BlockRecord> blocks = {{1, 100, 5.0, 1.0, 2.0, 3.0}};
    const auto rows = ingest::aggregate_block_features(txs, blocks, {50.0});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].min_gas_price.value() == doctest::Approx(10.0));
    CHECK(rows[0].max_gas_price.value() == doctest::Approx(30.0));
    CHECK(rows[0].avg_gas_price.value() == doctest::Approx(20.0));
    CHECK(rows[0].pct_gas_price.at(50.0).value() == doctest::Approx(20.0));
    CHECK(rows[0].tx_count == 3);
    CHECK(rows[0].contract_count == 1);
}

TEST_CASE("aggregate: single transaction makes every aggregate equal") {
    std::vector<ingest::TransactionRecord> txs = {{1, 100, 7.0, false}};
    std::vector<ingest::BlockRecord> blocks = {{1, 100, 5.0, 1.0, 2.0, 3.0}};
    const auto rows = ingest::aggregate_block_features(txs, blocks, {5.0, 95.0});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].min_gas_price.value() == 7.0);
    CHECK(rows[0].max_gas_price.value() == 7.0);
    CHECK(rows[0].avg_gas_price.value() == 7.0);
    CHECK(rows[0].pct_gas_price.at(5.0).value() == 7.0);
    CHECK(rows[0].pct_gas_price.at(95.0).value() == 7.0);
}

TEST_CASE("aggregate: prices 1..100 pct5 = 5.95 under linear interpolation") {
    std::vector<ingest::TransactionRecord> txs;
    for (int i = 1; i <= 100; ++i)
        txs.push_back({1, 100, static_cast<double>(i), false});
    std::vector<ingest::BlockRecord> blocks = {{1, 100, 5.0, 1.0, 2.0, 3.0}};
    const auto rows = ingest::aggregate_block_features(txs, blocks, {5.0});
    // Hand formula: position 0.05 * 99 = 4.95 -> 1 + 4.95 = 5.95.
    CHECK(rows[0].pct_gas_price.at(5.0).value() == doctest::Approx(5.95).epsilon(1e-12));
}

TEST_CASE("aggregate: empty block gets gap markers, not zeros") {
    std::vector<ingest::TransactionRecord> txs = {{1, 100, 9.0, false}};
    std::vector<ingest::BlockRecord> blocks = {{1, 100, 5.0, 1.0, 2.0, 3.0},
                                               {2, 112, 6.0, 1.0, 2.0, 3.0}};
    const auto rows = ingest::aggregate_block_features(txs, blocks, {50.0});
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].tx_count == 0);
    CHECK_FALSE(rows[1].min_gas_price.has_value());
    CHECK_FALSE(rows[1].pct_gas_price.at(50.0).has_value());
    CHECK(rows[1].base_fee == doctest::Approx(6.0));
}

TEST_CASE("aggregate: percentile rank outside (0,100) rejected") {
    std::vector<ingest::TransactionRecord> txs;
    std::vector<ingest::BlockRecord> blocks = {{1, 100, 5.0, 1.0, 2.0, 3.0}};
    CHECK_THROWS_AS(ingest::aggregate_block_features(txs, blocks, {0.0}),
                    UsageError);
    CHECK_THROWS_AS(ingest::aggregate_block_features(txs, blocks, {100.0}),
                    UsageError);
}

TEST_CASE("aggregate: transaction referencing an unknown block is an error") {
    std::vector<ingest::TransactionRecord> txs = {{9, 100, 5.0, false}};
    std::vector<ingest::BlockRecord> blocks = {{1, 100, 5.0, 1.0, 2.0, 3.0}};
    CHECK_THROWS_AS(ingest::aggregate_block_features(txs, blocks, {50.0}),
                    DataError);
}

TEST_CASE("block features round-trip through the interchange format") {
    std::vector<ingest::TransactionRecord> txs = {
        {1, 100, 10.0, false}, {1, 100, 30.0, true}, {3, 124, 5.5, false}};
    std::vector<ingest::BlockRecord> blocks = {{1, 100, 5.0, 1.0, 2.0, 3.0},
                                               {2, 112, 6.0, 1.5, 2.5, 3.5},
                                               {3, 124, 7.0, 2.0, 3.0, 4.0}};
    const auto rows = ingest::aggregate_block_features(txs, blocks, {25.0, 75.0});

    TempDir tmp("ingest");
    ingest::write_block_features(tmp.file("features.csv"), rows);
    const auto back = ingest::read_block_features(tmp.file("features.csv"));

    REQUIRE(back.size() == rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].block_number == rows[i].block_number);
        CHECK(back[i].timestamp == rows[i].timestamp);
        CHECK(back[i].tx_count == rows[i].tx_count);
        CHECK(back[i].contract_count == rows[i].contract_count);
        CHECK(back[i].min_gas_price.has_value() == rows[i].min_gas_price.has_value());
        if (rows[i].min_gas_price)
            CHECK(back[i].min_gas_price.value() ==
                  doctest::Approx(rows[i].min_gas_price.value()).epsilon(1e-15));
        for (const auto& [rank, v] : rows[i].pct_gas_price) {
            REQUIRE(back[i].pct_gas_price.count(rank) == 1);
            CHECK(back[i].pct_gas_price.at(rank).has_value() == v.has_value());
        }
        CHECK(back[i].base_fee == doctest::Approx(rows[i].base_fee));
        CHECK(back[i].size_bytes == doctest::Approx(rows[i].size_bytes));
    }
}
