#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "gascast/cwt.hpp"
#include "gascast/frame.hpp"
#include "test_support.hpp"

using testsupport::TempDir;
using testsupport::read_file;
using testsupport::write_file;

namespace {

// Runs the installed binary, captures combined output, returns the exit code.
int run_cli(const std::string& args, const std::string& capture_path) {
    const std::string cmd = std::string(GASCAST_CLI_PATH) + " " + args + " > " +
                            capture_path + " 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

void write_sample_dumps(const TempDir& tmp) {
    std::ostringstream tx;
    tx << "block_number,timestamp,gas_price_gwei,is_contract\n";
    std::ostringstream blocks;
    blocks << "block_number,timestamp,base_fee_gwei,gas_used,size_gas,size_bytes\n";
    for (int b = 0; b < 120; ++b) {
        blocks << (100 + b) << ',' << (1000 + 12 * b) << ",5,100,200,300\n";
        for (int k = 0; k < 3; ++k)
            tx << (100 + b) << ',' << (1000 + 12 * b) << ','
               << (10.0 + (b % 7) + k) << ',' << (k % 2) << '\n';
    }
    write_file(tmp.file("tx.csv"), tx.str());
    write_file(tmp.file("blocks.csv"), blocks.str());
}

}  // namespace

TEST_CASE("exit codes: usage, data, success") {
    TempDir tmp("cli");
    const std::string log = tmp.file("log.txt");
    // No subcommand is a usage error.
    CHECK(run_cli("", log) == 1);
    // Unknown flag is a usage error.
    CHECK(run_cli("ingest --bogus x", log) == 1);
    // Missing input file is a data error.
    CHECK(run_cli("ingest --transactions " + tmp.file("nope.csv") +
                      " --blocks " + tmp.file("nope2.csv") + " --out " +
                      tmp.file("f.csv"),
                  log) == 2);
    // Help succeeds.
    CHECK(run_cli("--help", log) == 0);
}

TEST_CASE("pipeline: ingest -> frame -> denoise -> mp -> run -> evaluate") {
    TempDir tmp("cli");
    const std::string log = tmp.file("log.txt");
    write_sample_dumps(tmp);

    // ingest
    CHECK(run_cli("ingest --transactions " + tmp.file("tx.csv") + " --blocks " +
                      tmp.file("blocks.csv") + " --out " + tmp.file("features.csv"),
                  log) == 0);
    REQUIRE(std::filesystem::exists(tmp.file("features.csv")));
    CHECK(read_file(log).find("blocks 120") != std::string::npos);
    CHECK(read_file(log).find("rejected 0") != std::string::npos);

    // Independent row count: one line per block plus the header.
    size_t lines = 0;
    for (char c : read_file(tmp.file("features.csv")))
        if (c == '\n') ++lines;
    CHECK(lines == 121);

    // frame at 60-second resolution so 120 blocks spread over many rows
    CHECK(run_cli("frame --features " + tmp.file("features.csv") +
                      " --resolution 60 --out " + tmp.file("frame.csv"),
                  log) == 0);
    REQUIRE(std::filesystem::exists(tmp.file("frame.csv")));

    // denoise the target column
    CHECK(run_cli("denoise --frame " + tmp.file("frame.csv") +
                      " --variable min_gas_price --wavelet db4 --level 2"
                      " --lambda 3 --out " + tmp.file("denoised.txt"),
                  log) == 0);
    CHECK(read_file(log).find("rmse ") != std::string::npos);
    CHECK(read_file(log).find("snr_db ") != std::string::npos);

    // matrix profile
    CHECK(run_cli("mp --frame " + tmp.file("frame.csv") +
                      " --variable min_gas_price --window 4 --out " +
                      tmp.file("profile.csv"),
                  log) == 0);
    CHECK(read_file(tmp.file("profile.csv")).rfind("value,neighbor", 0) == 0);

    // unknown variable is a data error
    CHECK(run_cli("mp --frame " + tmp.file("frame.csv") +
                      " --variable nope --window 4 --out " + tmp.file("p2.csv"),
                  log) == 2);

    // run an experiment from a config
    write_file(tmp.file("run.cfg"),
               "frame = " + tmp.file("frame.csv") + "\n" +
                   "resolution = 60\n"
                   "variables = min_gas_price\n"
                   "target = min_gas_price\n"
                   "strategy = recursive\n"
                   "arch = linear\n"
                   "horizon = 1\n"
                   "input_len = 4\n"
                   "seed = 3\n"
                   "output_dir = " + tmp.file("run_out") + "\n");
    CHECK(run_cli("run --config " + tmp.file("run.cfg"), log) == 0);
    CHECK(read_file(log).find("avg_rmse ") != std::string::npos);
    REQUIRE(std::filesystem::exists(tmp.file("run_out/forecast.tsv")));

    // evaluate the emitted forecast table
    CHECK(run_cli("evaluate --forecast " + tmp.file("run_out/forecast.tsv") +
                      " --out " + tmp.file("metrics.tsv"),
                  log) == 0);
    CHECK(read_file(tmp.file("metrics.tsv")).rfind("Variable\tRMSE\tMAE\tMAPE\tR2", 0) == 0);
}

TEST_CASE("coherence: self-coherence summary and grid row count") {
    TempDir tmp("cli");
    const std::string log = tmp.file("log.txt");
    // Two-variable frame: y and a noisy copy.
    const auto x = testsupport::sinusoid_ar1(200, 81, 6.0, 20.0, 0.4, 0.5, 32);
    gascast::series::FeatureFrame f;
    f.start_time = 0;
    f.step = 300;
    f.variables = {"a", "b"};
    for (size_t i = 0; i < x.size(); ++i) {
        f.values.push_back(x[i]);
        f.values.push_back(x[i] * 0.9 + 1.0);
    }
    f.gap_mask.assign(f.values.size(), 0);
    gascast::series::save_frame(f, tmp.file("frame2.csv"));

    CHECK(run_cli("coherence --frame " + tmp.file("frame2.csv") +
                      " --x a --y a --out " + tmp.file("grid.csv"),
                  log) == 0);
    // Every reported in-cone band mean should be ~1 for self-coherence.
    std::istringstream summary(read_file(log));
    std::string tok;
    size_t bands = 0;
    while (summary >> tok) {
        if (tok != "mean_r2") continue;
        double v;
        summary >> v;
        ++bands;
        CHECK(v > 0.999);
    }
    CHECK(bands > 0);

    // Grid rows = |tau| * |scales| + header.
    const auto grid = read_file(tmp.file("grid.csv"));
    size_t lines = 0;
    for (char c : grid)
        if (c == '\n') ++lines;
    const auto back = [&] {
        return gascast::wavelets::read_coherence(tmp.file("grid.csv"));
    }();
    CHECK(lines == 1 + back.n_times * back.scales.size());

    // Unknown variable name is a data error.
    CHECK(run_cli("coherence --frame " + tmp.file("frame2.csv") +
                      " --x a --y zzz --out " + tmp.file("g2.csv"),
                  log) == 2);
}

TEST_CASE("baseline subcommand") {
    TempDir tmp("cli");
    const std::string log = tmp.file("log.txt");
    std::ostringstream minima;
    for (int i = 1; i <= 20; ++i) minima << i << '\n';
    write_file(tmp.file("minima.txt"), minima.str());
    std::ostringstream minima200;
    for (int i = 1; i <= 200; ++i) minima200 << i << '\n';
    write_file(tmp.file("minima200.txt"), minima200.str());

    CHECK(run_cli("baseline --method geth --minima " + tmp.file("minima.txt"),
                  log) == 0);
    CHECK(read_file(log).find("recommendation 12.4") != std::string::npos);

    CHECK(run_cli("baseline --method gse --minima " + tmp.file("minima200.txt") +
                      " --candidate 1000",
                  log) == 0);
    CHECK(read_file(log).find("likelihood 1") != std::string::npos);

    // gse without a candidate is a usage error.
    CHECK(run_cli("baseline --method gse --minima " + tmp.file("minima200.txt"),
                  log) == 1);
}
