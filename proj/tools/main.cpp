// gascast: gas-price analysis and forecasting toolkit.
//
// Subcommands: ingest, frame, coherence, denoise, mp, run, evaluate, baseline.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gascast/cwt.hpp"
#include "gascast/dwt.hpp"
#include "gascast/errors.hpp"
#include "gascast/experiment.hpp"
#include "gascast/frame.hpp"
#include "gascast/ingest.hpp"
#include "gascast/matrix_profile.hpp"
#include "gascast/metrics.hpp"
#include "gascast/strategy.hpp"

namespace {

using namespace gascast;

std::vector<double> read_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);
    std::vector<double> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            size_t pos = 0;
            out.push_back(std::stod(line, &pos));
        } catch (const std::exception&) {
            throw DataError(path + " line " + std::to_string(lineno) +
                            ": not a number: " + line);
        }
    }
    return out;
}

std::vector<double> frame_column(const series::FeatureFrame& frame,
                                 const std::string& name) {
    const int idx = frame.var_index(name);
    if (idx < 0) throw DataError("unknown variable: " + name);
    return frame.column(static_cast<size_t>(idx));
}

int cmd_ingest(const std::string& tx_path, const std::string& blocks_path,
               const std::vector<double>& percentiles, const std::string& out) {
    const auto txs = ingest::parse_transactions(tx_path);
    const auto blocks = ingest::parse_blocks(blocks_path);
    const auto rows =
        ingest::aggregate_block_features(txs.records, blocks, percentiles);
    ingest::write_block_features(out, rows);
    std::cout << "blocks " << rows.size() << '\n'
              << "transactions " << txs.records.size() << '\n'
              << "rejected " << txs.rejects.rejected << '\n';
    for (const auto& m : txs.rejects.messages) std::cout << "reject " << m << '\n';
    return 0;
}

int cmd_frame(const std::string& features, const std::string& ticks_path,
              int64_t resolution, const std::string& out) {
    const auto rows = ingest::read_block_features(features);
    std::vector<ingest::TickRecord> ticks;
    if (!ticks_path.empty()) ticks = ingest::parse_ticks(ticks_path);
    const auto frame =
        experiment::build_frame_from_features(rows, ticks, resolution);
    series::save_frame(frame, out);
    std::cout << "rows " << frame.rows() << '\n'
              << "variables " << frame.cols() << '\n';
    return 0;
}

int cmd_coherence(const std::string& frame_path, const std::string& var_x,
                  const std::string& var_y, double omega0, size_t suboctaves,
                  const std::string& out) {
    const auto frame = series::load_frame(frame_path);
    const auto x = frame_column(frame, var_x);
    const auto y = frame_column(frame, var_y);

    wavelets::CoherenceParams params;
    params.omega0 = omega0;
    params.dt = static_cast<double>(frame.step);
    params.suboctaves = suboctaves;
    const auto map = wavelets::wavelet_coherence(x, y, params);
    wavelets::export_coherence(map, out);

    // Summary: mean in-cone coherence per scale band.
    std::cout << std::setprecision(6);
    for (size_t s = 0; s < map.scales.size(); ++s) {
        double sum = 0.0;
        size_t n = 0;
        for (size_t t = 0; t < map.n_times; ++t)
            if (map.in_cone(t, s)) {
                sum += map.r2[map.idx(t, s)];
                ++n;
            }
        std::cout << "scale " << map.scales[s] << " mean_r2 "
                  << (n ? sum / static_cast<double>(n) : 0.0) << " in_cone " << n
                  << '\n';
    }
    return 0;
}

int cmd_denoise(const std::string& frame_path, const std::string& variable,
                const std::string& wavelet, size_t level,
                std::vector<size_t> levels, double lambda,
                const std::string& out) {
    const auto frame = series::load_frame(frame_path);
    const auto raw = frame_column(frame, variable);
    const auto& bank = wavelets::filter_bank(wavelet);
    if (levels.empty())
        for (size_t j = 1; j <= level; ++j) levels.push_back(j);
    const auto den =
        wavelets::hard_threshold_denoise(raw, bank, level, levels, lambda);
    {
        std::ofstream os(out, std::ios::binary);
        if (!os) throw DataError("cannot write: " + out);
        os << std::setprecision(17);
        for (double v : den.denoised) os << v << '\n';
    }
    const auto rep = wavelets::denoise_report(raw, den.denoised);
    std::cout << std::setprecision(17);
    std::cout << "wavelet " << wavelet << '\n'
              << "lambda " << lambda << '\n'
              << "rmse " << rep.rmse << '\n'
              << "snr_db " << rep.snr_db << '\n';
    for (const auto& [j, lt] : den.params.per_level)
        std::cout << "level " << j << " mad " << lt.mad << " sigma " << lt.sigma
                  << " u " << lt.u << " zeroed " << lt.zeroed << '\n';
    return 0;
}

int cmd_mp(const std::string& frame_path, const std::string& variable,
           size_t window, bool rolling, size_t step, bool reversed,
           const std::string& out) {
    const auto frame = series::load_frame(frame_path);
    auto x = frame_column(frame, variable);
    if (rolling) {
        const auto snaps = mp::mp_rolling(x, window, step);
        for (const auto& snap : snaps) {
            std::ostringstream path;
            path << out << '.' << snap.prefix_length;
            mp::save_profile(snap.profile, path.str());
            std::cout << "snapshot " << snap.prefix_length << ' ' << path.str()
                      << '\n';
        }
        return 0;
    }
    auto prof = mp::mp_fast(x, window);
    if (reversed) {
        std::vector<double> rev(x.rbegin(), x.rend());
        prof = mp::reverse_mp(mp::mp_fast(rev, window));
    }
    mp::save_profile(prof, out);
    std::cout << "windows " << prof.values.size() << '\n';
    if (prof.sigma_floored) std::cout << "sigma_floored 1\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& output_override) {
    auto cfg = experiment::ExperimentConfig::parse_file(config_path);
    if (!output_override.empty()) cfg.output_dir = output_override;
    const auto result = experiment::run_experiment(cfg);
    std::cout << "output_dir " << result.output_dir << '\n'
              << "train_examples " << result.train_examples << '\n'
              << "val_examples " << result.val_examples << '\n'
              << "aborted_forecasts " << result.aborted_forecasts << '\n';
    std::cout << std::setprecision(6);
    const auto& avg = result.report.avg_all;
    std::cout << "avg_rmse " << avg.rmse << '\n'
              << "avg_mae " << avg.mae << '\n'
              << "avg_mape " << avg.mape << '\n';
    if (avg.r2) std::cout << "avg_r2 " << *avg.r2 << '\n';
    return 0;
}

int cmd_evaluate(const std::string& forecast_path, const std::string& out) {
    // Recomputes the per-lookahead table from a run's forecast.tsv.
    std::ifstream in(forecast_path);
    if (!in) throw DataError("cannot open: " + forecast_path);
    std::string line;
    if (!std::getline(in, line) || line != "example\tlookahead\tactual\tpredicted")
        throw DataError("not a forecast table: " + forecast_path);
    std::map<size_t, std::pair<std::vector<double>, std::vector<double>>> per;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string ex, la, act, pred;
        if (!std::getline(ss, ex, '\t') || !std::getline(ss, la, '\t') ||
            !std::getline(ss, act, '\t') || !std::getline(ss, pred, '\t'))
            throw DataError(forecast_path + " line " + std::to_string(lineno) +
                            ": expected 4 tab-separated fields");
        auto& [ys, ps] = per[std::stoull(la)];
        ys.push_back(std::stod(act));
        ps.push_back(std::stod(pred));
    }
    if (per.empty()) throw DataError("no forecast rows in " + forecast_path);

    std::vector<std::pair<std::string, series::MetricReport>> table;
    std::vector<series::MetricReport> all;
    for (const auto& [h, yp] : per) {
        all.push_back(series::metrics(yp.first, yp.second));
        table.emplace_back("L" + std::to_string(h), all.back());
    }
    if (all.size() > 1) table.emplace_back("AvgAll", forecast::average_metrics(all));
    forecast::write_report_table(out, table);
    std::cout << "lookaheads " << per.size() << '\n' << "table " << out << '\n';
    return 0;
}

int cmd_baseline(const std::string& method, const std::string& minima_path,
                 double candidate, bool candidate_set) {
    const auto minima = read_values(minima_path);
    std::cout << std::setprecision(17);
    if (method == "geth") {
        std::cout << "recommendation " << forecast::baseline_geth(minima) << '\n';
    } else if (method == "gse") {
        if (!candidate_set)
            throw UsageError("baseline gse requires --candidate");
        std::cout << "likelihood " << forecast::baseline_gse(minima, candidate)
                  << '\n';
    } else {
        throw UsageError("unknown baseline method: " + method);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gas-price analysis and forecasting toolkit"};
    app.require_subcommand(1);

    // ingest
    std::string tx_path, blocks_path, out_path;
    std::vector<double> percentiles{25.0, 50.0, 75.0, 95.0};
    auto* ingest_cmd =
        app.add_subcommand("ingest", "aggregate per-block features from dumps");
    ingest_cmd->add_option("--transactions", tx_path, "transactions dump")->required();
    ingest_cmd->add_option("--blocks", blocks_path, "blocks dump")->required();
    ingest_cmd->add_option("--percentiles", percentiles,
                           "gas-price percentile ranks in (0,100)");
    ingest_cmd->add_option("--out", out_path, "block-features output")->required();

    // frame
    std::string features_path, ticks_path, frame_out;
    int64_t resolution = 300;
    auto* frame_cmd =
        app.add_subcommand("frame", "build a uniform feature frame");
    frame_cmd->add_option("--features", features_path, "block-features file")->required();
    frame_cmd->add_option("--ticks", ticks_path, "exchange ticks (adds eth_usdt)");
    frame_cmd->add_option("--resolution", resolution, "seconds per row (default 300)");
    frame_cmd->add_option("--out", frame_out, "frame output")->required();

    // coherence
    std::string coh_frame, coh_x, coh_y, coh_out;
    double omega0 = 6.0;
    size_t suboctaves = 8;
    auto* coh_cmd =
        app.add_subcommand("coherence", "wavelet coherence of two variables");
    coh_cmd->add_option("--frame", coh_frame, "frame file")->required();
    coh_cmd->add_option("--x", coh_x, "first variable")->required();
    coh_cmd->add_option("--y", coh_y, "second variable")->required();
    coh_cmd->add_option("--omega0", omega0, "Morlet center frequency");
    coh_cmd->add_option("--suboctaves", suboctaves, "scales per octave");
    coh_cmd->add_option("--out", coh_out, "coherence grid output")->required();

    // denoise
    std::string den_frame, den_var, den_wavelet = "db4", den_out;
    size_t den_level = 2;
    std::vector<size_t> den_levels;
    double den_lambda = 3.0;
    auto* den_cmd =
        app.add_subcommand("denoise", "wavelet hard-threshold denoising");
    den_cmd->add_option("--frame", den_frame, "frame file")->required();
    den_cmd->add_option("--variable", den_var, "variable to denoise")->required();
    den_cmd->add_option("--wavelet", den_wavelet, "db4 or bior3.3");
    den_cmd->add_option("--level", den_level, "decomposition depth J");
    den_cmd->add_option("--levels", den_levels, "detail levels to threshold");
    den_cmd->add_option("--lambda", den_lambda, "threshold scaling");
    den_cmd->add_option("--out", den_out, "denoised series output")->required();

    // mp
    std::string mp_frame, mp_var, mp_out;
    size_t mp_window = 288, mp_step = 288;
    bool mp_rolling = false, mp_reversed = false;
    auto* mp_cmd = app.add_subcommand("mp", "matrix profile of a variable");
    mp_cmd->add_option("--frame", mp_frame, "frame file")->required();
    mp_cmd->add_option("--variable", mp_var, "variable")->required();
    mp_cmd->add_option("--window", mp_window, "subsequence length m");
    mp_cmd->add_flag("--rolling", mp_rolling, "emit rolling prefix snapshots");
    mp_cmd->add_option("--step", mp_step, "rolling prefix stride");
    mp_cmd->add_flag("--reversed", mp_reversed, "profile of the reversed series");
    mp_cmd->add_option("--out", mp_out, "profile output")->required();

    // run
    std::string run_config, run_output;
    auto* run_cmd = app.add_subcommand("run", "full experiment from a config");
    run_cmd->add_option("--config", run_config, "experiment config file")->required();
    run_cmd->add_option("--output", run_output, "override output directory");

    // evaluate
    std::string eval_forecast, eval_out;
    auto* eval_cmd =
        app.add_subcommand("evaluate", "per-lookahead metrics from a forecast table");
    eval_cmd->add_option("--forecast", eval_forecast, "forecast.tsv from a run")->required();
    eval_cmd->add_option("--out", eval_out, "metrics table output")->required();

    // baseline
    std::string base_method, base_minima;
    double base_candidate = 0.0;
    auto* base_cmd = app.add_subcommand("baseline", "heuristic oracle baselines");
    base_cmd->add_option("--method", base_method, "geth or gse")->required();
    base_cmd->add_option("--minima", base_minima,
                         "trailing block minima, one per line")->required();
    auto* cand_opt = base_cmd->add_option("--candidate", base_candidate,
                                          "candidate gas price (gse)");

    try {
        app.parse(argc, argv);
        if (*ingest_cmd)
            return cmd_ingest(tx_path, blocks_path, percentiles, out_path);
        if (*frame_cmd)
            return cmd_frame(features_path, ticks_path, resolution, frame_out);
        if (*coh_cmd)
            return cmd_coherence(coh_frame, coh_x, coh_y, omega0, suboctaves, coh_out);
        if (*den_cmd)
            return cmd_denoise(den_frame, den_var, den_wavelet, den_level,
                               den_levels, den_lambda, den_out);
        if (*mp_cmd)
            return cmd_mp(mp_frame, mp_var, mp_window, mp_rolling, mp_step,
                          mp_reversed, mp_out);
        if (*run_cmd) return cmd_run(run_config, run_output);
        if (*eval_cmd) return cmd_evaluate(eval_forecast, eval_out);
        if (*base_cmd)
            return cmd_baseline(base_method, base_minima, base_candidate,
                                cand_opt->count() > 0);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const gascast::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const gascast::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const gascast::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
