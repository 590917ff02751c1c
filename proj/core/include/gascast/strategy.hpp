#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gascast/frame.hpp"
#include "gascast/metrics.hpp"
#include "gascast/neural.hpp"
#include "gascast/windowing.hpp"

namespace gascast::forecast {

enum class StrategyKind {
    Recursive,
    Direct,
    Hybrid,
    MultiOutput,
    MultiOutputBlockRecursive,
};

enum class ModelArch {
    Linear,        // last step -> dense; fixed-parameter test models
    Lstm,          // single LSTM + linear head
    AttSingleHead, // one 200-unit attention head
    MultiAtt1,     // one head per input variable, 30 units
    MultiAtt2,     // two banks of heads, 30 units
    CnnLstm,       // per-variable conv heads -> two 100-unit LSTMs
};

StrategyKind parse_strategy_kind(const std::string& s);
ModelArch parse_model_arch(const std::string& s);

struct StrategySpec {
    StrategyKind kind = StrategyKind::Recursive;
    ModelArch arch = ModelArch::Lstm;
    size_t horizon = 1;     // H
    size_t input_len = 288; // n: 1 day at 5-min resolution
    std::vector<std::string> variables;  // input variable order
    std::string target = "min_gas_price";
    bool use_mp = false;
    bool mp_reversed = false;            // requires use_mp
    std::string denoise_wavelet;         // empty = raw target
    size_t lstm_units = 50;
    size_t att_units = 30;
    size_t single_head_units = 200;
    size_t cnn_filters = 9;
    size_t cnn_kernel = 7;
    size_t cnn_lstm_units = 100;
    size_t block_size = 0;  // block-recursive; 0 degenerates to plain multi-output

    void validate() const;
};

// Builds the network for one model of the catalog. out_width is 1 for
// single-step members and H (or the block size) for multi-output models.
neural::Network build_network(const StrategySpec& spec, size_t n_rows,
                              size_t n_vars, size_t out_width);

struct FitContext {
    series::WindowedDataset train;  // normalized
    series::WindowedDataset val;    // normalized
    std::vector<series::ZScoreParams> var_params;  // per variable
    size_t target_index = 0;
};

struct TrainedStrategy {
    StrategySpec spec;
    uint64_t seed = 0;
    size_t n_vars = 0;
    size_t target_index = 0;
    std::vector<series::ZScoreParams> var_params;
    std::vector<std::unique_ptr<neural::Network>> models;
    std::vector<neural::TrainReport> reports;
};

TrainedStrategy fit_recursive(const StrategySpec& spec, const FitContext& ctx,
                              uint64_t seed);
TrainedStrategy fit_direct(const StrategySpec& spec, const FitContext& ctx,
                           uint64_t seed);
// f_0 is a plain 1-step model; f_h consumes the input window extended with
// the previous members' predictions. Only the target channel carries new
// information; exogenous channels repeat their last observed value.
TrainedStrategy fit_hybrid(const StrategySpec& spec, const FitContext& ctx,
                           uint64_t seed);
TrainedStrategy fit_multioutput(const StrategySpec& spec, const FitContext& ctx,
                                uint64_t seed);
TrainedStrategy fit(const StrategySpec& spec, const FitContext& ctx,
                    uint64_t seed);

struct HorizonForecast {
    std::vector<double> values_gwei;  // one per lookahead 1..H
    bool aborted = false;             // recursive divergence guard tripped
};

// history: input_len x n_vars in original (denormalized) units.
HorizonForecast forecast(const TrainedStrategy& trained,
                         const neural::Matrix& history);

struct LookaheadReport {
    std::vector<series::MetricReport> per_lookahead;  // size H
    series::MetricReport avg_first5;
    series::MetricReport avg_all;
};

// Denormalized per-lookahead metrics over a held-out normalized dataset.
LookaheadReport evaluate(const TrainedStrategy& trained,
                         const series::WindowedDataset& validation);

// Arithmetic mean of metric reports; r2 present only when present in all.
series::MetricReport average_metrics(const std::vector<series::MetricReport>& reports);
LookaheadReport average_reports(const std::vector<LookaheadReport>& reports);

// Table rows in the documented order: Variable, RMSE, MAE, MAPE, R2.
void write_report_table(
    const std::string& path,
    const std::vector<std::pair<std::string, series::MetricReport>>& rows);

// 60th percentile of the trailing 20 block minima (same interpolation rule
// as ingest).
double baseline_geth(std::span<const double> recent_minima);

// Fraction of the trailing 200 blocks whose minimum gas price is at or below
// the candidate.
double baseline_gse(std::span<const double> recent_minima, double candidate);

}  // namespace gascast::forecast
