#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gascast/frame.hpp"
#include "gascast/ingest.hpp"
#include "gascast/strategy.hpp"

namespace gascast::experiment {

// Key-value experiment description (one `key = value` per line, `#` comments).
// Exactly one of `frame` / `features` must name the data source; `seed` is
// mandatory so every run is replayable.
struct ExperimentConfig {
    // data
    std::string frame_path;     // saved FeatureFrame (csv + .meta sidecar)
    std::string features_path;  // per-block feature rows (ingest output)
    std::string ticks_path;     // optional exchange ticks, adds eth_usdt
    int64_t resolution = 300;   // seconds per frame row
    std::vector<std::string> variables;  // empty = every frame variable
    std::string target = "min_gas_price";

    // preprocessing
    double truncate_k = 0.0;             // 0 = no outlier cap
    std::string denoise_wavelet;         // "" = raw target
    double denoise_lambda = 3.0;
    size_t denoise_level = 2;            // decomposition depth J
    std::vector<size_t> denoise_levels;  // detail levels to threshold; empty = all
    bool use_mp = false;
    bool mp_reversed = false;
    size_t mp_window = 288;

    // model
    forecast::StrategyKind strategy = forecast::StrategyKind::Recursive;
    forecast::ModelArch arch = forecast::ModelArch::Lstm;
    size_t horizon = 1;
    size_t input_len = 288;
    size_t block_size = 0;
    size_t lstm_units = 50;
    size_t att_units = 30;
    size_t single_head_units = 200;
    size_t epochs = 15;
    size_t batch_size = 32;

    uint64_t seed = 0;
    bool seed_set = false;
    std::string output_dir;

    static ExperimentConfig parse_file(const std::string& path);
    static ExperimentConfig parse_text(const std::string& text);
    void validate() const;
    forecast::StrategySpec to_spec() const;
    // Canonical key = value rendering; parse_text(echo()) round-trips.
    std::string echo() const;
};

struct RunResult {
    std::string output_dir;
    forecast::LookaheadReport report;
    size_t train_examples = 0;
    size_t val_examples = 0;
    size_t aborted_forecasts = 0;
};

// End-to-end pipeline: load -> preprocess -> normalize on the training span
// only -> window -> fit -> evaluate -> write reports. Outputs carry no
// wall-clock state, so two runs of the same config are byte-identical. On a
// stage failure the outputs produced so far are kept and manifest.txt names
// the failed stage before the error is rethrown.
RunResult run_experiment(const ExperimentConfig& cfg);

// Uniform frame from per-block rows: each selected column is bucket-averaged
// onto the resolution grid; empty buckets and absent aggregates become gaps.
// Ticks (if any) contribute an eth_usdt column on the same grid.
series::FeatureFrame build_frame_from_features(
    const std::vector<ingest::BlockFeatureRow>& rows,
    const std::vector<ingest::TickRecord>& ticks, int64_t resolution);

// FNV-1a 64-bit content hashes used by the run manifest.
uint64_t fnv1a(const void* data, size_t len);
uint64_t fnv1a_file(const std::string& path);

}  // namespace gascast::experiment
