#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gascast::series {

// Uniformly sampled multivariate frame. values/gap_mask are T x V, row-major.
struct FeatureFrame {
    int64_t start_time = 0;  // seconds
    int64_t step = 300;      // seconds
    std::vector<std::string> variables;
    std::vector<double> values;
    std::vector<uint8_t> gap_mask;  // 1 = gap (value undefined)

    size_t rows() const { return variables.empty() ? 0 : values.size() / variables.size(); }
    size_t cols() const { return variables.size(); }
    double& at(size_t t, size_t v) { return values[t * cols() + v]; }
    double at(size_t t, size_t v) const { return values[t * cols() + v]; }
    bool is_gap(size_t t, size_t v) const { return gap_mask[t * cols() + v] != 0; }
    void set_gap(size_t t, size_t v) { gap_mask[t * cols() + v] = 1; }

    int var_index(const std::string& name) const;
    // Column extraction; throws DataError if any cell in the column is a gap.
    std::vector<double> column(size_t v) const;
    std::vector<double> column_allow_gaps(size_t v) const;
    void validate() const;
};

struct ZScoreParams {
    double mu = 0.0;
    double sigma = 1.0;
};

struct TimedValue {
    int64_t timestamp = 0;
    double value = 0.0;
};

// Bucket-and-average one variable onto a uniform grid anchored at start_time.
// Buckets [start + k*window, start + (k+1)*window) with no samples are gaps.
struct DownsampledSeries {
    std::vector<double> values;
    std::vector<uint8_t> gap_mask;
};
DownsampledSeries downsample_mean(const std::vector<TimedValue>& rows,
                                  int64_t start_time, int64_t window,
                                  size_t n_buckets);

// One-sided cap: values above mu + k*sigma are clamped to mu + k*sigma.
// Constant series are returned unchanged (warning flag set on the result).
struct TruncateResult {
    std::vector<double> values;
    bool constant_input = false;
    double cap = 0.0;
};
TruncateResult truncate_outliers(const std::vector<double>& series, double k);

ZScoreParams zscore_fit(const std::vector<double>& series);
std::vector<double> zscore_apply(const std::vector<double>& series, const ZScoreParams& p);
std::vector<double> zscore_invert(const std::vector<double>& series, const ZScoreParams& p);

// Frame persistence: values as headered delimited text (gaps as empty fields)
// plus a key-value sidecar at <path>.meta holding start_time, step, variables.
void save_frame(const FeatureFrame& frame, const std::string& path);
FeatureFrame load_frame(const std::string& path);

}  // namespace gascast::series
