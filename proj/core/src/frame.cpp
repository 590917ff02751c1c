#include "gascast/frame.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "gascast/csv.hpp"
#include "gascast/errors.hpp"
#include "gascast/stats.hpp"

namespace gascast::series {

int FeatureFrame::var_index(const std::string& name) const {
    for (size_t i = 0; i < variables.size(); ++i)
        if (variables[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<double> FeatureFrame::column(size_t v) const {
    std::vector<double> out;
    out.reserve(rows());
    for (size_t t = 0; t < rows(); ++t) {
        if (is_gap(t, v))
            throw DataError("gap in variable '" + variables[v] + "' at row " +
                            std::to_string(t));
        out.push_back(at(t, v));
    }
    return out;
}

std::vector<double> FeatureFrame::column_allow_gaps(size_t v) const {
    std::vector<double> out;
    out.reserve(rows());
    for (size_t t = 0; t < rows(); ++t) out.push_back(at(t, v));
    return out;
}

void FeatureFrame::validate() const {
    if (step <= 0) throw DataError("frame step must be positive");
    if (values.size() != gap_mask.size())
        throw DataError("frame values/gap_mask size mismatch");
    for (size_t i = 0; i < variables.size(); ++i)
        for (size_t j = i + 1; j < variables.size(); ++j)
            if (variables[i] == variables[j])
                throw DataError("duplicate variable name: " + variables[i]);
    for (size_t t = 0; t < rows(); ++t)
        for (size_t v = 0; v < cols(); ++v)
            if (!is_gap(t, v) && !std::isfinite(at(t, v)))
                throw DataError("non-finite value in unmasked cell");
}

DownsampledSeries downsample_mean(const std::vector<TimedValue>& rows,
                                  int64_t start_time, int64_t window,
                                  size_t n_buckets) {
    if (rows.empty()) throw DataError("downsample_mean: empty input");
    if (window <= 0) throw UsageError("downsample_mean: window must be positive");

    std::vector<double> sums(n_buckets, 0.0);
    std::vector<size_t> counts(n_buckets, 0);
    for (const auto& r : rows) {
        if (r.timestamp < start_time) continue;
        const size_t k = static_cast<size_t>((r.timestamp - start_time) / window);
        if (k >= n_buckets) continue;
        sums[k] += r.value;
        counts[k] += 1;
    }
    DownsampledSeries out;
    out.values.resize(n_buckets, 0.0);
    out.gap_mask.resize(n_buckets, 0);
    for (size_t k = 0; k < n_buckets; ++k) {
        if (counts[k] == 0) {
            out.gap_mask[k] = 1;
        } else {
            out.values[k] = sums[k] / static_cast<double>(counts[k]);
        }
    }
    return out;
}

TruncateResult truncate_outliers(const std::vector<double>& series, double k) {
    if (series.empty()) throw DataError("truncate_outliers: empty series");
    TruncateResult res;
    const double mu = mean(series);
    const double sigma = stddev_pop(series);
    if (sigma == 0.0) {
        res.values = series;
        res.constant_input = true;
        res.cap = mu;
        return res;
    }
    res.cap = mu + k * sigma;
    res.values.reserve(series.size());
    for (double x : series) res.values.push_back(x > res.cap ? res.cap : x);
    return res;
}

ZScoreParams zscore_fit(const std::vector<double>& series) {
    if (series.empty()) throw DataError("zscore_fit: empty series");
    ZScoreParams p;
    p.mu = mean(series);
    p.sigma = stddev_pop(series);
    if (p.sigma <= 0.0) throw NumericalError("zscore_fit: zero variance");
    return p;
}

std::vector<double> zscore_apply(const std::vector<double>& series,
                                 const ZScoreParams& p) {
    std::vector<double> out;
    out.reserve(series.size());
    for (double x : series) out.push_back((x - p.mu) / p.sigma);
    return out;
}

std::vector<double> zscore_invert(const std::vector<double>& series,
                                  const ZScoreParams& p) {
    std::vector<double> out;
    out.reserve(series.size());
    for (double x : series) out.push_back(x * p.sigma + p.mu);
    return out;
}

void save_frame(const FeatureFrame& frame, const std::string& path) {
    frame.validate();
    csv::Table t;
    t.header = frame.variables;
    for (size_t r = 0; r < frame.rows(); ++r) {
        std::vector<std::string> row;
        row.reserve(frame.cols());
        for (size_t v = 0; v < frame.cols(); ++v) {
            if (frame.is_gap(r, v)) {
                row.emplace_back();
            } else {
                std::ostringstream os;
                os.precision(17);
                os << frame.at(r, v);
                row.push_back(os.str());
            }
        }
        t.rows.push_back(std::move(row));
    }
    csv::write_table(path, t);

    std::ofstream meta(path + ".meta");
    if (!meta) throw DataError("cannot write sidecar: " + path + ".meta");
    meta << "start_time=" << frame.start_time << '\n';
    meta << "step=" << frame.step << '\n';
    meta << "variables=";
    for (size_t v = 0; v < frame.variables.size(); ++v) {
        if (v) meta << ',';
        meta << frame.variables[v];
    }
    meta << '\n';
}

FeatureFrame load_frame(const std::string& path) {
    FeatureFrame frame;
    std::ifstream meta(path + ".meta");
    if (!meta) throw DataError("missing sidecar: " + path + ".meta");
    std::string line;
    while (std::getline(meta, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "start_time") frame.start_time = std::stoll(val);
        else if (key == "step") frame.step = std::stoll(val);
        else if (key == "variables") frame.variables = csv::split_line(val);
    }

    csv::Table t = csv::read_table(path);
    if (t.header != frame.variables)
        throw DataError("frame header disagrees with sidecar variable list");
    const size_t V = frame.variables.size();
    frame.values.resize(t.rows.size() * V, 0.0);
    frame.gap_mask.resize(t.rows.size() * V, 0);
    for (size_t r = 0; r < t.rows.size(); ++r) {
        for (size_t v = 0; v < V; ++v) {
            auto parsed = csv::parse_field(t.rows[r].at(v));
            if (parsed) frame.at(r, v) = *parsed;
            else frame.set_gap(r, v);
        }
    }
    frame.validate();
    return frame;
}

}  // namespace gascast::series
