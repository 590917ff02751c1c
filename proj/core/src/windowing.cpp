#include "gascast/windowing.hpp"

#include "gascast/errors.hpp"

namespace gascast::series {

WindowedDataset make_windows(const FeatureFrame& frame, size_t n, size_t H,
                             const std::string& target) {
    if (n < 1 || H < 1) throw UsageError("make_windows: n and H must be >= 1");
    const size_t T = frame.rows();
    if (n + H > T) throw UsageError("make_windows: n + H exceeds frame length");
    const int target_idx = frame.var_index(target);
    if (target_idx < 0) throw UsageError("make_windows: unknown target variable '" + target + "'");

    const size_t V = frame.cols();
    WindowedDataset ds;
    ds.input_len = n;
    ds.horizon = H;
    ds.n_vars = V;
    ds.target_variable = target;
    ds.target_index = static_cast<size_t>(target_idx);

    // Prefix counts of gap rows (a row is "gapped" if any variable is masked).
    std::vector<size_t> gap_prefix(T + 1, 0);
    for (size_t t = 0; t < T; ++t) {
        bool gapped = false;
        for (size_t v = 0; v < V; ++v)
            if (frame.is_gap(t, v)) { gapped = true; break; }
        gap_prefix[t + 1] = gap_prefix[t] + (gapped ? 1 : 0);
    }

    for (size_t t0 = 0; t0 + n + H <= T; ++t0) {
        if (gap_prefix[t0 + n + H] - gap_prefix[t0] > 0) {
            ++ds.dropped_gap_windows;
            continue;
        }
        WindowExample ex;
        ex.start_row = t0;
        ex.inputs.reserve(n * V);
        for (size_t t = t0; t < t0 + n; ++t)
            for (size_t v = 0; v < V; ++v) ex.inputs.push_back(frame.at(t, v));
        ex.targets.reserve(H);
        for (size_t h = 0; h < H; ++h)
            ex.targets.push_back(frame.at(t0 + n + h, ds.target_index));
        ds.examples.push_back(std::move(ex));
    }
    return ds;
}

SplitDataset split_70_30(const WindowedDataset& dataset) {
    const size_t count = dataset.examples.size();
    if (count < 10) throw DataError("split_70_30: need at least 10 examples");
    const size_t n_train = static_cast<size_t>(0.7 * static_cast<double>(count));

    SplitDataset out;
    out.train = dataset;
    out.validation = dataset;
    out.train.examples.assign(dataset.examples.begin(),
                              dataset.examples.begin() + n_train);
    out.validation.examples.assign(dataset.examples.begin() + n_train,
                                   dataset.examples.end());
    return out;
}

WalkForwardPlan walk_forward(const FeatureFrame& frame, size_t train_span,
                             size_t stride) {
    const size_t T = frame.rows();
    if (train_span > T) throw UsageError("walk_forward: train_span exceeds frame length");
    if (train_span == 0 || stride == 0)
        throw UsageError("walk_forward: train_span and stride must be positive");

    WalkForwardPlan plan;
    plan.train_span = train_span;
    plan.stride = stride;
    for (size_t start = 0; start + train_span <= T; start += stride) {
        plan.windows.push_back({start, start + train_span});
    }
    return plan;
}

}  // namespace gascast::series
