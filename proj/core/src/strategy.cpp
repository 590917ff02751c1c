#include "gascast/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "gascast/errors.hpp"
#include "gascast/stats.hpp"

namespace gascast::forecast {

namespace {

constexpr double kDivergenceGuard = 1e6;  // normalized units

neural::Example to_example(const series::WindowExample& ex, size_t n, size_t V,
                           size_t target_col_count, size_t first_target) {
    neural::Example out;
    out.x = neural::Matrix(n, V);
    out.x.v = ex.inputs;
    out.y.assign(ex.targets.begin() + first_target,
                 ex.targets.begin() + first_target + target_col_count);
    return out;
}

std::vector<neural::Example> member_dataset(const series::WindowedDataset& ds,
                                            size_t out_width, size_t first_target) {
    std::vector<neural::Example> out;
    out.reserve(ds.examples.size());
    for (const auto& ex : ds.examples)
        out.push_back(to_example(ex, ds.input_len, ds.n_vars, out_width, first_target));
    return out;
}

// Appends one timestep: predicted value on the target channel, last observed
// value on every other channel.
neural::Matrix extend_window(const neural::Matrix& x, double prediction,
                             size_t target_index) {
    neural::Matrix out(x.rows + 1, x.cols);
    std::copy(x.v.begin(), x.v.end(), out.v.begin());
    for (size_t c = 0; c < x.cols; ++c)
        out.at(x.rows, c) = c == target_index ? prediction : x.at(x.rows - 1, c);
    return out;
}

neural::Matrix slide_window(const neural::Matrix& x, double prediction,
                            size_t target_index) {
    neural::Matrix out(x.rows, x.cols);
    for (size_t r = 0; r + 1 < x.rows; ++r)
        for (size_t c = 0; c < x.cols; ++c) out.at(r, c) = x.at(r + 1, c);
    for (size_t c = 0; c < x.cols; ++c)
        out.at(x.rows - 1, c) =
            c == target_index ? prediction : x.at(x.rows - 1, c);
    return out;
}

TrainedStrategy make_trained(const StrategySpec& spec, const FitContext& ctx,
                             uint64_t seed) {
    TrainedStrategy t;
    t.spec = spec;
    t.seed = seed;
    t.n_vars = ctx.train.n_vars;
    t.target_index = ctx.target_index;
    t.var_params = ctx.var_params;
    return t;
}

void train_member(TrainedStrategy& t, const StrategySpec& spec,
                  const std::vector<neural::Example>& train_set,
                  const std::vector<neural::Example>& val_set, size_t n_rows,
                  size_t n_vars, size_t out_width, uint64_t seed,
                  size_t member_index) {
    auto net = std::make_unique<neural::Network>(
        build_network(spec, n_rows, n_vars, out_width));
    neural::TrainConfig cfg;
    cfg.seed = seed;
    try {
        t.reports.push_back(neural::train(*net, train_set, val_set, cfg));
    } catch (const std::exception& e) {
        throw NumericalError("fit: member " + std::to_string(member_index) +
                             " failed: " + e.what());
    }
    t.models.push_back(std::move(net));
}

double predict_scalar(neural::Network& net, const neural::Matrix& x) {
    return net.forward(x).v.front();
}

}  // namespace

StrategyKind parse_strategy_kind(const std::string& s) {
    if (s == "recursive") return StrategyKind::Recursive;
    if (s == "direct") return StrategyKind::Direct;
    if (s == "hybrid") return StrategyKind::Hybrid;
    if (s == "multi-output" || s == "multioutput") return StrategyKind::MultiOutput;
    if (s == "multi-output-block-recursive" || s == "block-recursive")
        return StrategyKind::MultiOutputBlockRecursive;
    throw UsageError("unknown strategy kind '" + s + "'");
}

ModelArch parse_model_arch(const std::string& s) {
    if (s == "linear") return ModelArch::Linear;
    if (s == "lstm") return ModelArch::Lstm;
    if (s == "att-1head") return ModelArch::AttSingleHead;
    if (s == "multi-att-1layer") return ModelArch::MultiAtt1;
    if (s == "multi-att-2layer") return ModelArch::MultiAtt2;
    if (s == "cnn-lstm") return ModelArch::CnnLstm;
    throw UsageError("unknown model architecture '" + s + "'");
}

void StrategySpec::validate() const {
    if (horizon < 1) throw UsageError("strategy: horizon must be >= 1");
    if (input_len < 1) throw UsageError("strategy: input_len must be >= 1");
    if (mp_reversed && !use_mp)
        throw UsageError("strategy: mp_reversed requires use_mp");
    if (kind == StrategyKind::MultiOutputBlockRecursive && block_size > horizon)
        throw UsageError("strategy: block_size exceeds horizon");
}

neural::Network build_network(const StrategySpec& spec, size_t n_rows,
                              size_t n_vars, size_t out_width) {
    using namespace neural;
    std::vector<std::unique_ptr<Layer>> seq;
    switch (spec.arch) {
        case ModelArch::Linear: {
            seq.push_back(make_last_step());
            seq.push_back(make_dense(n_vars, out_width));
            break;
        }
        case ModelArch::Lstm: {
            seq.push_back(make_lstm(n_vars, spec.lstm_units));
            seq.push_back(make_last_step());
            seq.push_back(make_dense(spec.lstm_units, out_width));
            break;
        }
        case ModelArch::AttSingleHead: {
            seq.push_back(make_attention_head(n_vars, spec.single_head_units));
            seq.push_back(make_dense(spec.single_head_units, out_width));
            break;
        }
        case ModelArch::MultiAtt1: {
            std::vector<std::unique_ptr<Layer>> heads;
            for (size_t v = 0; v < n_vars; ++v)
                heads.push_back(make_attention_head(n_vars, spec.att_units));
            seq.push_back(make_parallel(std::move(heads), ConcatMode::Columns));
            seq.push_back(make_dense(n_vars * spec.att_units, out_width));
            break;
        }
        case ModelArch::MultiAtt2: {
            std::vector<std::unique_ptr<Layer>> bank1;
            for (size_t v = 0; v < n_vars; ++v)
                bank1.push_back(make_attention_head(n_vars, spec.att_units));
            // First bank stacks context vectors into a length-V sequence the
            // second bank attends over.
            seq.push_back(make_parallel(std::move(bank1), ConcatMode::Rows));
            std::vector<std::unique_ptr<Layer>> bank2;
            for (size_t v = 0; v < n_vars; ++v)
                bank2.push_back(make_attention_head(spec.att_units, spec.att_units));
            seq.push_back(make_parallel(std::move(bank2), ConcatMode::Columns));
            seq.push_back(make_dense(n_vars * spec.att_units, out_width));
            break;
        }
        case ModelArch::CnnLstm: {
            std::vector<std::unique_ptr<Layer>> heads;
            for (size_t v = 0; v < n_vars; ++v) {
                std::vector<std::unique_ptr<Layer>> head;
                head.push_back(make_conv1d(n_vars, spec.cnn_filters, spec.cnn_kernel));
                head.push_back(make_tanh());
                head.push_back(make_conv1d(spec.cnn_filters, spec.cnn_filters,
                                           spec.cnn_kernel));
                head.push_back(make_tanh());
                heads.push_back(make_sequential(std::move(head)));
            }
            seq.push_back(make_parallel(std::move(heads), ConcatMode::Columns));
            seq.push_back(make_lstm(n_vars * spec.cnn_filters, spec.cnn_lstm_units));
            seq.push_back(make_lstm(spec.cnn_lstm_units, spec.cnn_lstm_units));
            seq.push_back(make_last_step());
            seq.push_back(make_dense(spec.cnn_lstm_units, out_width));
            break;
        }
    }
    return Network(make_sequential(std::move(seq)), {n_rows, n_vars});
}

TrainedStrategy fit_recursive(const StrategySpec& spec, const FitContext& ctx,
                              uint64_t seed) {
    spec.validate();
    TrainedStrategy t = make_trained(spec, ctx, seed);
    train_member(t, spec, member_dataset(ctx.train, 1, 0),
                 member_dataset(ctx.val, 1, 0), spec.input_len, t.n_vars, 1,
                 seed, 0);
    return t;
}

TrainedStrategy fit_direct(const StrategySpec& spec, const FitContext& ctx,
                           uint64_t seed) {
    spec.validate();
    if (ctx.train.horizon < spec.horizon)
        throw UsageError("fit_direct: dataset horizon smaller than strategy horizon");
    TrainedStrategy t = make_trained(spec, ctx, seed);
    for (size_t h = 0; h < spec.horizon; ++h) {
        train_member(t, spec, member_dataset(ctx.train, 1, h),
                     member_dataset(ctx.val, 1, h), spec.input_len, t.n_vars,
                     1, seed + h, h);
    }
    return t;
}

TrainedStrategy fit_hybrid(const StrategySpec& spec, const FitContext& ctx,
                           uint64_t seed) {
    spec.validate();
    if (ctx.train.horizon < spec.horizon)
        throw UsageError("fit_hybrid: dataset horizon smaller than strategy horizon");
    TrainedStrategy t = make_trained(spec, ctx, seed);

    std::vector<neural::Example> train_set = member_dataset(ctx.train, 1, 0);
    std::vector<neural::Example> val_set = member_dataset(ctx.val, 1, 0);
    for (size_t h = 0; h < spec.horizon; ++h) {
        // Member h sees windows of input_len + h rows; its target is y_{t+h+1}.
        for (size_t i = 0; i < train_set.size(); ++i)
            train_set[i].y = {ctx.train.examples[i].targets[h]};
        for (size_t i = 0; i < val_set.size(); ++i)
            val_set[i].y = {ctx.val.examples[i].targets[h]};

        train_member(t, spec, train_set, val_set, spec.input_len + h, t.n_vars,
                     1, seed + h, h);

        if (h + 1 < spec.horizon) {
            // Extend every window with this member's prediction (not ground
            // truth): the next member trains on what it will see at forecast
            // time.
            neural::Network& net = *t.models.back();
            for (auto& ex : train_set)
                ex.x = extend_window(ex.x, predict_scalar(net, ex.x), t.target_index);
            for (auto& ex : val_set)
                ex.x = extend_window(ex.x, predict_scalar(net, ex.x), t.target_index);
        }
    }
    return t;
}

TrainedStrategy fit_multioutput(const StrategySpec& spec, const FitContext& ctx,
                                uint64_t seed) {
    spec.validate();
    if (ctx.train.horizon < spec.horizon)
        throw UsageError("fit_multioutput: dataset horizon smaller than strategy horizon");
    TrainedStrategy t = make_trained(spec, ctx, seed);

    const size_t B = (spec.kind == StrategyKind::MultiOutputBlockRecursive &&
                      spec.block_size > 0)
                         ? spec.block_size
                         : spec.horizon;
    const size_t n_blocks = (spec.horizon + B - 1) / B;

    std::vector<neural::Example> train_set = member_dataset(ctx.train, 0, 0);
    std::vector<neural::Example> val_set = member_dataset(ctx.val, 0, 0);
    size_t first = 0;
    for (size_t b = 0; b < n_blocks; ++b) {
        const size_t width = std::min(B, spec.horizon - first);
        for (size_t i = 0; i < train_set.size(); ++i)
            train_set[i].y.assign(ctx.train.examples[i].targets.begin() + first,
                                  ctx.train.examples[i].targets.begin() + first + width);
        for (size_t i = 0; i < val_set.size(); ++i)
            val_set[i].y.assign(ctx.val.examples[i].targets.begin() + first,
                                ctx.val.examples[i].targets.begin() + first + width);

        train_member(t, spec, train_set, val_set, spec.input_len + first,
                     t.n_vars, width, seed + b, b);

        first += width;
        if (first < spec.horizon) {
            neural::Network& net = *t.models.back();
            auto extend_block = [&](neural::Example& ex) {
                const neural::Matrix pred = net.forward(ex.x);
                for (double p : pred.v)
                    ex.x = extend_window(ex.x, p, t.target_index);
            };
            for (auto& ex : train_set) extend_block(ex);
            for (auto& ex : val_set) extend_block(ex);
        }
    }
    return t;
}

TrainedStrategy fit(const StrategySpec& spec, const FitContext& ctx,
                    uint64_t seed) {
    switch (spec.kind) {
        case StrategyKind::Recursive: return fit_recursive(spec, ctx, seed);
        case StrategyKind::Direct: return fit_direct(spec, ctx, seed);
        case StrategyKind::Hybrid: return fit_hybrid(spec, ctx, seed);
        case StrategyKind::MultiOutput:
        case StrategyKind::MultiOutputBlockRecursive:
            return fit_multioutput(spec, ctx, seed);
    }
    throw UsageError("fit: unknown strategy kind");
}

namespace {

// Forecast in normalized space; the caller denormalizes.
std::vector<double> forecast_normalized(const TrainedStrategy& t,
                                        const neural::Matrix& x0, bool& aborted) {
    const StrategySpec& spec = t.spec;
    std::vector<double> out;
    out.reserve(spec.horizon);
    auto& models = const_cast<std::vector<std::unique_ptr<neural::Network>>&>(t.models);

    switch (spec.kind) {
        case StrategyKind::Recursive: {
            neural::Matrix x = x0;
            for (size_t h = 0; h < spec.horizon; ++h) {
                const double p = predict_scalar(*models[0], x);
                if (std::fabs(p) > kDivergenceGuard) {
                    aborted = true;
                    break;
                }
                out.push_back(p);
                x = slide_window(x, p, t.target_index);
            }
            break;
        }
        case StrategyKind::Direct: {
            for (size_t h = 0; h < spec.horizon; ++h)
                out.push_back(predict_scalar(*models[h], x0));
            break;
        }
        case StrategyKind::Hybrid: {
            neural::Matrix x = x0;
            for (size_t h = 0; h < spec.horizon; ++h) {
                const double p = predict_scalar(*models[h], x);
                out.push_back(p);
                if (h + 1 < spec.horizon) x = extend_window(x, p, t.target_index);
            }
            break;
        }
        case StrategyKind::MultiOutput:
        case StrategyKind::MultiOutputBlockRecursive: {
            neural::Matrix x = x0;
            for (auto& model : models) {
                const neural::Matrix pred = model->forward(x);
                for (double p : pred.v) out.push_back(p);
                if (out.size() < spec.horizon)
                    for (double p : pred.v) x = extend_window(x, p, t.target_index);
            }
            break;
        }
    }
    return out;
}

}  // namespace

HorizonForecast forecast(const TrainedStrategy& t, const neural::Matrix& history) {
    if (history.cols != t.n_vars)
        throw UsageError("forecast: variable count mismatch");
    if (history.rows < t.spec.input_len)
        throw UsageError("forecast: insufficient history");

    // Normalize the trailing input_len rows.
    neural::Matrix x(t.spec.input_len, t.n_vars);
    const size_t off = history.rows - t.spec.input_len;
    for (size_t r = 0; r < t.spec.input_len; ++r)
        for (size_t c = 0; c < t.n_vars; ++c)
            x.at(r, c) = (history.at(off + r, c) - t.var_params[c].mu) /
                         t.var_params[c].sigma;

    HorizonForecast fc;
    std::vector<double> norm = forecast_normalized(t, x, fc.aborted);
    const series::ZScoreParams& tp = t.var_params[t.target_index];
    for (double p : norm) fc.values_gwei.push_back(p * tp.sigma + tp.mu);
    return fc;
}

LookaheadReport evaluate(const TrainedStrategy& t,
                         const series::WindowedDataset& validation) {
    if (validation.examples.empty())
        throw DataError("evaluate: empty validation set");
    const size_t H = t.spec.horizon;
    const series::ZScoreParams& tp = t.var_params[t.target_index];

    std::vector<std::vector<double>> y_true(H), y_pred(H);
    for (const auto& ex : validation.examples) {
        neural::Matrix x(validation.input_len, validation.n_vars);
        x.v = ex.inputs;
        bool aborted = false;
        std::vector<double> norm = forecast_normalized(t, x, aborted);
        if (aborted) continue;
        for (size_t h = 0; h < H; ++h) {
            y_true[h].push_back(ex.targets[h] * tp.sigma + tp.mu);
            y_pred[h].push_back(norm[h] * tp.sigma + tp.mu);
        }
    }

    LookaheadReport rep;
    for (size_t h = 0; h < H; ++h)
        rep.per_lookahead.push_back(series::metrics(y_true[h], y_pred[h]));
    const size_t five = std::min<size_t>(5, H);
    rep.avg_first5 = average_metrics(
        {rep.per_lookahead.begin(), rep.per_lookahead.begin() + five});
    rep.avg_all = average_metrics(rep.per_lookahead);
    return rep;
}

series::MetricReport average_metrics(const std::vector<series::MetricReport>& reports) {
    if (reports.empty()) throw UsageError("average_metrics: empty input");
    series::MetricReport avg;
    double r2_sum = 0.0;
    bool r2_all = true;
    for (const auto& r : reports) {
        avg.rmse += r.rmse;
        avg.mae += r.mae;
        avg.mape += r.mape;
        if (r.r2) r2_sum += *r.r2;
        else r2_all = false;
    }
    const double n = static_cast<double>(reports.size());
    avg.rmse /= n;
    avg.mae /= n;
    avg.mape /= n;
    if (r2_all) avg.r2 = r2_sum / n;
    return avg;
}

LookaheadReport average_reports(const std::vector<LookaheadReport>& reports) {
    if (reports.empty()) throw UsageError("average_reports: empty input");
    LookaheadReport out;
    const size_t H = reports.front().per_lookahead.size();
    for (size_t h = 0; h < H; ++h) {
        std::vector<series::MetricReport> col;
        for (const auto& r : reports) col.push_back(r.per_lookahead.at(h));
        out.per_lookahead.push_back(average_metrics(col));
    }
    const size_t five = std::min<size_t>(5, H);
    out.avg_first5 = average_metrics(
        {out.per_lookahead.begin(), out.per_lookahead.begin() + five});
    out.avg_all = average_metrics(out.per_lookahead);
    return out;
}

void write_report_table(
    const std::string& path,
    const std::vector<std::pair<std::string, series::MetricReport>>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report: " + path);
    out.precision(10);
    out << "Variable\tRMSE\tMAE\tMAPE\tR2\n";
    for (const auto& [label, m] : rows) {
        out << label << '\t' << m.rmse << '\t' << m.mae << '\t' << m.mape << '\t';
        if (m.r2) out << *m.r2;
        else out << "NA";
        out << '\n';
    }
}

double baseline_geth(std::span<const double> recent_minima) {
    if (recent_minima.size() < 20)
        throw DataError("baseline_geth: need at least 20 block minima");
    std::vector<double> window(recent_minima.end() - 20, recent_minima.end());
    return percentile_interpolated(window, 60.0);
}

double baseline_gse(std::span<const double> recent_minima, double candidate) {
    if (recent_minima.size() < 200)
        throw DataError("baseline_gse: need at least 200 block minima");
    size_t count = 0;
    for (auto it = recent_minima.end() - 200; it != recent_minima.end(); ++it)
        if (*it <= candidate) ++count;
    return static_cast<double>(count) / 200.0;
}

}  // namespace gascast::forecast
