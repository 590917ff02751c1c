#include "gascast/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gascast/dwt.hpp"
#include "gascast/errors.hpp"
#include "gascast/matrix_profile.hpp"
#include "gascast/windowing.hpp"

namespace fs = std::filesystem;

namespace gascast::experiment {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw UsageError("config: boolean expected for '" + key + "', got '" + v + "'");
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const uint64_t r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw UsageError("config: integer expected for '" + key + "', got '" + v + "'");
    }
}

double parse_f64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw UsageError("config: number expected for '" + key + "', got '" + v + "'");
    }
}

std::string join_csv(const std::vector<std::string>& items) {
    std::string out;
    for (size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        out += items[i];
    }
    return out;
}

std::string strategy_name(forecast::StrategyKind k) {
    switch (k) {
        case forecast::StrategyKind::Recursive: return "recursive";
        case forecast::StrategyKind::Direct: return "direct";
        case forecast::StrategyKind::Hybrid: return "hybrid";
        case forecast::StrategyKind::MultiOutput: return "multi-output";
        case forecast::StrategyKind::MultiOutputBlockRecursive:
            return "block-recursive";
    }
    throw UsageError("unknown strategy kind");
}

std::string arch_name(forecast::ModelArch a) {
    switch (a) {
        case forecast::ModelArch::Linear: return "linear";
        case forecast::ModelArch::Lstm: return "lstm";
        case forecast::ModelArch::AttSingleHead: return "att-1head";
        case forecast::ModelArch::MultiAtt1: return "multi-att-1layer";
        case forecast::ModelArch::MultiAtt2: return "multi-att-2layer";
        case forecast::ModelArch::CnnLstm: return "cnn-lstm";
    }
    throw UsageError("unknown model arch");
}

series::FeatureFrame select_variables(const series::FeatureFrame& frame,
                                      const std::vector<std::string>& wanted) {
    std::vector<size_t> cols;
    for (const auto& name : wanted) {
        const int idx = frame.var_index(name);
        if (idx < 0) throw DataError("unknown variable: " + name);
        cols.push_back(static_cast<size_t>(idx));
    }
    series::FeatureFrame out;
    out.start_time = frame.start_time;
    out.step = frame.step;
    out.variables = wanted;
    const size_t T = frame.rows();
    const size_t V = cols.size();
    out.values.assign(T * V, 0.0);
    out.gap_mask.assign(T * V, 0);
    for (size_t t = 0; t < T; ++t)
        for (size_t v = 0; v < V; ++v) {
            out.values[t * V + v] = frame.at(t, cols[v]);
            if (frame.is_gap(t, cols[v])) out.gap_mask[t * V + v] = 1;
        }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write: " + path);
    out << text;
}

std::string hex16(uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

void write_manifest(const std::string& dir, uint64_t seed,
                    const std::string& status, const std::string& stage,
                    const std::string& error) {
    std::ostringstream os;
    os << "status " << status << '\n';
    if (!stage.empty()) os << "stage " << stage << '\n';
    if (!error.empty()) os << "error " << error << '\n';
    os << "seed " << seed << '\n';
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "manifest.txt")
            names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    for (const auto& n : names)
        os << "hash " << hex16(fnv1a_file(dir + "/" + n)) << ' ' << n << '\n';
    write_text(dir + "/manifest.txt", os.str());
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
    ExperimentConfig cfg;
    bool arch_given = false;
    std::string att_heads;
    size_t att_layers = 1;

    std::stringstream ss(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(lineno) +
                             ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (val.empty())
            throw UsageError("config: empty value for '" + key + "'");

        if (key == "frame") cfg.frame_path = val;
        else if (key == "features") cfg.features_path = val;
        else if (key == "ticks") cfg.ticks_path = val;
        else if (key == "resolution") cfg.resolution = static_cast<int64_t>(parse_u64(key, val));
        else if (key == "variables") cfg.variables = split_csv(val);
        else if (key == "target") cfg.target = val;
        else if (key == "truncate_k") cfg.truncate_k = parse_f64(key, val);
        else if (key == "denoise_wavelet") cfg.denoise_wavelet = val;
        else if (key == "denoise_lambda") cfg.denoise_lambda = parse_f64(key, val);
        else if (key == "denoise_level") cfg.denoise_level = parse_u64(key, val);
        else if (key == "denoise_levels") {
            cfg.denoise_levels.clear();
            for (const auto& s : split_csv(val))
                cfg.denoise_levels.push_back(parse_u64(key, s));
        } else if (key == "mp") cfg.use_mp = parse_bool(key, val);
        else if (key == "mp_reversed") cfg.mp_reversed = parse_bool(key, val);
        else if (key == "mp_window") cfg.mp_window = parse_u64(key, val);
        else if (key == "strategy") cfg.strategy = forecast::parse_strategy_kind(val);
        else if (key == "arch") { cfg.arch = forecast::parse_model_arch(val); arch_given = true; }
        else if (key == "att_heads") att_heads = val;
        else if (key == "att_layers") att_layers = parse_u64(key, val);
        else if (key == "horizon") cfg.horizon = parse_u64(key, val);
        else if (key == "input_len") cfg.input_len = parse_u64(key, val);
        else if (key == "block_size") cfg.block_size = parse_u64(key, val);
        else if (key == "lstm_units") cfg.lstm_units = parse_u64(key, val);
        else if (key == "att_units") cfg.att_units = parse_u64(key, val);
        else if (key == "single_head_units") cfg.single_head_units = parse_u64(key, val);
        else if (key == "epochs") cfg.epochs = parse_u64(key, val);
        else if (key == "batch_size") cfg.batch_size = parse_u64(key, val);
        else if (key == "seed") { cfg.seed = parse_u64(key, val); cfg.seed_set = true; }
        else if (key == "output_dir") cfg.output_dir = val;
        else throw UsageError("config: unknown key '" + key + "'");
    }

    // Attention shorthand: att_heads = 1 | multi, att_layers = 1 | 2. An
    // explicit `arch` wins.
    if (!arch_given && !att_heads.empty()) {
        if (att_heads == "1") cfg.arch = forecast::ModelArch::AttSingleHead;
        else if (att_heads == "multi")
            cfg.arch = att_layers == 2 ? forecast::ModelArch::MultiAtt2
                                       : forecast::ModelArch::MultiAtt1;
        else throw UsageError("config: att_heads must be '1' or 'multi'");
    }
    return cfg;
}

void ExperimentConfig::validate() const {
    if (frame_path.empty() == features_path.empty())
        throw UsageError("config: exactly one of 'frame' or 'features' is required");
    if (!ticks_path.empty() && features_path.empty())
        throw UsageError("config: 'ticks' requires 'features'");
    if (!seed_set) throw UsageError("config: 'seed' is required");
    if (resolution <= 0) throw UsageError("config: resolution must be positive");
    if (target.empty()) throw UsageError("config: target must not be empty");
    if (mp_reversed && !use_mp)
        throw UsageError("config: mp_reversed requires mp = 1");
    if (use_mp && mp_window < 2)
        throw UsageError("config: mp_window must be >= 2");
    to_spec().validate();
}

forecast::StrategySpec ExperimentConfig::to_spec() const {
    forecast::StrategySpec spec;
    spec.kind = strategy;
    spec.arch = arch;
    spec.horizon = horizon;
    spec.input_len = input_len;
    spec.target = target;
    spec.use_mp = use_mp;
    spec.mp_reversed = mp_reversed;
    spec.denoise_wavelet = denoise_wavelet;
    spec.lstm_units = lstm_units;
    spec.att_units = att_units;
    spec.single_head_units = single_head_units;
    spec.block_size = block_size;
    return spec;
}

std::string ExperimentConfig::echo() const {
    std::ostringstream os;
    os << std::setprecision(17);
    if (!frame_path.empty()) os << "frame = " << frame_path << '\n';
    if (!features_path.empty()) os << "features = " << features_path << '\n';
    if (!ticks_path.empty()) os << "ticks = " << ticks_path << '\n';
    os << "resolution = " << resolution << '\n';
    if (!variables.empty()) os << "variables = " << join_csv(variables) << '\n';
    os << "target = " << target << '\n';
    if (truncate_k > 0.0) os << "truncate_k = " << truncate_k << '\n';
    if (!denoise_wavelet.empty()) {
        os << "denoise_wavelet = " << denoise_wavelet << '\n';
        os << "denoise_lambda = " << denoise_lambda << '\n';
        os << "denoise_level = " << denoise_level << '\n';
        if (!denoise_levels.empty()) {
            os << "denoise_levels = ";
            for (size_t i = 0; i < denoise_levels.size(); ++i)
                os << (i ? "," : "") << denoise_levels[i];
            os << '\n';
        }
    }
    os << "mp = " << (use_mp ? 1 : 0) << '\n';
    if (use_mp) {
        os << "mp_reversed = " << (mp_reversed ? 1 : 0) << '\n';
        os << "mp_window = " << mp_window << '\n';
    }
    os << "strategy = " << strategy_name(strategy) << '\n';
    os << "arch = " << arch_name(arch) << '\n';
    os << "horizon = " << horizon << '\n';
    os << "input_len = " << input_len << '\n';
    if (block_size > 0) os << "block_size = " << block_size << '\n';
    os << "lstm_units = " << lstm_units << '\n';
    os << "att_units = " << att_units << '\n';
    os << "single_head_units = " << single_head_units << '\n';
    os << "epochs = " << epochs << '\n';
    os << "batch_size = " << batch_size << '\n';
    os << "seed = " << seed << '\n';
    if (!output_dir.empty()) os << "output_dir = " << output_dir << '\n';
    return os.str();
}

series::FeatureFrame build_frame_from_features(
    const std::vector<ingest::BlockFeatureRow>& rows,
    const std::vector<ingest::TickRecord>& ticks, int64_t resolution) {
    if (rows.empty()) throw DataError("build_frame: no block feature rows");
    if (resolution <= 0) throw UsageError("build_frame: resolution must be positive");

    int64_t t_min = rows.front().timestamp, t_max = rows.front().timestamp;
    for (const auto& r : rows) {
        t_min = std::min(t_min, r.timestamp);
        t_max = std::max(t_max, r.timestamp);
    }
    const int64_t start = (t_min / resolution) * resolution;
    const size_t n_buckets =
        static_cast<size_t>((t_max - start) / resolution) + 1;

    series::FeatureFrame frame;
    frame.start_time = start;
    frame.step = resolution;

    auto add_column = [&](const std::string& name,
                          const std::vector<series::TimedValue>& samples) {
        const auto ds =
            series::downsample_mean(samples, start, resolution, n_buckets);
        frame.variables.push_back(name);
        const size_t V = frame.variables.size();
        std::vector<double> values(n_buckets * V, 0.0);
        std::vector<uint8_t> mask(n_buckets * V, 0);
        for (size_t t = 0; t < n_buckets; ++t) {
            for (size_t v = 0; v + 1 < V; ++v) {
                values[t * V + v] = frame.values[t * (V - 1) + v];
                mask[t * V + v] = frame.gap_mask[t * (V - 1) + v];
            }
            values[t * V + V - 1] = ds.values[t];
            mask[t * V + V - 1] = ds.gap_mask[t];
        }
        frame.values = std::move(values);
        frame.gap_mask = std::move(mask);
    };

    auto gather_opt = [&](auto getter) {
        std::vector<series::TimedValue> out;
        for (const auto& r : rows) {
            const std::optional<double> v = getter(r);
            if (v) out.push_back({r.timestamp, *v});
        }
        return out;
    };
    auto gather = [&](auto getter) {
        std::vector<series::TimedValue> out;
        for (const auto& r : rows) out.push_back({r.timestamp, getter(r)});
        return out;
    };

    add_column("min_gas_price", gather_opt([](const auto& r) { return r.min_gas_price; }));
    add_column("max_gas_price", gather_opt([](const auto& r) { return r.max_gas_price; }));
    add_column("avg_gas_price", gather_opt([](const auto& r) { return r.avg_gas_price; }));
    for (const auto& [rank, _] : rows.front().pct_gas_price) {
        std::ostringstream name;
        name << "pct_" << rank;
        add_column(name.str(), gather_opt([rank](const auto& r) {
                       return r.pct_gas_price.at(rank);
                   }));
    }
    add_column("tx_count", gather([](const auto& r) { return static_cast<double>(r.tx_count); }));
    add_column("contract_count", gather([](const auto& r) { return static_cast<double>(r.contract_count); }));
    add_column("base_fee", gather([](const auto& r) { return r.base_fee; }));
    add_column("gas_used", gather([](const auto& r) { return r.gas_used; }));
    add_column("size_gas", gather([](const auto& r) { return r.size_gas; }));
    add_column("size_bytes", gather([](const auto& r) { return r.size_bytes; }));

    if (!ticks.empty()) {
        std::vector<series::TimedValue> samples;
        for (const auto& t : ticks) samples.push_back({t.timestamp, t.open_price});
        add_column("eth_usdt", samples);
    }

    frame.validate();
    return frame;
}

uint64_t fnv1a(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 14695981039346656037ull;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open for hashing: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    return fnv1a(bytes.data(), bytes.size());
}

RunResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.output_dir.empty())
        throw UsageError("config: 'output_dir' is required for a run");
    fs::create_directories(cfg.output_dir);
    const std::string dir = cfg.output_dir;
    write_text(dir + "/config.txt", cfg.echo());

    std::string stage = "load";
    try {
        series::FeatureFrame frame;
        if (!cfg.frame_path.empty()) {
            frame = series::load_frame(cfg.frame_path);
            if (cfg.resolution != frame.step)
                throw DataError("config resolution " + std::to_string(cfg.resolution) +
                                " does not match frame step " +
                                std::to_string(frame.step));
        } else {
            const auto rows = ingest::read_block_features(cfg.features_path);
            std::vector<ingest::TickRecord> ticks;
            if (!cfg.ticks_path.empty()) ticks = ingest::parse_ticks(cfg.ticks_path);
            frame = build_frame_from_features(rows, ticks, cfg.resolution);
        }
        if (!cfg.variables.empty()) frame = select_variables(frame, cfg.variables);
        const int tgt0 = frame.var_index(cfg.target);
        if (tgt0 < 0) throw DataError("target variable not in frame: " + cfg.target);

        stage = "preprocess";
        if (cfg.truncate_k > 0.0) {
            // One-sided cap on the target only; gaps stay gaps.
            std::vector<double> col;
            std::vector<size_t> rows_of;
            for (size_t t = 0; t < frame.rows(); ++t)
                if (!frame.is_gap(t, static_cast<size_t>(tgt0))) {
                    col.push_back(frame.at(t, static_cast<size_t>(tgt0)));
                    rows_of.push_back(t);
                }
            const auto tr = series::truncate_outliers(col, cfg.truncate_k);
            for (size_t i = 0; i < rows_of.size(); ++i)
                frame.at(rows_of[i], static_cast<size_t>(tgt0)) = tr.values[i];
        }
        if (!cfg.denoise_wavelet.empty()) {
            // Denoising needs a contiguous target; a gap here is a data error.
            std::vector<double> col = frame.column(static_cast<size_t>(tgt0));
            const auto& bank = wavelets::filter_bank(cfg.denoise_wavelet);
            std::vector<size_t> levels = cfg.denoise_levels;
            if (levels.empty())
                for (size_t j = 1; j <= cfg.denoise_level; ++j) levels.push_back(j);
            const auto den = wavelets::hard_threshold_denoise(
                col, bank, cfg.denoise_level, levels, cfg.denoise_lambda);
            for (size_t t = 0; t < frame.rows(); ++t)
                frame.at(t, static_cast<size_t>(tgt0)) = den.denoised[t];
        }
        if (cfg.use_mp) {
            std::vector<double> col = frame.column(static_cast<size_t>(tgt0));
            mp::MatrixProfile prof;
            if (cfg.mp_reversed) {
                // Distance to the nearest later neighbor: past-only on the
                // reversed series, remapped back.
                std::vector<double> rev(col.rbegin(), col.rend());
                prof = mp::reverse_mp(mp::mp_past_only(rev, cfg.mp_window));
            } else {
                prof = mp::mp_past_only(col, cfg.mp_window);
            }
            frame = mp::align_mp(frame, prof, cfg.mp_window,
                                 cfg.mp_reversed ? "mp_rev" : "mp");
        }
        series::save_frame(frame, dir + "/frame.csv");

        stage = "window";
        forecast::StrategySpec spec = cfg.to_spec();
        spec.variables = frame.variables;
        const auto windows =
            series::make_windows(frame, cfg.input_len, cfg.horizon, cfg.target);
        const auto split = series::split_70_30(windows);

        stage = "normalize";
        // Fit the scaler strictly on rows the training examples can see.
        const size_t boundary = split.train.examples.back().start_row +
                                cfg.input_len + cfg.horizon;
        const size_t V = frame.cols();
        std::vector<series::ZScoreParams> params(V);
        for (size_t v = 0; v < V; ++v) {
            std::vector<double> vals;
            for (size_t t = 0; t < boundary; ++t)
                if (!frame.is_gap(t, v)) vals.push_back(frame.at(t, v));
            params[v] = series::zscore_fit(vals);
        }
        auto normalize_set = [&](const series::WindowedDataset& in) {
            series::WindowedDataset out = in;
            for (auto& ex : out.examples) {
                for (size_t r = 0; r < in.input_len; ++r)
                    for (size_t v = 0; v < V; ++v) {
                        double& x = ex.inputs[r * V + v];
                        x = (x - params[v].mu) / params[v].sigma;
                    }
                const auto& tp = params[in.target_index];
                for (double& y : ex.targets) y = (y - tp.mu) / tp.sigma;
            }
            return out;
        };

        forecast::FitContext ctx;
        ctx.train = normalize_set(split.train);
        ctx.val = normalize_set(split.validation);
        ctx.var_params = params;
        ctx.target_index = windows.target_index;

        stage = "fit";
        forecast::TrainedStrategy trained = forecast::fit(spec, ctx, cfg.seed);
        for (size_t i = 0; i < trained.reports.size(); ++i) {
            const auto& rep = trained.reports[i];
            std::ostringstream os;
            os << std::setprecision(17);
            os << "epoch\ttrain_loss\tval_loss\n";
            for (size_t e = 0; e < rep.train_loss.size(); ++e)
                os << (e + 1) << '\t' << rep.train_loss[e] << '\t'
                   << rep.val_loss[e] << '\n';
            os << "best_epoch\t" << (rep.best_epoch + 1) << '\n';
            write_text(dir + "/train_report_" + std::to_string(i) + ".txt",
                       os.str());
        }

        stage = "evaluate";
        RunResult result;
        result.output_dir = dir;
        result.train_examples = ctx.train.examples.size();
        result.val_examples = ctx.val.examples.size();
        result.report = forecast::evaluate(trained, ctx.val);

        std::vector<std::pair<std::string, series::MetricReport>> table;
        for (size_t h = 0; h < cfg.horizon; ++h)
            table.emplace_back("L" + std::to_string(h + 1),
                               result.report.per_lookahead[h]);
        if (cfg.horizon > 5) table.emplace_back("Avg5", result.report.avg_first5);
        table.emplace_back("AvgAll", result.report.avg_all);
        forecast::write_report_table(dir + "/lookahead.tsv", table);

        // Forecast-vs-actual series for plotting, in original units.
        {
            std::ostringstream os;
            os << std::setprecision(17);
            os << "example\tlookahead\tactual\tpredicted\n";
            for (size_t i = 0; i < split.validation.examples.size(); ++i) {
                const auto& ex = split.validation.examples[i];
                neural::Matrix history(cfg.input_len, V);
                history.v = ex.inputs;
                const auto fc = forecast::forecast(trained, history);
                if (fc.aborted) {
                    ++result.aborted_forecasts;
                    continue;
                }
                for (size_t h = 0; h < cfg.horizon; ++h)
                    os << i << '\t' << (h + 1) << '\t' << ex.targets[h] << '\t'
                       << fc.values_gwei[h] << '\n';
            }
            write_text(dir + "/forecast.tsv", os.str());
        }

        stage = "report";
        write_manifest(dir, cfg.seed, "ok", "", "");
        return result;
    } catch (const std::exception& e) {
        write_manifest(dir, cfg.seed, "failed", stage, e.what());
        throw;
    }
}

}  // namespace gascast::experiment
