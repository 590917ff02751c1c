#include "gascast/matrix_profile.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "gascast/errors.hpp"

namespace gascast::mp {

namespace {

constexpr double kSigmaFloor = 1e-12;

struct WindowStats {
    std::vector<double> mu;
    std::vector<double> sigma;  // floored
    bool floored = false;
};

WindowStats window_stats(const std::vector<double>& x, size_t m) {
    const size_t P = x.size() - m + 1;
    WindowStats st;
    st.mu.resize(P);
    st.sigma.resize(P);
    std::vector<double> s1(x.size() + 1, 0.0), s2(x.size() + 1, 0.0);
    for (size_t i = 0; i < x.size(); ++i) {
        s1[i + 1] = s1[i] + x[i];
        s2[i + 1] = s2[i] + x[i] * x[i];
    }
    const double dm = static_cast<double>(m);
    for (size_t i = 0; i < P; ++i) {
        const double mu = (s1[i + m] - s1[i]) / dm;
        double var = (s2[i + m] - s2[i]) / dm - mu * mu;
        if (var < 0.0) var = 0.0;
        double sigma = std::sqrt(var);
        if (sigma < kSigmaFloor) {
            sigma = kSigmaFloor;
            st.floored = true;
        }
        st.mu[i] = mu;
        st.sigma[i] = sigma;
    }
    return st;
}

void check_preconditions(const std::vector<double>& series, size_t m) {
    if (m < 2) throw UsageError("matrix profile: window must be >= 2");
    if (series.size() < 2 * m)
        throw UsageError("matrix profile: series length must be >= 2m");
}

}  // namespace

MatrixProfile mp_bruteforce(const std::vector<double>& series, size_t m) {
    check_preconditions(series, m);
    const size_t P = series.size() - m + 1;
    const size_t excl = (m + 1) / 2;

    MatrixProfile mp;
    mp.window = m;
    mp.exclusion = excl;
    mp.values.assign(P, std::numeric_limits<double>::infinity());
    mp.indices.assign(P, 0);

    // Explicit per-window moments, no prefix sums: this path is the oracle.
    auto znorm = [&](size_t start, bool& floored) {
        double mu = 0.0;
        for (size_t k = 0; k < m; ++k) mu += series[start + k];
        mu /= static_cast<double>(m);
        double var = 0.0;
        for (size_t k = 0; k < m; ++k) {
            const double d = series[start + k] - mu;
            var += d * d;
        }
        double sigma = std::sqrt(var / static_cast<double>(m));
        if (sigma < kSigmaFloor) {
            sigma = kSigmaFloor;
            floored = true;
        }
        std::vector<double> w(m);
        for (size_t k = 0; k < m; ++k) w[k] = (series[start + k] - mu) / sigma;
        return w;
    };

    std::vector<std::vector<double>> windows(P);
    for (size_t i = 0; i < P; ++i) windows[i] = znorm(i, mp.sigma_floored);

    for (size_t i = 0; i < P; ++i) {
        for (size_t j = 0; j < P; ++j) {
            const size_t gap = i > j ? i - j : j - i;
            if (gap <= excl) continue;
            double ss = 0.0;
            for (size_t k = 0; k < m; ++k) {
                const double d = windows[i][k] - windows[j][k];
                ss += d * d;
            }
            const double dist = std::sqrt(ss);
            if (dist < mp.values[i]) {
                mp.values[i] = dist;
                mp.indices[i] = j;
            }
        }
    }
    return mp;
}

MatrixProfile mp_fast(const std::vector<double>& series, size_t m) {
    check_preconditions(series, m);
    const size_t P = series.size() - m + 1;
    const size_t excl = (m + 1) / 2;
    const double dm = static_cast<double>(m);

    MatrixProfile mp;
    mp.window = m;
    mp.exclusion = excl;
    mp.values.assign(P, std::numeric_limits<double>::infinity());
    mp.indices.assign(P, 0);

    WindowStats st = window_stats(series, m);
    mp.sigma_floored = st.floored;

    // Diagonal recurrence on sliding dot products; each diagonal k visits
    // pairs (i, i+k) with one multiply-add update per step.
    for (size_t k = excl + 1; k < P; ++k) {
        double qt = 0.0;
        for (size_t t = 0; t < m; ++t) qt += series[t] * series[t + k];
        for (size_t i = 0;; ++i) {
            const size_t j = i + k;
            const double corr = (qt - dm * st.mu[i] * st.mu[j]) /
                                (dm * st.sigma[i] * st.sigma[j]);
            double d2 = 2.0 * dm * (1.0 - corr);
            if (d2 < 0.0) d2 = 0.0;
            const double dist = std::sqrt(d2);
            if (dist < mp.values[i]) {
                mp.values[i] = dist;
                mp.indices[i] = j;
            }
            if (dist < mp.values[j]) {
                mp.values[j] = dist;
                mp.indices[j] = i;
            }
            if (j + 1 >= P) break;
            qt += series[i + m] * series[j + m] - series[i] * series[j];
        }
    }
    return mp;
}

std::vector<RollingSnapshot> mp_rolling(const std::vector<double>& series,
                                        size_t m, size_t step) {
    if (step < 1) throw UsageError("mp_rolling: step must be >= 1");
    std::vector<RollingSnapshot> out;
    for (size_t len = m;; len += step) {
        const bool last = len >= series.size();
        const size_t n = last ? series.size() : len;
        if (n >= 2 * m) {
            RollingSnapshot snap;
            snap.prefix_length = n;
            std::vector<double> prefix(series.begin(), series.begin() + n);
            snap.profile = mp_fast(prefix, m);
            out.push_back(std::move(snap));
        }
        if (last) break;
    }
    return out;
}

MatrixProfile mp_past_only(const std::vector<double>& series, size_t m) {
    check_preconditions(series, m);
    const size_t P = series.size() - m + 1;
    const size_t excl = (m + 1) / 2;
    const double dm = static_cast<double>(m);

    MatrixProfile mp;
    mp.window = m;
    mp.exclusion = excl;
    mp.values.assign(P, std::numeric_limits<double>::infinity());
    mp.indices.assign(P, 0);

    WindowStats st = window_stats(series, m);
    mp.sigma_floored = st.floored;

    // Same diagonal sweep as mp_fast, but only the later window of each pair
    // is updated: entry j never sees a neighbor that starts at or after j.
    for (size_t k = excl + 1; k < P; ++k) {
        double qt = 0.0;
        for (size_t t = 0; t < m; ++t) qt += series[t] * series[t + k];
        for (size_t i = 0;; ++i) {
            const size_t j = i + k;
            const double corr = (qt - dm * st.mu[i] * st.mu[j]) /
                                (dm * st.sigma[i] * st.sigma[j]);
            double d2 = 2.0 * dm * (1.0 - corr);
            if (d2 < 0.0) d2 = 0.0;
            const double dist = std::sqrt(d2);
            if (dist < mp.values[j]) {
                mp.values[j] = dist;
                mp.indices[j] = i;
            }
            if (j + 1 >= P) break;
            qt += series[i + m] * series[j + m] - series[i] * series[j];
        }
    }
    return mp;
}

series::FeatureFrame align_mp(const series::FeatureFrame& frame,
                              const MatrixProfile& mp, size_t m,
                              const std::string& column_name) {
    const size_t T = frame.rows();
    if (mp.values.size() != T - m + 1)
        throw DataError("align_mp: profile length does not match frame (expected " +
                        std::to_string(T - m + 1) + ", got " +
                        std::to_string(mp.values.size()) + ")");

    series::FeatureFrame out;
    out.start_time = frame.start_time + static_cast<int64_t>(m - 1) * frame.step;
    out.step = frame.step;
    out.variables = frame.variables;
    out.variables.push_back(column_name);
    const size_t rows = T - m + 1;
    const size_t V = out.variables.size();
    out.values.assign(rows * V, 0.0);
    out.gap_mask.assign(rows * V, 0);
    for (size_t t = 0; t < rows; ++t) {
        for (size_t v = 0; v + 1 < V; ++v) {
            out.values[t * V + v] = frame.at(t + m - 1, v);
            if (frame.is_gap(t + m - 1, v)) out.gap_mask[t * V + v] = 1;
        }
        if (std::isfinite(mp.values[t])) {
            out.values[t * V + V - 1] = mp.values[t];
        } else {
            // Past-only profiles have no admissible neighbor early on; mask
            // those rows so windowing drops them instead of feeding inf.
            out.gap_mask[t * V + V - 1] = 1;
        }
    }
    return out;
}

MatrixProfile reverse_mp(const MatrixProfile& mp) {
    MatrixProfile out = mp;
    const size_t L = mp.values.size();
    for (size_t i = 0; i < L; ++i) {
        out.values[i] = mp.values[L - 1 - i];
        out.indices[i] = L - 1 - mp.indices[L - 1 - i];
    }
    return out;
}

void save_profile(const MatrixProfile& mp, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write profile: " + path);
    out.precision(17);
    out << "value,neighbor\n";
    for (size_t i = 0; i < mp.values.size(); ++i)
        out << mp.values[i] << ',' << mp.indices[i] << '\n';
}

MatrixProfile load_profile(const std::string& path, size_t m) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open profile: " + path);
    MatrixProfile mp;
    mp.window = m;
    mp.exclusion = (m + 1) / 2;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError("malformed profile row: " + line);
        mp.values.push_back(std::stod(line.substr(0, comma)));
        mp.indices.push_back(std::stoull(line.substr(comma + 1)));
    }
    return mp;
}

}  // namespace gascast::mp
