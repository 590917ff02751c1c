#include "gascast/dwt.hpp"

#include <cmath>
#include <limits>

#include "gascast/errors.hpp"
#include "gascast/stats.hpp"

namespace gascast::wavelets {

namespace {

// Daubechies-4 scaling (synthesis low-pass) filter, sum = sqrt(2).
const std::vector<double> kDb4Scaling = {
    0.23037781330885523,  0.7148465705525415,   0.6308807679295904,
    -0.02798376941698385, -0.18703481171888114, 0.030841381835986965,
    0.032883011666982945, -0.010597401784997278};

// Biorthogonal 3.3 spline pair: 8-tap analysis low-pass, 4-tap synthesis
// low-pass (zero-padded to 8).
const std::vector<double> kBior33DecLo = {
    0.06629126073623884, -0.19887378220871652, -0.15467960838455727,
    0.9943689110435825,  0.9943689110435825,   -0.15467960838455727,
    -0.19887378220871652, 0.06629126073623884};
const std::vector<double> kBior33RecLo = {
    0.0, 0.0, 0.1767766952966369, 0.5303300858899107,
    0.5303300858899107, 0.1767766952966369, 0.0, 0.0};

WaveletFilterBank make_bank(std::string name, std::vector<double> dec_lo,
                            std::vector<double> rec_lo) {
    WaveletFilterBank b;
    b.name = std::move(name);
    b.dec_lo = std::move(dec_lo);
    b.rec_lo = std::move(rec_lo);
    const size_t L = b.dec_lo.size();
    b.dec_hi.resize(L);
    b.rec_hi.resize(L);
    // Quadrature-mirror relations shared by the orthogonal and biorthogonal
    // cases: dec_hi[n] = (-1)^(n+1) rec_lo[n], rec_hi[n] = (-1)^n dec_lo[n].
    for (size_t n = 0; n < L; ++n) {
        const double s = (n % 2 == 0) ? 1.0 : -1.0;
        b.dec_hi[n] = -s * b.rec_lo[n];
        b.rec_hi[n] = s * b.dec_lo[n];
    }
    return b;
}

const WaveletFilterBank& db4_bank() {
    static const WaveletFilterBank bank = [] {
        std::vector<double> rec_lo = kDb4Scaling;
        std::vector<double> dec_lo(rec_lo.rbegin(), rec_lo.rend());
        return make_bank("db4", std::move(dec_lo), std::move(rec_lo));
    }();
    return bank;
}

const WaveletFilterBank& bior33_bank() {
    static const WaveletFilterBank bank =
        make_bank("bior3.3", kBior33DecLo, kBior33RecLo);
    return bank;
}

// Symmetric (half-sample) extension index: ...x1 x0 | x0 x1 ... xN-1 | xN-1...
size_t sym_index(long long i, size_t n) {
    long long idx = i;
    const long long N = static_cast<long long>(n);
    while (idx < 0 || idx >= N) {
        if (idx < 0) idx = -idx - 1;
        if (idx >= N) idx = 2 * N - 1 - idx;
    }
    return static_cast<size_t>(idx);
}

// Single-level analysis: convolve the symmetric extension and keep every
// second sample; out_len = floor((N + L - 1) / 2).
std::vector<double> analysis(const std::vector<double>& x,
                             const std::vector<double>& f) {
    const size_t N = x.size();
    const size_t L = f.size();
    const size_t out_len = (N + L - 1) / 2;
    std::vector<double> out(out_len, 0.0);
    for (size_t i = 0; i < out_len; ++i) {
        double acc = 0.0;
        const long long base = 2 * static_cast<long long>(i) + 1;
        for (size_t k = 0; k < L; ++k) {
            acc += f[k] * x[sym_index(base - static_cast<long long>(k), N)];
        }
        out[i] = acc;
    }
    return out;
}

// Single-level synthesis: upsample both coefficient branches, convolve with
// the reconstruction filters, sum, and crop to the original length.
std::vector<double> synthesis(const std::vector<double>& approx,
                              const std::vector<double>& detail,
                              const WaveletFilterBank& bank, size_t out_len) {
    const size_t L = bank.length();
    const size_t C = approx.size();
    if (detail.size() != C)
        throw NumericalError("dwt_reconstruct: coefficient length mismatch");

    const size_t up_len = 2 * C;
    const size_t full_len = up_len + L - 1;
    std::vector<double> full(full_len, 0.0);
    for (size_t i = 0; i < C; ++i) {
        const size_t pos = 2 * i;
        for (size_t k = 0; k < L; ++k) {
            full[pos + k] += approx[i] * bank.rec_lo[k];
            full[pos + k] += detail[i] * bank.rec_hi[k];
        }
    }
    // Full convolution carries L-2 transient samples on each side.
    if (out_len + (L - 2) > full_len)
        throw NumericalError("dwt_reconstruct: output length infeasible");
    std::vector<double> out(out_len, 0.0);
    for (size_t i = 0; i < out_len; ++i) out[i] = full[i + L - 2];
    return out;
}

}  // namespace

const WaveletFilterBank& filter_bank(const std::string& name) {
    if (name == "db4") return db4_bank();
    if (name == "bior3.3" || name == "bior33") return bior33_bank();
    throw UsageError("unknown wavelet '" + name + "' (supported: db4, bior3.3)");
}

size_t max_decomposition_level(size_t signal_length, size_t filter_length) {
    size_t level = 0;
    size_t n = signal_length;
    while (n >= filter_length) {
        ++level;
        n = (n + filter_length - 1) / 2;
    }
    return level;
}

DwtDecomposition dwt_decompose(const std::vector<double>& signal,
                               const WaveletFilterBank& bank, size_t J) {
    const size_t L = bank.length();
    if (signal.size() < L)
        throw UsageError("dwt_decompose: signal shorter than filter");
    if (J < 1) throw UsageError("dwt_decompose: J must be >= 1");
    const size_t max_j = max_decomposition_level(signal.size(), L);
    if (J > max_j)
        throw UsageError("dwt_decompose: J=" + std::to_string(J) +
                         " infeasible; max feasible depth is " +
                         std::to_string(max_j));

    DwtDecomposition dec;
    dec.bank_name = bank.name;
    dec.original_length = signal.size();
    std::vector<double> a = signal;
    for (size_t j = 0; j < J; ++j) {
        dec.input_lengths.push_back(a.size());
        std::vector<double> next_a = analysis(a, bank.dec_lo);
        std::vector<double> d = analysis(a, bank.dec_hi);
        dec.details.push_back(std::move(d));
        a = std::move(next_a);
    }
    dec.approx = std::move(a);
    return dec;
}

std::vector<double> dwt_reconstruct(const DwtDecomposition& dec,
                                    const WaveletFilterBank& bank) {
    if (dec.bank_name != bank.name)
        throw UsageError("dwt_reconstruct: decomposition was produced with bank '" +
                         dec.bank_name + "', not '" + bank.name + "'");
    std::vector<double> a = dec.approx;
    for (size_t j = dec.levels(); j-- > 0;) {
        a = synthesis(a, dec.details[j], bank, dec.input_lengths[j]);
    }
    return a;
}

DenoiseResult hard_threshold_denoise(const std::vector<double>& signal,
                                     const WaveletFilterBank& bank, size_t J,
                                     const std::vector<size_t>& levels,
                                     double lambda) {
    if (lambda <= 0.0) throw UsageError("hard_threshold_denoise: lambda must be positive");
    for (size_t j : levels)
        if (j < 1 || j > J)
            throw UsageError("hard_threshold_denoise: level " + std::to_string(j) +
                             " outside 1.." + std::to_string(J));

    DwtDecomposition dec = dwt_decompose(signal, bank, J);
    DenoiseResult res;
    res.params.lambda = lambda;
    for (size_t j : levels) {
        std::vector<double>& d = dec.details[j - 1];
        LevelThreshold lt;
        const double mu = mean(d);
        double mad = 0.0;
        for (double c : d) mad += std::fabs(c - mu);
        mad /= static_cast<double>(d.size());
        lt.mad = mad;
        lt.sigma = mad / lambda;
        lt.u = lt.sigma * std::sqrt(3.0 * std::log(static_cast<double>(d.size())));
        for (double& c : d) {
            if (std::fabs(c) < lt.u) {
                c = 0.0;
                ++lt.zeroed;
            }
        }
        res.params.per_level[j] = lt;
    }
    res.denoised = dwt_reconstruct(dec, bank);
    return res;
}

DenoiseReport denoise_report(const std::vector<double>& raw,
                             const std::vector<double>& denoised) {
    if (raw.size() != denoised.size())
        throw UsageError("denoise_report: length mismatch");
    double retained = 0.0, removed = 0.0, sse = 0.0;
    for (size_t i = 0; i < raw.size(); ++i) {
        const double e = raw[i] - denoised[i];
        retained += denoised[i] * denoised[i];
        removed += e * e;
        sse += e * e;
    }
    DenoiseReport rep;
    rep.rmse = std::sqrt(sse / static_cast<double>(raw.size()));
    rep.snr_db = removed == 0.0
                     ? std::numeric_limits<double>::infinity()
                     : 10.0 * std::log10(retained / removed);
    return rep;
}

}  // namespace gascast::wavelets
