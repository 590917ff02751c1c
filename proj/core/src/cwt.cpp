#include "gascast/cwt.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gascast/csv.hpp"
#include "gascast/errors.hpp"
#include "gascast/stats.hpp"

namespace gascast::wavelets {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kKernelSupport = 8.0;  // e^{-32} tail, below double epsilon

// Iterative radix-2 Cooley-Tukey; in-place, n must be a power of two.
void fft(std::vector<cplx>& a, bool inverse) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0);
            for (size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse)
        for (auto& z : a) z /= static_cast<double>(n);
}

size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Sampled conjugate daughter wavelet: g[m] = dt/sqrt(s) * conj(psi(m*dt/s))
// for m in [-M, M].
std::vector<cplx> wavelet_kernel(double scale, double omega0, double dt,
                                 long long& half_width) {
    half_width = static_cast<long long>(std::ceil(kKernelSupport * scale / dt));
    std::vector<cplx> g(2 * half_width + 1);
    const double norm = dt / std::sqrt(scale) * std::pow(kPi, -0.25);
    for (long long m = -half_width; m <= half_width; ++m) {
        const double u = static_cast<double>(m) * dt / scale;
        const double envelope = std::exp(-0.5 * u * u);
        g[static_cast<size_t>(m + half_width)] =
            norm * envelope * cplx(std::cos(omega0 * u), -std::sin(omega0 * u));
    }
    return g;
}

void check_scales(const std::vector<double>& scales) {
    for (size_t i = 0; i < scales.size(); ++i) {
        if (scales[i] <= 0.0) throw UsageError("cwt: non-positive scale");
        if (i > 0 && scales[i] <= scales[i - 1])
            throw UsageError("cwt: scales must be strictly increasing");
    }
}

}  // namespace

std::vector<double> scale_ladder(size_t n_samples, double dt, size_t suboctaves) {
    if (n_samples < 8) throw UsageError("scale_ladder: signal too short");
    const double s_min = 2.0 * dt;
    const double s_max = static_cast<double>(n_samples) * dt / 4.0;
    std::vector<double> scales;
    const double step = 1.0 / static_cast<double>(suboctaves);
    for (double e = 0.0;; e += step) {
        const double s = s_min * std::pow(2.0, e);
        if (s > s_max * (1.0 + 1e-12)) break;
        scales.push_back(s);
    }
    return scales;
}

double fourier_factor(double omega0) {
    return 4.0 * kPi / (omega0 + std::sqrt(2.0 + omega0 * omega0));
}

CwtSpectrum cwt_morlet_direct(const std::vector<double>& signal,
                              const std::vector<double>& scales, double omega0,
                              double dt) {
    if (dt <= 0.0) throw UsageError("cwt: dt must be positive");
    if (omega0 <= 0.0) throw UsageError("cwt: omega0 must be positive");
    check_scales(scales);

    const long long N = static_cast<long long>(signal.size());
    CwtSpectrum spec;
    spec.scales = scales;
    spec.n_times = signal.size();
    spec.omega0 = omega0;
    spec.dt = dt;
    spec.coeff.assign(signal.size() * scales.size(), cplx(0.0));

    for (size_t si = 0; si < scales.size(); ++si) {
        long long M = 0;
        const std::vector<cplx> g = wavelet_kernel(scales[si], omega0, dt, M);
        for (long long tau = 0; tau < N; ++tau) {
            cplx acc(0.0);
            const long long lo = std::max(-M, -tau);
            const long long hi = std::min(M, N - 1 - tau);
            for (long long m = lo; m <= hi; ++m)
                acc += signal[static_cast<size_t>(tau + m)] *
                       g[static_cast<size_t>(m + M)];
            spec.at(static_cast<size_t>(tau), si) = acc;
        }
    }
    return spec;
}

CwtSpectrum cwt_morlet(const std::vector<double>& signal,
                       const std::vector<double>& scales, double omega0,
                       double dt) {
    if (dt <= 0.0) throw UsageError("cwt: dt must be positive");
    if (omega0 <= 0.0) throw UsageError("cwt: omega0 must be positive");
    check_scales(scales);

    const size_t N = signal.size();
    CwtSpectrum spec;
    spec.scales = scales;
    spec.n_times = N;
    spec.omega0 = omega0;
    spec.dt = dt;
    spec.coeff.assign(N * scales.size(), cplx(0.0));

    for (size_t si = 0; si < scales.size(); ++si) {
        long long M = 0;
        const std::vector<cplx> g = wavelet_kernel(scales[si], omega0, dt, M);
        const size_t klen = g.size();
        const size_t fft_len = next_pow2(N + klen - 1);

        std::vector<cplx> fx(fft_len, cplx(0.0));
        for (size_t i = 0; i < N; ++i) fx[i] = signal[i];
        // Convolution flips its second argument, so load the kernel reversed
        // to realize the correlation sum_m x[tau+m] g[m].
        std::vector<cplx> fg(fft_len, cplx(0.0));
        for (size_t i = 0; i < klen; ++i) fg[i] = g[klen - 1 - i];

        fft(fx, false);
        fft(fg, false);
        for (size_t i = 0; i < fft_len; ++i) fx[i] *= fg[i];
        fft(fx, true);

        // Linear convolution index m + M aligns W(tau) = sum_m x[tau+m] g[m].
        for (size_t tau = 0; tau < N; ++tau)
            spec.at(tau, si) = fx[tau + static_cast<size_t>(M)];
    }
    return spec;
}

namespace {

// Per-scale Gaussian smoothing in time, std = s/dt samples, truncated at 4 std.
std::vector<double> smooth_time_real(const std::vector<double>& row_major,
                                     size_t n_times, size_t n_scales, size_t si,
                                     double sigma_samples) {
    const long long W = std::max<long long>(1, static_cast<long long>(std::ceil(4.0 * sigma_samples)));
    std::vector<double> kernel(2 * W + 1);
    double ksum = 0.0;
    for (long long m = -W; m <= W; ++m) {
        const double u = static_cast<double>(m) / sigma_samples;
        kernel[static_cast<size_t>(m + W)] = std::exp(-0.5 * u * u);
        ksum += kernel[static_cast<size_t>(m + W)];
    }
    for (double& k : kernel) k /= ksum;

    std::vector<double> out(n_times, 0.0);
    for (long long t = 0; t < static_cast<long long>(n_times); ++t) {
        double acc = 0.0, wsum = 0.0;
        const long long lo = std::max(-W, -t);
        const long long hi = std::min(W, static_cast<long long>(n_times) - 1 - t);
        for (long long m = lo; m <= hi; ++m) {
            const double k = kernel[static_cast<size_t>(m + W)];
            acc += k * row_major[static_cast<size_t>(t + m) * n_scales + si];
            wsum += k;
        }
        out[static_cast<size_t>(t)] = acc / wsum;
    }
    return out;
}

// Boxcar over 0.6 octave in the scale direction, edge-truncated.
void smooth_scale(std::vector<double>& grid, size_t n_times, size_t n_scales,
                  size_t suboctaves) {
    const long long half = std::max<long long>(
        1, static_cast<long long>(std::lround(0.3 * static_cast<double>(suboctaves))));
    std::vector<double> row(n_scales);
    for (size_t t = 0; t < n_times; ++t) {
        for (size_t s = 0; s < n_scales; ++s) row[s] = grid[t * n_scales + s];
        for (long long s = 0; s < static_cast<long long>(n_scales); ++s) {
            const long long lo = std::max<long long>(0, s - half);
            const long long hi = std::min<long long>(static_cast<long long>(n_scales) - 1, s + half);
            double acc = 0.0;
            for (long long k = lo; k <= hi; ++k) acc += row[static_cast<size_t>(k)];
            grid[t * n_scales + static_cast<size_t>(s)] =
                acc / static_cast<double>(hi - lo + 1);
        }
    }
}

void smooth_grid(std::vector<double>& grid, size_t n_times, size_t n_scales,
                 const std::vector<double>& scales, double dt, size_t suboctaves) {
    std::vector<double> tmp(grid.size());
    for (size_t si = 0; si < n_scales; ++si) {
        const double sigma = scales[si] / dt;
        std::vector<double> col = smooth_time_real(grid, n_times, n_scales, si, sigma);
        for (size_t t = 0; t < n_times; ++t) tmp[t * n_scales + si] = col[t];
    }
    grid = std::move(tmp);
    smooth_scale(grid, n_times, n_scales, suboctaves);
}

}  // namespace

CoherenceMap wavelet_coherence(const std::vector<double>& x,
                               const std::vector<double>& y,
                               const CoherenceParams& params) {
    if (x.size() != y.size())
        throw UsageError("wavelet_coherence: length mismatch");
    if (stddev_pop(x) == 0.0 || stddev_pop(y) == 0.0)
        throw NumericalError("wavelet_coherence: zero auto-power (constant series)");

    const std::vector<double> scales = scale_ladder(x.size(), params.dt, params.suboctaves);
    const CwtSpectrum wx = cwt_morlet(x, scales, params.omega0, params.dt);
    const CwtSpectrum wy = cwt_morlet(y, scales, params.omega0, params.dt);

    const size_t T = x.size();
    const size_t S = scales.size();

    // s^{-1}-weighted cross and auto spectra.
    std::vector<double> cross_re(T * S), cross_im(T * S), pow_x(T * S), pow_y(T * S);
    for (size_t t = 0; t < T; ++t) {
        for (size_t s = 0; s < S; ++s) {
            const cplx wxy = wx.at(t, s) * std::conj(wy.at(t, s));
            const double inv_s = 1.0 / scales[s];
            const size_t i = t * S + s;
            cross_re[i] = wxy.real() * inv_s;
            cross_im[i] = wxy.imag() * inv_s;
            pow_x[i] = std::norm(wx.at(t, s)) * inv_s;
            pow_y[i] = std::norm(wy.at(t, s)) * inv_s;
        }
    }
    if (params.smooth) {
        smooth_grid(cross_re, T, S, scales, params.dt, params.suboctaves);
        smooth_grid(cross_im, T, S, scales, params.dt, params.suboctaves);
        smooth_grid(pow_x, T, S, scales, params.dt, params.suboctaves);
        smooth_grid(pow_y, T, S, scales, params.dt, params.suboctaves);
    }

    CoherenceMap map;
    map.scales = scales;
    map.n_times = T;
    map.dt = params.dt;
    map.r2.resize(T * S);
    map.phase.resize(T * S);
    map.cross_power.resize(T * S);
    map.coi_scale.resize(T);
    for (size_t t = 0; t < T; ++t) {
        const double edge = static_cast<double>(std::min(t, T - 1 - t)) * params.dt;
        map.coi_scale[t] = edge / std::sqrt(2.0);
    }
    for (size_t i = 0; i < T * S; ++i) {
        const double num = cross_re[i] * cross_re[i] + cross_im[i] * cross_im[i];
        const double den = pow_x[i] * pow_y[i];
        map.r2[i] = den > 0.0 ? num / den : 0.0;
        map.phase[i] = std::atan2(cross_im[i], cross_re[i]);
        map.cross_power[i] = std::sqrt(num);
    }
    return map;
}

void export_coherence(const CoherenceMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write coherence grid: " + path);
    out.precision(17);
    out << "tau,scale,r2,phase,in_cone\n";
    for (size_t t = 0; t < map.n_times; ++t) {
        for (size_t s = 0; s < map.scales.size(); ++s) {
            out << t << ',' << map.scales[s] << ',' << map.r2[map.idx(t, s)]
                << ',' << map.phase[map.idx(t, s)] << ','
                << (map.in_cone(t, s) ? 1 : 0) << '\n';
        }
    }
}

CoherenceMap read_coherence(const std::string& path) {
    csv::Table t = csv::read_table(path);
    const int c_tau = t.column("tau");
    const int c_scale = t.column("scale");
    const int c_r2 = t.column("r2");
    const int c_phase = t.column("phase");
    if (c_tau < 0 || c_scale < 0 || c_r2 < 0 || c_phase < 0)
        throw DataError("coherence grid missing columns: " + path);

    CoherenceMap map;
    size_t max_tau = 0;
    std::vector<double> scales;
    for (const auto& row : t.rows) {
        const size_t tau = static_cast<size_t>(std::stoull(row.at(c_tau)));
        max_tau = std::max(max_tau, tau);
        if (tau == 0) scales.push_back(std::stod(row.at(c_scale)));
    }
    map.scales = scales;
    map.n_times = max_tau + 1;
    map.r2.assign(map.n_times * scales.size(), 0.0);
    map.phase.assign(map.n_times * scales.size(), 0.0);
    map.cross_power.assign(map.n_times * scales.size(), 0.0);
    map.coi_scale.assign(map.n_times, 0.0);
    size_t i = 0;
    for (const auto& row : t.rows) {
        const size_t tau = static_cast<size_t>(std::stoull(row.at(c_tau)));
        const size_t s = i % scales.size();
        map.r2[map.idx(tau, s)] = std::stod(row.at(c_r2));
        map.phase[map.idx(tau, s)] = std::stod(row.at(c_phase));
        ++i;
    }
    for (size_t tau = 0; tau < map.n_times; ++tau) {
        const double edge = static_cast<double>(std::min(tau, map.n_times - 1 - tau));
        map.coi_scale[tau] = edge / std::sqrt(2.0);
    }
    return map;
}

}  // namespace gascast::wavelets
