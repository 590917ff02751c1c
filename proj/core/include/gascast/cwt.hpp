#pragma once

#include <complex>
#include <string>
#include <vector>

namespace gascast::wavelets {

// Dyadic scale ladder: 8 sub-octaves per octave from 2*dt up to T*dt/4.
std::vector<double> scale_ladder(size_t n_samples, double dt,
                                 size_t suboctaves = 8);

struct CwtSpectrum {
    std::vector<double> scales;
    size_t n_times = 0;
    double omega0 = 6.0;
    double dt = 1.0;
    // Row-major n_times x scales.
    std::vector<std::complex<double>> coeff;

    std::complex<double>& at(size_t t, size_t s) { return coeff[t * scales.size() + s]; }
    std::complex<double> at(size_t t, size_t s) const { return coeff[t * scales.size() + s]; }
};

// Morlet CWT, zero-padded boundaries, kernel truncated at |t-tau| <= 8s.
// The FFT route and the direct sum are the same linear convolution and must
// agree to near machine precision.
CwtSpectrum cwt_morlet(const std::vector<double>& signal,
                       const std::vector<double>& scales, double omega0,
                       double dt);
CwtSpectrum cwt_morlet_direct(const std::vector<double>& signal,
                              const std::vector<double>& scales, double omega0,
                              double dt);

// Morlet Fourier factor: period = fourier_factor(omega0) * scale.
double fourier_factor(double omega0);

struct CoherenceParams {
    double omega0 = 6.0;
    double dt = 1.0;
    size_t suboctaves = 8;
    // Disabling smoothing degenerates R^2 to identically 1; kept as a switch
    // so the test suite can confirm that and guard the smoothing path.
    bool smooth = true;
};

struct CoherenceMap {
    std::vector<double> scales;
    size_t n_times = 0;
    double dt = 1.0;
    std::vector<double> r2;           // n_times x scales
    std::vector<double> phase;        // n_times x scales, atan2(imag, real)
    std::vector<double> cross_power;  // |smoothed cross spectrum|
    std::vector<double> coi_scale;    // per-tau largest in-cone scale

    size_t idx(size_t t, size_t s) const { return t * scales.size() + s; }
    bool in_cone(size_t t, size_t s) const { return scales[s] <= coi_scale[t]; }
};

// Squared coherence with Torrence-style smoothing: per-scale Gaussian in time
// (std s/dt samples) and a 0.6-octave boxcar in scale. Cone of influence at
// e-folding time sqrt(2)*s.
CoherenceMap wavelet_coherence(const std::vector<double>& x,
                               const std::vector<double>& y,
                               const CoherenceParams& params);

// Grid file: header tau,scale,r2,phase,in_cone; one row per (tau, scale).
void export_coherence(const CoherenceMap& map, const std::string& path);
CoherenceMap read_coherence(const std::string& path);

}  // namespace gascast::wavelets
