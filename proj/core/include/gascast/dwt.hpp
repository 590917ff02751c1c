#pragma once

#include <map>
#include <string>
#include <vector>

namespace gascast::wavelets {

// Analysis/synthesis filter pairs. All four arrays have equal length
// (shorter biorthogonal filters are zero-padded, matching the usual
// convention for bior tables).
struct WaveletFilterBank {
    std::string name;
    std::vector<double> dec_lo;
    std::vector<double> dec_hi;
    std::vector<double> rec_lo;
    std::vector<double> rec_hi;

    size_t length() const { return dec_lo.size(); }
};

// Supported: "db4", "bior3.3". Coefficient provenance: standard published
// tables for the Daubechies-4 scaling filter and the biorthogonal 3.3
// spline pair; correctness is enforced by the perfect-reconstruction
// property tests, not by trusting the constants.
const WaveletFilterBank& filter_bank(const std::string& name);

struct DwtDecomposition {
    std::string bank_name;
    size_t original_length = 0;
    std::vector<double> approx;                // A_J
    std::vector<std::vector<double>> details;  // details[j-1] = D_j
    std::vector<size_t> input_lengths;         // signal length fed to each level

    size_t levels() const { return details.size(); }
};

size_t max_decomposition_level(size_t signal_length, size_t filter_length);

// Recursive filter-and-downsample ladder with symmetric (half-sample)
// boundary extension.
DwtDecomposition dwt_decompose(const std::vector<double>& signal,
                               const WaveletFilterBank& bank, size_t J);

std::vector<double> dwt_reconstruct(const DwtDecomposition& dec,
                                    const WaveletFilterBank& bank);

struct LevelThreshold {
    double mad = 0.0;    // mean absolute deviation about the level mean
    double sigma = 0.0;  // mad / lambda
    double u = 0.0;      // sigma * sqrt(3 * ln(#D_j))
    size_t zeroed = 0;
};

struct ThresholdParams {
    double lambda = 0.0;
    std::map<size_t, LevelThreshold> per_level;
};

struct DenoiseResult {
    std::vector<double> denoised;
    ThresholdParams params;
};

// Hard thresholding: per selected level, coefficients with |value| < u are
// set to zero before reconstruction.
DenoiseResult hard_threshold_denoise(const std::vector<double>& signal,
                                     const WaveletFilterBank& bank, size_t J,
                                     const std::vector<size_t>& levels,
                                     double lambda);

struct DenoiseReport {
    double rmse = 0.0;
    double snr_db = 0.0;  // +inf when raw == denoised
};

// snr_db = 10*log10(sum denoised^2 / sum (raw - denoised)^2): retained power
// over removed power.
DenoiseReport denoise_report(const std::vector<double>& raw,
                             const std::vector<double>& denoised);

}  // namespace gascast::wavelets
