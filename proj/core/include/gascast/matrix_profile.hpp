#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gascast/frame.hpp"

namespace gascast::mp {

struct MatrixProfile {
    size_t window = 0;            // m
    size_t exclusion = 0;         // trivial-match radius, ceil(m/2)
    std::vector<double> values;   // length T - m + 1
    std::vector<size_t> indices;  // nearest-neighbor start positions
    bool sigma_floored = false;   // some window had (near-)zero std
};

// O(T^2 m) reference: explicit per-window mean/std, z-normalized Euclidean
// distance, trivial matches excluded within |i-j| <= exclusion.
MatrixProfile mp_bruteforce(const std::vector<double>& series, size_t m);

// O(T^2) streaming dot-product path (diagonal recurrence over running
// means/stds); must match mp_bruteforce within 1e-8.
MatrixProfile mp_fast(const std::vector<double>& series, size_t m);

// Snapshot k is the profile of the prefix visible at walk position k.
// Prefixes shorter than 2m are skipped.
struct RollingSnapshot {
    size_t prefix_length = 0;
    MatrixProfile profile;
};
std::vector<RollingSnapshot> mp_rolling(const std::vector<double>& series,
                                        size_t m, size_t step);

// Past-only profile: value[i] is the distance to the nearest admissible
// neighbor that starts strictly earlier, so no future data enters any entry.
// Entries with no admissible past neighbor are +inf (gap-masked downstream).
MatrixProfile mp_past_only(const std::vector<double>& series, size_t m);

// Drops the first m-1 frame rows and appends the profile as variable "mp"
// (or "mp_rev" when reversed).
series::FeatureFrame align_mp(const series::FeatureFrame& frame,
                              const MatrixProfile& mp, size_t m,
                              const std::string& column_name = "mp");

MatrixProfile reverse_mp(const MatrixProfile& mp);

// Two-column text: value, neighbor index.
void save_profile(const MatrixProfile& mp, const std::string& path);
MatrixProfile load_profile(const std::string& path, size_t m);

}  // namespace gascast::mp
