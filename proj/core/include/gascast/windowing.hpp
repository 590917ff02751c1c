#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gascast/frame.hpp"

namespace gascast::series {

struct WindowExample {
    size_t start_row = 0;              // first input row in the frame
    std::vector<double> inputs;        // n x V, row-major
    std::vector<double> targets;       // H values y_{t+1..t+H}
};

struct WindowedDataset {
    size_t input_len = 0;   // n
    size_t horizon = 0;     // H
    size_t n_vars = 0;      // V
    std::string target_variable;
    size_t target_index = 0;
    std::vector<WindowExample> examples;  // strictly chronological
    size_t dropped_gap_windows = 0;
};

// Sliding windows of n input steps and H forecast steps; windows touching a
// masked gap in any selected variable are dropped and counted.
WindowedDataset make_windows(const FeatureFrame& frame, size_t n, size_t H,
                             const std::string& target);

struct SplitDataset {
    WindowedDataset train;
    WindowedDataset validation;
};

// Chronological split: first floor(0.7*count) examples train, rest validation.
SplitDataset split_70_30(const WindowedDataset& dataset);

struct WalkWindow {
    size_t start_row = 0;  // inclusive
    size_t end_row = 0;    // exclusive; window is frame rows [start, end)
};

struct WalkForwardPlan {
    size_t train_span = 0;  // steps
    size_t stride = 0;      // steps
    std::vector<WalkWindow> windows;
};

// Windows of train_span rows advanced by stride until the frame end; each
// window gets its internal 70:30 chronological split at modeling time.
WalkForwardPlan walk_forward(const FeatureFrame& frame, size_t train_span,
                             size_t stride);

}  // namespace gascast::series
