#pragma once

#include <map>
#include <optional>
#include <span>

namespace gascast::series {

struct MetricReport {
    double rmse = 0.0;
    double mae = 0.0;
    double mape = 0.0;
    std::optional<double> r2;  // absent when SS_tot == 0
};

// rmse = sqrt(mean e^2); mae = mean |e|; mape = mean |e| / max(|y_true|, 1e-8);
// r2 = 1 - SS_res / SS_tot with SS_tot about mean(y_true).
MetricReport metrics(std::span<const double> y_true, std::span<const double> y_pred);

}  // namespace gascast::series
