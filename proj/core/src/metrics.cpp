#include "gascast/metrics.hpp"

#include <cmath>

#include "gascast/errors.hpp"
#include "gascast/stats.hpp"

namespace gascast::series {

MetricReport metrics(std::span<const double> y_true, std::span<const double> y_pred) {
    if (y_true.size() != y_pred.size())
        throw UsageError("metrics: length mismatch");
    if (y_true.empty()) throw UsageError("metrics: empty input");

    constexpr double kMapeGuard = 1e-8;
    const double n = static_cast<double>(y_true.size());

    double sse = 0.0, sae = 0.0, sape = 0.0;
    for (size_t i = 0; i < y_true.size(); ++i) {
        const double e = y_true[i] - y_pred[i];
        sse += e * e;
        sae += std::fabs(e);
        sape += std::fabs(e) / std::max(std::fabs(y_true[i]), kMapeGuard);
    }

    MetricReport rep;
    rep.rmse = std::sqrt(sse / n);
    rep.mae = sae / n;
    rep.mape = sape / n;

    const double mu = mean(y_true);
    double ss_tot = 0.0;
    for (double y : y_true) ss_tot += (y - mu) * (y - mu);
    if (ss_tot > 0.0) rep.r2 = 1.0 - sse / ss_tot;
    return rep;
}

}  // namespace gascast::series
