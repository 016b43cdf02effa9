// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

namespace dumix {

// Dense-transformer training cost estimate, multiplier * N * D. The
// conventional multiplier is 6.
inline constexpr double kDefaultFlopMultiplier = 6.0;

double flops(double param_count, double token_count,
             double multiplier = kDefaultFlopMultiplier);

// One evaluated model: size, training tokens, metric scores in percent.
struct ModelPoint {
    std::string label;
    double param_count = 0.0;
    double token_count = 0.0;
    std::map<std::string, double> scores;  // metric -> percent in [0, 100]
};

// Least-squares line in (log10 FLOPs, log10 error) space, where error is
// (100 - score) percentage points.
struct ScalingFit {
    std::string metric;
    double slope = 0.0;
    double intercept = 0.0;
    double flop_multiplier = kDefaultFlopMultiplier;
    std::vector<std::string> point_labels;

    double predict_log_error(double log10_flops) const {
        return slope * log10_flops + intercept;
    }
};

ScalingFit fit_scaling(const std::vector<ModelPoint>& points, const std::string& metric,
                       double flop_multiplier = kDefaultFlopMultiplier);

// Signed vertical distance from the fit in log10 space. Negative means
// lower error than the family's scaling predicts.
double residual(const ModelPoint& point, const ScalingFit& fit, const std::string& metric);

}  // namespace dumix
