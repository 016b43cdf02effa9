// SPDX-License-Identifier: Apache-2.0
#include "dumix/scaling.hpp"

#include <cmath>

#include "dumix/errors.hpp"

namespace dumix {

double flops(double param_count, double token_count, double multiplier) {
    if (!(param_count > 0.0) || !(token_count > 0.0) || !(multiplier > 0.0))
        throw ValidationError("flops needs positive parameter count, token count and multiplier");
    return multiplier * param_count * token_count;
}

namespace {

double log_error(const ModelPoint& point, const std::string& metric) {
    auto it = point.scores.find(metric);
    if (it == point.scores.end())
        throw ValidationError("point '" + point.label + "' has no metric '" + metric + "'");
    double error = 100.0 - it->second;
    if (!(error > 0.0))
        throw ValidationError("point '" + point.label + "' has zero error on '" + metric +
                              "'; log-error fit undefined");
    return std::log10(error);
}

}  // namespace

ScalingFit fit_scaling(const std::vector<ModelPoint>& points, const std::string& metric,
                       double flop_multiplier) {
    if (points.size() < 2) throw ValidationError("scaling fit needs at least two points");

    std::vector<double> xs, ys;
    ScalingFit fit;
    fit.metric = metric;
    fit.flop_multiplier = flop_multiplier;
    for (const ModelPoint& p : points) {
        xs.push_back(std::log10(flops(p.param_count, p.token_count, flop_multiplier)));
        ys.push_back(log_error(p, metric));
        fit.point_labels.push_back(p.label);
    }

    double n = static_cast<double>(xs.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mean_x += xs[i];
        mean_y += ys[i];
    }
    mean_x /= n;
    mean_y /= n;

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
        sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
    }
    if (sxx == 0.0)
        throw ValidationError("scaling fit degenerate: all points share one FLOP count");

    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    return fit;
}

double residual(const ModelPoint& point, const ScalingFit& fit, const std::string& metric) {
    double x = std::log10(flops(point.param_count, point.token_count, fit.flop_multiplier));
    return log_error(point, metric) - fit.predict_log_error(x);
}

}  // namespace dumix
