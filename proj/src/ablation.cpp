// SPDX-License-Identifier: Apache-2.0
#include "dumix/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "dumix/errors.hpp"
#include "dumix/mix_plan.hpp"

namespace dumix {

namespace {

std::string fraction_label(double f) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%gpct", f * 100.0);
    return buf;
}

}  // namespace

std::vector<ExperimentSpec> du_sweep(const MixPlan& base, const MixPlan& du,
                                     std::uint64_t total_budget,
                                     const std::vector<double>& fractions, std::uint64_t seed,
                                     std::uint32_t seq_len) {
    std::set<double> seen;
    for (double f : fractions) {
        if (!(f >= 0.0) || f >= 1.0)
            throw ValidationError("du fraction " + std::to_string(f) + " outside [0, 1)");
        if (!seen.insert(f).second)
            throw ValidationError("duplicate du fraction " + std::to_string(f));
    }

    std::vector<double> sorted(fractions);
    std::sort(sorted.begin(), sorted.end());

    std::vector<ExperimentSpec> specs;
    specs.push_back(
        ExperimentSpec{"0pct", make_du_schedule(base, du, total_budget, 0.0, seq_len), seed});
    for (double f : sorted) {
        if (f == 0.0) continue;  // the baseline is always present
        specs.push_back(ExperimentSpec{fraction_label(f),
                                       make_du_schedule(base, du, total_budget, f, seq_len), seed});
    }
    return specs;
}

ExperimentSpec exclusion_variant(const ExperimentSpec& spec, const std::string& tag,
                                 const Catalog& catalog) {
    ExcludeResult reduced = exclude_by_tag(catalog, tag);
    ExperimentSpec variant = spec;
    variant.label = spec.label + "-sans-" + tag;
    for (std::size_t i = 1; i < variant.schedule.phases.size(); ++i)
        variant.schedule.phases[i].plan =
            renormalize_after_exclusion(variant.schedule.phases[i].plan, reduced.catalog);
    return variant;
}

std::map<std::string, double> delta_report(const GauntletReport& baseline,
                                           const GauntletReport& variant) {
    auto base_rows = baseline.flatten();
    auto var_rows = variant.flatten();
    if (base_rows.size() != var_rows.size())
        throw ValidationError("reports '" + baseline.label + "' and '" + variant.label +
                              "' carry different metric sets");
    std::map<std::string, double> deltas;
    for (std::size_t i = 0; i < base_rows.size(); ++i) {
        if (base_rows[i].first != var_rows[i].first)
            throw ValidationError("reports '" + baseline.label + "' and '" + variant.label +
                                  "' carry different metric sets");
        deltas[base_rows[i].first] = var_rows[i].second - base_rows[i].second;
    }
    return deltas;
}

}  // namespace dumix
