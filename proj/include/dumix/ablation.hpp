// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dumix/catalog.hpp"
#include "dumix/eval_agg.hpp"
#include "dumix/schedule.hpp"

namespace dumix {

// One experiment in a sweep or exclusion grid.
struct ExperimentSpec {
    std::string label;
    TrainingSchedule schedule;
    std::uint64_t seed = 0;
};

// One spec per upsampling fraction plus the 0% baseline, deterministic
// order (baseline first, then ascending fractions). Labels are "0pct",
// "5pct", ...
std::vector<ExperimentSpec> du_sweep(const MixPlan& base, const MixPlan& du,
                                     std::uint64_t total_budget,
                                     const std::vector<double>& fractions, std::uint64_t seed,
                                     std::uint32_t seq_len = kDefaultSeqLen);

// Variant of `spec` with `tag`-carrying sources removed from every phase
// after the first (the upsampling phases), weights renormalized within
// categories. The label gains a "-sans-<tag>" suffix. A tag matching no
// source yields a plan-identical spec under the new label.
ExperimentSpec exclusion_variant(const ExperimentSpec& spec, const std::string& tag,
                                 const Catalog& catalog);

// Per-metric percentage-point deltas, variant minus baseline.
std::map<std::string, double> delta_report(const GauntletReport& baseline,
                                           const GauntletReport& variant);

}  // namespace dumix
