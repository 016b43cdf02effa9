// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "dumix/catalog.hpp"

namespace dumix {

// Tolerance for proportion/weight sums held as doubles.
inline constexpr double kProportionTolerance = 1e-9;

// Per-category epoch targets; the filler category absorbs whatever part of
// the budget the listed categories leave unused.
struct EpochHeuristic {
    std::map<std::string, double> epochs_by_category;
    std::string filler_category;
};

// A complete sampling recipe for one token budget: category proportions,
// exact integer token allocations, and per-source sampling weights.
struct MixPlan {
    std::map<std::string, double> proportions;     // category -> fraction of budget
    std::map<std::string, std::uint64_t> tokens;   // category -> tokens, sums to budget
    std::map<std::string, double> source_weights;  // source -> weight, sums to 1
    std::uint64_t budget = 0;
    std::map<std::string, double> epochs;  // realized epochs per category (metadata)
    std::string filler_category;           // empty when the plan was given explicitly

    friend bool operator==(const MixPlan&, const MixPlan&) = default;
};

// Builds the plan from epoch targets. Token counts are integers; rounding
// is largest-remainder so the category tokens sum to the budget exactly.
MixPlan plan_from_epochs(const Catalog& catalog, std::uint64_t budget,
                         const EpochHeuristic& heuristic);

// Builds the plan from explicit category proportions (must sum to 1 within
// kProportionTolerance). Zero-proportion categories are kept in the plan
// with zero tokens and no sampling weight.
MixPlan explicit_plan(const Catalog& catalog, const std::map<std::string, double>& proportions,
                      std::uint64_t budget);

// Within-category share of each source, proportional to its token count.
std::map<std::string, double> within_category_shares(const Catalog& catalog,
                                                     std::string_view category);

enum class RenormMode {
    // Category proportions stay fixed; removed mass is redistributed inside
    // each affected category proportionally to surviving source sizes.
    kWithinCategory,
    // Surviving source weights are renormalized jointly; category
    // proportions shift and token counts are recomputed.
    kAcrossCategories,
};

// Rebuilds the plan's source weights after sources were excluded from the
// catalog (tag ablations). In kWithinCategory mode, a positive-proportion
// category losing all its sources is an error.
MixPlan renormalize_after_exclusion(const MixPlan& plan, const Catalog& reduced_catalog,
                                    RenormMode mode = RenormMode::kWithinCategory);

// Same proportions and source weights over a different budget; token
// counts re-rounded by largest remainder.
MixPlan rescale_plan(const MixPlan& plan, std::uint64_t new_budget);

// Plan files share the catalog's structured-text family; byte-stable.
std::string plan_to_string(const MixPlan& plan);
MixPlan plan_from_string(const std::string& text);
void save_plan(const MixPlan& plan, const std::filesystem::path& path);
MixPlan load_plan(const std::filesystem::path& path);

}  // namespace dumix
