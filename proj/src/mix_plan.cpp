// SPDX-License-Identifier: Apache-2.0
#include "dumix/mix_plan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "dumix/errors.hpp"

namespace dumix {

using nlohmann::json;

namespace {

// Rounds real-valued per-category targets (which sum to `total` in exact
// arithmetic) to integers that sum to `total` exactly: floor everything,
// then hand the leftover tokens to the largest fractional remainders.
// Ties break on category name so the result is order-independent.
std::map<std::string, std::uint64_t> largest_remainder(
    const std::vector<std::pair<std::string, long double>>& targets, std::uint64_t total) {
    struct Part {
        std::string name;
        std::uint64_t floor;
        long double remainder;
    };
    std::vector<Part> parts;
    parts.reserve(targets.size());
    std::uint64_t floor_sum = 0;
    for (const auto& [name, target] : targets) {
        long double t = std::max<long double>(target, 0.0L);
        auto f = static_cast<std::uint64_t>(t);
        if (f > total) f = total;
        parts.push_back({name, f, t - static_cast<long double>(f)});
        floor_sum += f;
    }
    if (floor_sum > total)
        throw ValidationError("token targets exceed the budget");
    std::uint64_t deficit = total - floor_sum;
    if (deficit > parts.size())
        throw ValidationError("token targets fall short of the budget by more than rounding");

    std::vector<std::size_t> order(parts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (parts[a].remainder != parts[b].remainder)
            return parts[a].remainder > parts[b].remainder;
        return parts[a].name < parts[b].name;
    });

    std::map<std::string, std::uint64_t> out;
    for (std::size_t k = 0; k < order.size(); ++k)
        out[parts[order[k]].name] = parts[order[k]].floor + (k < deficit ? 1 : 0);
    return out;
}

void fill_source_weights(MixPlan& plan, const Catalog& catalog) {
    plan.source_weights.clear();
    for (const auto& [category, proportion] : plan.proportions) {
        if (proportion <= 0.0) continue;
        std::map<std::string, double> shares = within_category_shares(catalog, category);
        for (const auto& [source, share] : shares)
            plan.source_weights[source] = proportion * share;
    }
}

void fill_epochs(MixPlan& plan, const std::map<std::string, std::uint64_t>& totals) {
    plan.epochs.clear();
    for (const auto& [category, tokens] : plan.tokens) {
        auto it = totals.find(category);
        if (it != totals.end() && it->second > 0)
            plan.epochs[category] =
                static_cast<double>(tokens) / static_cast<double>(it->second);
    }
}

}  // namespace

std::map<std::string, double> within_category_shares(const Catalog& catalog,
                                                     std::string_view category) {
    std::uint64_t total = 0;
    std::vector<const DataSource*> members;
    for (const DataSource& s : catalog.sources) {
        if (s.category == category) {
            members.push_back(&s);
            total += s.token_count;
        }
    }
    if (members.empty() || total == 0)
        throw ValidationError("category '" + std::string(category) + "' has no sources");
    std::map<std::string, double> shares;
    for (const DataSource* s : members)
        shares[s->name] = static_cast<double>(s->token_count) / static_cast<double>(total);
    return shares;
}

MixPlan plan_from_epochs(const Catalog& catalog, std::uint64_t budget,
                         const EpochHeuristic& heuristic) {
    if (budget == 0) throw ValidationError("budget must be positive");
    if (heuristic.filler_category.empty())
        throw ValidationError("epoch heuristic needs a filler category");
    if (heuristic.epochs_by_category.count(heuristic.filler_category))
        throw ValidationError("filler category '" + heuristic.filler_category +
                              "' must not carry an epoch target");
    std::map<std::string, std::uint64_t> totals = category_totals(catalog);
    if (!totals.count(heuristic.filler_category))
        throw ValidationError("filler category '" + heuristic.filler_category +
                              "' is empty in the catalog");

    std::vector<std::pair<std::string, long double>> targets;
    long double non_filler = 0.0L;
    for (const auto& [category, epochs] : heuristic.epochs_by_category) {
        if (epochs < 0.0)
            throw ValidationError("negative epoch target for category '" + category + "'");
        auto it = totals.find(category);
        if (it == totals.end())
            throw ValidationError("category '" + category + "' is empty in the catalog");
        long double t = static_cast<long double>(epochs) * static_cast<long double>(it->second);
        targets.emplace_back(category, t);
        non_filler += t;
    }
    // Half-token slack: feasibility should not hinge on the last rounding ulp.
    if (non_filler > static_cast<long double>(budget) + 0.5L) {
        std::ostringstream msg;
        msg << "epoch targets require " << static_cast<std::uint64_t>(non_filler)
            << " tokens but the budget is " << budget;
        throw ValidationError(msg.str());
    }
    targets.emplace_back(heuristic.filler_category,
                         static_cast<long double>(budget) - non_filler);

    MixPlan plan;
    plan.budget = budget;
    plan.filler_category = heuristic.filler_category;
    plan.tokens = largest_remainder(targets, budget);
    for (const auto& [category, tokens] : plan.tokens)
        plan.proportions[category] = static_cast<double>(tokens) / static_cast<double>(budget);
    fill_epochs(plan, totals);
    fill_source_weights(plan, catalog);
    return plan;
}

MixPlan explicit_plan(const Catalog& catalog, const std::map<std::string, double>& proportions,
                      std::uint64_t budget) {
    if (budget == 0) throw ValidationError("budget must be positive");
    double sum = 0.0;
    for (const auto& [category, p] : proportions) {
        if (p < 0.0 || p > 1.0)
            throw ValidationError("proportion for '" + category + "' outside [0, 1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProportionTolerance) {
        std::ostringstream msg;
        msg << "proportions sum to " << sum << ", expected 1";
        throw ValidationError(msg.str());
    }
    for (const auto& [category, p] : proportions)
        if (p > 0.0 && !catalog.has_category(category))
            throw ValidationError("category '" + category + "' is empty in the catalog");

    std::vector<std::pair<std::string, long double>> targets;
    for (const auto& [category, p] : proportions)
        targets.emplace_back(category,
                             static_cast<long double>(p) * static_cast<long double>(budget));

    MixPlan plan;
    plan.budget = budget;
    plan.tokens = largest_remainder(targets, budget);
    for (const auto& [category, tokens] : plan.tokens)
        plan.proportions[category] = static_cast<double>(tokens) / static_cast<double>(budget);
    fill_epochs(plan, category_totals(catalog));
    fill_source_weights(plan, catalog);
    return plan;
}

MixPlan renormalize_after_exclusion(const MixPlan& plan, const Catalog& reduced_catalog,
                                    RenormMode mode) {
    for (const DataSource& s : reduced_catalog.sources)
        if (plan.proportions.count(s.category) && plan.proportions.at(s.category) > 0.0 &&
            !plan.source_weights.count(s.name))
            throw ValidationError("source '" + s.name +
                                  "' in the reduced catalog was not part of the plan");

    if (mode == RenormMode::kWithinCategory) {
        MixPlan out = plan;
        out.source_weights.clear();
        std::map<std::string, std::uint64_t> totals = category_totals(reduced_catalog);
        for (const auto& [category, proportion] : plan.proportions) {
            if (proportion <= 0.0) continue;
            if (!reduced_catalog.has_category(category))
                throw ValidationError("exclusion removed every source of category '" + category +
                                      "' which holds proportion " + std::to_string(proportion));
            bool changed = false;
            for (const auto& [source, share] : within_category_shares(reduced_catalog, category)) {
                double weight = proportion * share;
                auto it = plan.source_weights.find(source);
                if (it == plan.source_weights.end() || it->second != weight) changed = true;
                out.source_weights[source] = weight;
            }
            // Epoch metadata is refreshed only where mass actually moved;
            // an exclusion touching nothing is an exact identity.
            if (changed && totals.count(category))
                out.epochs[category] = static_cast<double>(plan.tokens.at(category)) /
                                       static_cast<double>(totals.at(category));
        }
        return out;
    }

    // Across-category mode: drop excluded weights, renormalize the rest
    // jointly, then rebuild category proportions and token counts.
    double surviving = 0.0;
    std::map<std::string, double> kept;
    for (const DataSource& s : reduced_catalog.sources) {
        auto it = plan.source_weights.find(s.name);
        if (it != plan.source_weights.end()) {
            kept[s.name] = it->second;
            surviving += it->second;
        }
    }
    if (surviving <= 0.0)
        throw ValidationError("exclusion removed all weighted sources from the plan");

    MixPlan out;
    out.budget = plan.budget;
    out.filler_category = plan.filler_category;
    std::map<std::string, double> category_weight;
    for (auto& [source, weight] : kept) {
        weight /= surviving;
        out.source_weights[source] = weight;
        category_weight[reduced_catalog.at(source).category] += weight;
    }
    for (const auto& [category, p] : plan.proportions)
        out.proportions[category] = 0.0;  // categories stay visible even when emptied
    for (const auto& [category, w] : category_weight) out.proportions[category] = w;

    std::vector<std::pair<std::string, long double>> targets;
    for (const auto& [category, p] : out.proportions)
        targets.emplace_back(category,
                             static_cast<long double>(p) * static_cast<long double>(out.budget));
    out.tokens = largest_remainder(targets, out.budget);
    fill_epochs(out, category_totals(reduced_catalog));
    return out;
}

MixPlan rescale_plan(const MixPlan& plan, std::uint64_t new_budget) {
    if (new_budget == 0) throw ValidationError("budget must be positive");
    MixPlan out = plan;
    out.budget = new_budget;
    std::vector<std::pair<std::string, long double>> targets;
    for (const auto& [category, p] : plan.proportions)
        targets.emplace_back(category,
                             static_cast<long double>(p) * static_cast<long double>(new_budget));
    out.tokens = largest_remainder(targets, new_budget);
    double ratio = static_cast<double>(new_budget) / static_cast<double>(plan.budget);
    for (auto& [category, e] : out.epochs) e *= ratio;
    return out;
}

std::string plan_to_string(const MixPlan& plan) {
    json j;
    j["version"] = 1;
    j["budget"] = plan.budget;
    j["proportions"] = plan.proportions;
    j["tokens"] = plan.tokens;
    j["epochs"] = plan.epochs;
    j["source_weights"] = plan.source_weights;
    if (!plan.filler_category.empty()) j["filler_category"] = plan.filler_category;
    return j.dump(2) + "\n";
}

MixPlan plan_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("plan parse error: ") + e.what());
    }
    MixPlan plan;
    try {
        if (j.at("version").get<int>() != 1)
            throw ConfigError("unsupported plan version");
        plan.budget = j.at("budget").get<std::uint64_t>();
        plan.proportions = j.at("proportions").get<std::map<std::string, double>>();
        plan.tokens = j.at("tokens").get<std::map<std::string, std::uint64_t>>();
        plan.epochs = j.at("epochs").get<std::map<std::string, double>>();
        plan.source_weights = j.at("source_weights").get<std::map<std::string, double>>();
        if (j.contains("filler_category"))
            plan.filler_category = j.at("filler_category").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("plan parse error: ") + e.what());
    }
    return plan;
}

void save_plan(const MixPlan& plan, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write plan '" + path.string() + "'");
    out << plan_to_string(plan);
    if (!out) throw IoError("write failed for plan '" + path.string() + "'");
}

MixPlan load_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open plan '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return plan_from_string(buf.str());
}

}  // namespace dumix
