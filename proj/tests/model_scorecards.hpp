// SPDX-License-Identifier: Apache-2.0
//
// Recorded scorecards for the published 7B-class model family used as
// aggregation fixtures: six competency percents, the printed core average,
// and headline metrics where available. Inputs carry two-decimal printed
// precision, so recomputed core averages are checked within +/-0.05.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "dumix/eval_agg.hpp"

namespace fixtures {

struct Scorecard {
    std::string label;
    // world_knowledge, commonsense_reasoning, language_understanding,
    // symbolic_problem_solving, reading_comprehension, programming
    double categories[6];
    double printed_core;
    std::map<std::string, double> headline;  // may be empty
};

inline const std::vector<Scorecard>& scorecards() {
    static const std::vector<Scorecard> cards = {
        {"base-0.5T", {39.29, 30.52, 61.47, 14.10, 29.36, 18.02}, 32.13,
         {{"MMLU", 24.70}, {"GSM8K", 10.16}, {"HumanEval", 18.02}}},
        {"base-1T", {41.77, 38.38, 61.52, 16.28, 37.02, 17.23}, 35.37,
         {{"MMLU", 35.69}, {"GSM8K", 14.71}, {"HumanEval", 17.23}}},
        {"llama2-7b", {50.94, 35.48, 65.02, 22.23, 35.05, 13.55}, 37.05,
         {{"MMLU", 45.51}, {"GSM8K", 14.25}, {"HumanEval", 13.55}}},
        {"openllama-7bv2", {43.79, 34.91, 61.00, 19.09, 23.82, 15.20}, 32.96,
         {{"MMLU", 40.38}, {"GSM8K", 7.05}, {"HumanEval", 15.20}}},
        {"du-20pct", {44.19, 42.59, 60.08, 20.23, 45.45, 23.40}, 39.32,
         {{"MMLU", 42.59}, {"GSM8K", 22.97}, {"HumanEval", 23.40}}},
        {"du-5pct", {43.52, 42.97, 61.05, 18.50, 41.23, 18.50}, 37.63,
         {{"MMLU", 40.20}, {"GSM8K", 16.98}, {"HumanEval", 18.50}}},
        {"du-10pct", {44.72, 42.33, 60.41, 19.55, 43.35, 20.39}, 38.46,
         {{"MMLU", 43.19}, {"GSM8K", 20.47}, {"HumanEval", 20.39}}},
        {"du-30pct", {43.71, 42.19, 60.35, 20.44, 42.50, 24.17}, 38.89,
         {{"MMLU", 41.78}, {"GSM8K", 24.56}, {"HumanEval", 24.17}}},
        {"du-10pct-sans-math", {39.08, 31.76, 59.97, 16.80, 26.48, 21.15}, 32.54,
         {{"MMLU", 29.71}, {"GSM8K", 11.37}, {"HumanEval", 21.15}}},
    };
    return cards;
}

// Reports at the table's printed precision, core included.
inline dumix::GauntletReport to_report(const Scorecard& card) {
    std::map<dumix::Competency, double> scores;
    for (std::size_t i = 0; i < dumix::kNumCompetencies; ++i)
        scores[dumix::kAllCompetencies[i]] = card.categories[i];
    return dumix::make_report(card.label, scores, card.headline, card.printed_core);
}

}  // namespace fixtures
