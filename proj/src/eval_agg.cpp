// SPDX-License-Identifier: Apache-2.0
#include "dumix/eval_agg.hpp"

#include <algorithm>
#include <cmath>

#include "dumix/errors.hpp"

namespace dumix {

std::string_view competency_name(Competency c) {
    switch (c) {
        case Competency::kWorldKnowledge: return "world_knowledge";
        case Competency::kCommonsenseReasoning: return "commonsense_reasoning";
        case Competency::kLanguageUnderstanding: return "language_understanding";
        case Competency::kSymbolicProblemSolving: return "symbolic_problem_solving";
        case Competency::kReadingComprehension: return "reading_comprehension";
        case Competency::kProgramming: return "programming";
    }
    throw ValidationError("invalid competency value");
}

Competency competency_from_name(std::string_view name) {
    for (Competency c : kAllCompetencies)
        if (competency_name(c) == name) return c;
    throw ValidationError("unknown competency '" + std::string(name) + "'");
}

double rescale(double accuracy, double baseline) {
    if (!(accuracy >= 0.0) || accuracy > 1.0)
        throw ValidationError("accuracy " + std::to_string(accuracy) + " outside [0, 1]");
    if (!(baseline >= 0.0) || baseline >= 1.0)
        throw ValidationError("random baseline " + std::to_string(baseline) + " outside [0, 1)");
    if (baseline == 0.0) return accuracy;
    return (accuracy - baseline) / (1.0 - baseline);
}

double category_score(const std::vector<TaskScore>& tasks) {
    if (tasks.empty()) throw ValidationError("category has no tasks");
    Competency category = tasks.front().category;
    double sum = 0.0;
    for (const TaskScore& t : tasks) {
        if (t.category != category)
            throw ValidationError("task '" + t.task + "' belongs to a different competency");
        sum += rescale(t.accuracy, t.random_baseline);
    }
    return 100.0 * sum / static_cast<double>(tasks.size());
}

double core_average(const std::vector<double>& category_percents) {
    if (category_percents.size() != kNumCompetencies)
        throw ValidationError("core average needs exactly " + std::to_string(kNumCompetencies) +
                              " category scores, got " + std::to_string(category_percents.size()));
    double sum = 0.0;
    for (double p : category_percents) sum += p;
    return sum / static_cast<double>(kNumCompetencies);
}

GauntletReport make_report(std::string label, const std::map<Competency, double>& category_scores,
                           std::map<std::string, double> headline,
                           std::optional<double> printed_core) {
    if (category_scores.size() != kNumCompetencies)
        throw ValidationError("report '" + label + "' needs all " +
                              std::to_string(kNumCompetencies) + " category scores");
    GauntletReport report;
    report.label = std::move(label);
    report.category_scores = category_scores;
    report.headline = std::move(headline);
    std::vector<double> percents;
    for (Competency c : kAllCompetencies) percents.push_back(category_scores.at(c));
    report.core = core_average(percents);
    if (printed_core) {
        if (std::abs(*printed_core - report.core) > kPrintedCoreTolerance)
            throw ValidationError("report '" + report.label + "': stated core average " +
                                  std::to_string(*printed_core) +
                                  " disagrees with the category mean " +
                                  std::to_string(report.core));
        report.core = *printed_core;
    }
    return report;
}

GauntletReport report_from_tasks(std::string label, const std::vector<TaskScore>& tasks,
                                 std::map<std::string, double> headline) {
    std::map<Competency, std::vector<TaskScore>> by_category;
    for (const TaskScore& t : tasks) by_category[t.category].push_back(t);
    std::map<Competency, double> scores;
    for (Competency c : kAllCompetencies) {
        auto it = by_category.find(c);
        if (it == by_category.end())
            throw ValidationError("report '" + label + "' has no tasks for competency '" +
                                  std::string(competency_name(c)) + "'");
        scores[c] = category_score(it->second);
    }
    return make_report(std::move(label), scores, std::move(headline));
}

std::vector<std::pair<std::string, double>> GauntletReport::flatten() const {
    std::vector<std::pair<std::string, double>> rows;
    for (const auto& [metric, value] : headline) rows.emplace_back(metric, value);
    rows.emplace_back("core_average", core);
    for (Competency c : kAllCompetencies)
        rows.emplace_back(std::string(competency_name(c)), category_scores.at(c));
    return rows;
}

Comparison compare(const std::vector<GauntletReport>& reports, std::size_t baseline_index) {
    if (reports.size() < 2) throw ValidationError("compare needs at least two reports");
    if (baseline_index >= reports.size())
        throw ValidationError("baseline index out of range");

    std::vector<std::vector<std::pair<std::string, double>>> flats;
    for (const GauntletReport& r : reports) flats.push_back(r.flatten());
    for (std::size_t i = 1; i < flats.size(); ++i) {
        if (flats[i].size() != flats[0].size())
            throw ValidationError("reports '" + reports[0].label + "' and '" + reports[i].label +
                                  "' carry different metric sets");
        for (std::size_t k = 0; k < flats[i].size(); ++k)
            if (flats[i][k].first != flats[0][k].first)
                throw ValidationError("reports '" + reports[0].label + "' and '" +
                                      reports[i].label + "' carry different metric sets");
    }

    Comparison cmp;
    cmp.baseline_index = baseline_index;
    for (const GauntletReport& r : reports) cmp.labels.push_back(r.label);
    for (std::size_t k = 0; k < flats[0].size(); ++k) {
        ComparisonRow row;
        row.metric = flats[0][k].first;
        double max_value = flats[0][k].second;
        for (const auto& flat : flats) {
            row.values.push_back(flat[k].second);
            max_value = std::max(max_value, flat[k].second);
        }
        double baseline_value = row.values[baseline_index];
        for (double v : row.values) {
            // Ties are marked jointly; equality at input precision.
            row.best.push_back(std::abs(v - max_value) <= 1e-12);
            row.delta.push_back(v - baseline_value);
        }
        cmp.rows.push_back(std::move(row));
    }
    return cmp;
}

}  // namespace dumix
