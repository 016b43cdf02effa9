// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dumix {

// The six benchmark competencies, in report order.
enum class Competency {
    kWorldKnowledge,
    kCommonsenseReasoning,
    kLanguageUnderstanding,
    kSymbolicProblemSolving,
    kReadingComprehension,
    kProgramming,
};

inline constexpr std::size_t kNumCompetencies = 6;
inline constexpr std::array<Competency, kNumCompetencies> kAllCompetencies = {
    Competency::kWorldKnowledge,        Competency::kCommonsenseReasoning,
    Competency::kLanguageUnderstanding, Competency::kSymbolicProblemSolving,
    Competency::kReadingComprehension,  Competency::kProgramming,
};

std::string_view competency_name(Competency c);
Competency competency_from_name(std::string_view name);

// One benchmark result: raw accuracy plus the accuracy of chance guessing.
struct TaskScore {
    std::string task;
    Competency category = Competency::kWorldKnowledge;
    double accuracy = 0.0;         // in [0, 1]
    double random_baseline = 0.0;  // in [0, 1)
};

// Rescales accuracy above chance onto [0, 1]: (a - b) / (1 - b). A zero
// baseline leaves the accuracy unchanged.
double rescale(double accuracy, double baseline);

// 100 x unweighted mean of the rescaled scores; all tasks must belong to
// the same competency.
double category_score(const std::vector<TaskScore>& tasks);

// Arithmetic mean of exactly six category percents.
double core_average(const std::vector<double>& category_percents);

// Aggregated scorecard for one model.
struct GauntletReport {
    std::string label;
    std::map<Competency, double> category_scores;  // percent
    double core = 0.0;                             // percent
    std::map<std::string, double> headline;        // raw metrics, e.g. MMLU

    // Ordered (metric name, value) rows: headline metrics first (sorted),
    // then core_average, then the six categories.
    std::vector<std::pair<std::string, double>> flatten() const;
};

// Tolerance between a printed core average and the mean recomputed from
// two-decimal category rows.
inline constexpr double kPrintedCoreTolerance = 0.05;

// Builds a report from category scores. By default the core average is
// the recomputed mean; a printed core at input precision may be supplied
// instead and is checked against the mean within kPrintedCoreTolerance.
GauntletReport make_report(std::string label, const std::map<Competency, double>& category_scores,
                           std::map<std::string, double> headline = {},
                           std::optional<double> printed_core = std::nullopt);

// Builds a report from raw task scores grouped by competency.
GauntletReport report_from_tasks(std::string label, const std::vector<TaskScore>& tasks,
                                 std::map<std::string, double> headline = {});

struct ComparisonRow {
    std::string metric;
    std::vector<double> values;      // one per report
    std::vector<bool> best;          // per-row maxima, ties marked jointly
    std::vector<double> delta;       // value - baseline value, percentage points
};

struct Comparison {
    std::vector<std::string> labels;
    std::size_t baseline_index = 0;
    std::vector<ComparisonRow> rows;
};

// Side-by-side table over reports sharing the same metric set.
Comparison compare(const std::vector<GauntletReport>& reports, std::size_t baseline_index = 0);

}  // namespace dumix
