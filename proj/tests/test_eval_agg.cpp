// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dumix/errors.hpp"
#include "dumix/eval_agg.hpp"
#include "dumix/rng.hpp"
#include "model_scorecards.hpp"

using namespace dumix;

TEST_CASE("rescaling accuracy above chance") {
    // 4-option multiple choice at 30% accuracy: (0.3-0.25)/(1-0.25).
    CHECK(rescale(0.30, 0.25) == doctest::Approx(0.0667).epsilon(1e-2));
    CHECK(rescale(0.30, 0.25) == doctest::Approx(1.0 / 15.0).epsilon(1e-12));
    CHECK(rescale(0.25, 0.25) == doctest::Approx(0.0));
    CHECK(rescale(1.0, 0.25) == doctest::Approx(1.0));
    CHECK(rescale(0.42, 0.0) == 0.42);
}

TEST_CASE("rescale rejects out-of-domain inputs") {
    CHECK_THROWS_AS(rescale(0.5, 1.0), ValidationError);
    CHECK_THROWS_AS(rescale(0.5, 1.5), ValidationError);
    CHECK_THROWS_AS(rescale(-0.1, 0.0), ValidationError);
    CHECK_THROWS_AS(rescale(1.1, 0.0), ValidationError);
}

TEST_CASE("rescale is strictly increasing in accuracy") {
    for (double b : {0.0, 0.1, 0.25, 0.5, 0.9}) {
        double prev = rescale(0.0, b);
        for (double a = 0.05; a <= 1.0; a += 0.05) {
            double r = rescale(a, b);
            CHECK(r > prev);
            prev = r;
        }
    }
}

TEST_CASE("category scores are unweighted means of rescaled tasks") {
    TaskScore mc{"quiz", Competency::kWorldKnowledge, 0.30, 0.25};
    CHECK(category_score({mc}) == doctest::Approx(6.67).epsilon(1e-2));

    TaskScore t1{"a", Competency::kReadingComprehension, 0.2, 0.0};
    TaskScore t2{"b", Competency::kReadingComprehension, 0.4, 0.0};
    CHECK(category_score({t1, t2}) == doctest::Approx(30.0));

    // A zero-baseline pass@1 metric reports as-is.
    TaskScore he{"humaneval", Competency::kProgramming, 0.2340, 0.0};
    CHECK(category_score({he}) == doctest::Approx(23.40));
}

TEST_CASE("category scores reject empty and mixed inputs") {
    CHECK_THROWS_AS(category_score({}), ValidationError);
    TaskScore a{"a", Competency::kProgramming, 0.2, 0.0};
    TaskScore b{"b", Competency::kWorldKnowledge, 0.3, 0.0};
    CHECK_THROWS_AS(category_score({a, b}), ValidationError);
}

TEST_CASE("core average is the mean of exactly six categories") {
    CHECK(core_average({50.94, 35.48, 65.02, 22.23, 35.05, 13.55}) ==
          doctest::Approx(37.045).epsilon(1e-9));
    CHECK(core_average({41.77, 38.38, 61.52, 16.28, 37.02, 17.23}) ==
          doctest::Approx(35.3667).epsilon(1e-4));
    CHECK(core_average({42.0, 42.0, 42.0, 42.0, 42.0, 42.0}) == doctest::Approx(42.0));
    CHECK_THROWS_AS(core_average({1, 2, 3}), ValidationError);
    CHECK_THROWS_AS(core_average({1, 2, 3, 4, 5, 6, 7}), ValidationError);
}

TEST_CASE("core average sits between min and max and ignores order") {
    SplitMix64 rng(99);
    for (int iter = 0; iter < 40; ++iter) {
        std::vector<double> scores;
        for (int i = 0; i < 6; ++i)
            scores.push_back(static_cast<double>(rng.next_below(10000)) / 100.0);
        double core = core_average(scores);
        CHECK(core >= *std::min_element(scores.begin(), scores.end()) - 1e-12);
        CHECK(core <= *std::max_element(scores.begin(), scores.end()) + 1e-12);
        std::vector<double> shuffled = scores;
        deterministic_shuffle(shuffled, rng);
        CHECK(core_average(shuffled) == doctest::Approx(core).epsilon(1e-12));
    }
}

TEST_CASE("recomputed core averages match the recorded scorecards") {
    for (const auto& card : fixtures::scorecards()) {
        std::vector<double> percents(card.categories, card.categories + 6);
        CHECK_MESSAGE(std::abs(core_average(percents) - card.printed_core) <= 0.05, card.label);
    }
}

TEST_CASE("a stated core average far from the category mean is rejected") {
    auto card = fixtures::scorecards()[0];
    std::map<Competency, double> scores;
    for (std::size_t i = 0; i < kNumCompetencies; ++i)
        scores[kAllCompetencies[i]] = card.categories[i];
    CHECK_THROWS_AS(make_report("bogus", scores, {}, card.printed_core + 1.0), ValidationError);
}

TEST_CASE("comparison marks per-metric winners") {
    std::vector<GauntletReport> reports;
    for (const char* label : {"base-1T", "du-20pct", "llama2-7b", "openllama-7bv2"})
        for (const auto& card : fixtures::scorecards())
            if (card.label == label) reports.push_back(fixtures::to_report(card));
    REQUIRE(reports.size() == 4);

    Comparison cmp = compare(reports, 0);
    auto row = [&](const std::string& metric) -> const ComparisonRow& {
        for (const ComparisonRow& r : cmp.rows)
            if (r.metric == metric) return r;
        FAIL("missing metric " << metric);
        return cmp.rows.front();
    };

    // Winners: core average goes to the upsampled model, MMLU to llama2.
    CHECK(row("core_average").best == std::vector<bool>{false, true, false, false});
    CHECK(row("MMLU").best == std::vector<bool>{false, false, true, false});
    CHECK(row("GSM8K").best == std::vector<bool>{false, true, false, false});
    CHECK(row("HumanEval").best == std::vector<bool>{false, true, false, false});
    CHECK(row("world_knowledge").best == std::vector<bool>{false, false, true, false});

    CHECK(row("MMLU").delta[1] == doctest::Approx(6.90).epsilon(1e-9));
    CHECK(row("GSM8K").delta[1] == doctest::Approx(8.26).epsilon(1e-9));
    CHECK(row("HumanEval").delta[1] == doctest::Approx(6.17).epsilon(1e-9));
    CHECK(row("core_average").delta[1] == doctest::Approx(3.95).epsilon(1e-9));
}

TEST_CASE("comparing identical reports yields zero deltas and joint ties") {
    GauntletReport r = fixtures::to_report(fixtures::scorecards()[0]);
    GauntletReport r2 = r;
    r2.label = "copy";
    Comparison cmp = compare({r, r2});
    for (const ComparisonRow& row : cmp.rows) {
        CHECK(row.best == std::vector<bool>{true, true});
        CHECK(row.delta[0] == 0.0);
        CHECK(row.delta[1] == 0.0);
    }
}

TEST_CASE("comparison rejects mismatched metric sets") {
    GauntletReport a = fixtures::to_report(fixtures::scorecards()[0]);
    GauntletReport b = a;
    b.label = "other";
    b.headline.erase("MMLU");
    CHECK_THROWS_AS(compare({a, b}), ValidationError);
    CHECK_THROWS_AS(compare({a}), ValidationError);
}

TEST_CASE("winner marking is invariant under positive affine transforms") {
    std::vector<GauntletReport> reports;
    for (const auto& card : fixtures::scorecards()) reports.push_back(fixtures::to_report(card));
    Comparison before = compare(reports);

    std::vector<GauntletReport> scaled = reports;
    for (GauntletReport& r : scaled)
        for (auto& [metric, v] : r.headline) v = 2.0 * v + 10.0;
    Comparison after = compare(scaled);

    for (std::size_t i = 0; i < before.rows.size(); ++i)
        CHECK(before.rows[i].best == after.rows[i].best);
}

TEST_CASE("reports can be built from raw task scores") {
    std::vector<TaskScore> tasks;
    for (Competency c : kAllCompetencies)
        tasks.push_back({std::string(competency_name(c)) + "-task", c, 0.5, 0.25});
    GauntletReport r = report_from_tasks("from-tasks", tasks);
    for (Competency c : kAllCompetencies)
        CHECK(r.category_scores.at(c) == doctest::Approx(100.0 / 3.0).epsilon(1e-9));
    CHECK(r.core == doctest::Approx(100.0 / 3.0).epsilon(1e-9));

    tasks.pop_back();
    CHECK_THROWS_AS(report_from_tasks("missing", tasks), ValidationError);
}

TEST_CASE("competency names round-trip") {
    for (Competency c : kAllCompetencies)
        CHECK(competency_from_name(competency_name(c)) == c);
    CHECK_THROWS_AS(competency_from_name("sorcery"), ValidationError);
}
