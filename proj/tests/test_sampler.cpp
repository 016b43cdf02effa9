// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "dumix/errors.hpp"
#include "dumix/rng.hpp"
#include "dumix/sampler.hpp"
#include "test_corpus.hpp"

using namespace dumix;
using testutil::fresh_dir;
using testutil::iota_source;

namespace {

// Independent step-by-step oracle of the selection rule, kept deliberately
// naive: add weights to credits, then hand the pick to the highest
// weight/(count+1) priority among sources still inside their upper quota,
// first index on ties.
std::vector<std::size_t> oracle_selections(const std::vector<double>& weights,
                                           std::size_t steps) {
    std::vector<double> credit(weights.size(), 0.0);
    std::vector<std::uint64_t> counts(weights.size(), 0);
    std::vector<std::size_t> picks;
    picks.reserve(steps);
    for (std::size_t n = 1; n <= steps; ++n) {
        std::size_t best = weights.size();
        double best_priority = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] <= 0.0) continue;
            credit[i] += weights[i];
            if (static_cast<double>(counts[i] + 1) >
                std::ceil(static_cast<double>(n) * weights[i]))
                continue;
            double priority = weights[i] / static_cast<double>(counts[i] + 1);
            if (best == weights.size() || priority > best_priority) {
                best = i;
                best_priority = priority;
            }
        }
        REQUIRE(best != weights.size());
        credit[best] -= 1.0;
        ++counts[best];
        picks.push_back(best);
    }
    return picks;
}

MixPlan plan_for(const Catalog& catalog, const std::map<std::string, double>& proportions,
                 std::uint64_t budget) {
    return explicit_plan(catalog, proportions, budget);
}

}  // namespace

TEST_CASE("selection rule picks A,B,A,C,A for weights 0.5/0.3/0.2") {
    // Hand-run: priorities w/(count+1) under the upper-quota clamp.
    //   n=1: all eligible, priorities .5/.3/.2            -> A
    //   n=2: A capped (2 > ceil(1.0)), B wins .3 over .2  -> B
    //   n=3: B capped, A .25 over C .2                    -> A
    //   n=4: A capped, C .2 over B .15                    -> C
    //   n=5: C capped, A .1667 over B .15                 -> A
    CreditScheduler s({0.5, 0.3, 0.2});
    std::vector<std::size_t> picks;
    for (int i = 0; i < 5; ++i) picks.push_back(s.next());
    CHECK(picks == std::vector<std::size_t>{0, 1, 0, 2, 0});

    // Counts stay within one selection of n*w throughout, per the quota
    // bands; the credits record the deficiencies and sum to zero.
    double total = 0.0;
    for (double c : s.credits()) total += c;
    CHECK(total == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("a lone positive weight is always picked") {
    CreditScheduler s({0.0, 1.0, 0.0});
    for (int i = 0; i < 100; ++i) CHECK(s.next() == 1);
}

TEST_CASE("credit scheduler matches the oracle and keeps the discrepancy bound") {
    SplitMix64 rng(2468);
    for (int config = 0; config < 8; ++config) {
        std::size_t k = 2 + rng.next_below(7);
        std::vector<double> raw(k);
        for (double& w : raw) w = 1.0 + static_cast<double>(rng.next_below(1000));

        const std::size_t steps = 20000;
        CreditScheduler s(raw);
        std::vector<double> weights(s.weights().begin(), s.weights().end());
        auto expected = oracle_selections(weights, steps);
        std::vector<std::uint64_t> counts(k, 0);
        double worst = 0.0;
        for (std::size_t n = 0; n < steps; ++n) {
            std::size_t pick = s.next();
            REQUIRE(pick == expected[n]);
            ++counts[pick];
            for (std::size_t i = 0; i < k; ++i) {
                double expect = static_cast<double>(n + 1) * weights[i];
                worst = std::max(worst, std::abs(static_cast<double>(counts[i]) - expect));
            }
        }
        CHECK(worst <= 1.0);

        double credit_sum = 0.0;
        for (double c : s.credits()) credit_sum += c;
        CHECK(std::abs(credit_sum) < 1e-9);
    }
}

TEST_CASE("degenerate weight vectors are rejected") {
    CHECK_THROWS_AS(CreditScheduler({0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(CreditScheduler({0.5, -0.5}), ValidationError);
}

TEST_CASE("sampler streams deterministically and respects plans") {
    auto dir = fresh_dir("dumix-test-sampler");
    Catalog catalog = testutil::four_band_catalog(dir, 40000, 5);
    const std::uint32_t seq_len = 32;
    const std::uint64_t budget = 4000 * seq_len;

    MixPlan base = plan_for(catalog,
                            {{"large_scale_cc", 0.40},
                             {"small_scale_cc", 0.30},
                             {"domain_specific", 0.10},
                             {"code", 0.20}},
                            budget);
    MixPlan du = plan_for(catalog,
                          {{"large_scale_cc", 0.0},
                           {"small_scale_cc", 0.30},
                           {"domain_specific", 0.35},
                           {"code", 0.35}},
                          budget);
    TrainingSchedule schedule = make_du_schedule(base, du, budget, 0.2, seq_len);

    SUBCASE("equal arguments give equal initial states") {
        Sampler a(schedule, catalog, 11, seq_len);
        Sampler b(schedule, catalog, 11, seq_len);
        CHECK(a.state() == b.state());
    }

    SUBCASE("two full runs emit identical records") {
        Sampler a(schedule, catalog, 11, seq_len);
        Sampler b(schedule, catalog, 11, seq_len);
        SequenceRecord ra, rb;
        while (!a.done()) {
            a.next(ra);
            b.next(rb);
            REQUIRE(ra.source == rb.source);
            REQUIRE(ra.tokens == rb.tokens);
        }
        CHECK(b.done());
    }

    SUBCASE("tokens come from the selected source's band") {
        std::map<std::string, std::pair<std::uint32_t, std::uint32_t>> bands = {
            {"web-large", {0, 1000}},
            {"web-small", {1000, 2000}},
            {"reference", {2000, 3000}},
            {"repos", {3000, 4000}}};
        Sampler s(schedule, catalog, 11, seq_len);
        SequenceRecord rec;
        for (int i = 0; i < 500; ++i) {
            s.next(rec);
            auto [lo, hi] = bands.at(rec.source);
            for (std::uint32_t t : rec.tokens) {
                REQUIRE(t >= lo);
                REQUIRE(t < hi);
            }
        }
    }

    SUBCASE("no zero-weight source appears after the phase switch") {
        Sampler s(schedule, catalog, 11, seq_len);
        SequenceRecord rec;
        std::uint64_t boundary_seq = schedule.phases[0].length() / seq_len;
        while (!s.done()) {
            s.next(rec);
            if (rec.global_index >= boundary_seq) REQUIRE(rec.source != "web-large");
        }
    }

    SUBCASE("realized mix approaches plan proportions in each phase") {
        Sampler s(schedule, catalog, 11, seq_len);
        std::vector<SequenceRecord> records;
        while (!s.done()) records.push_back(s.next());

        std::uint64_t boundary_seq = schedule.phases[0].length() / seq_len;
        auto base_mix = realized_mix(records, 0, boundary_seq, catalog);
        for (const auto& [category, p] : schedule.phases[0].plan.proportions)
            if (p > 0.0)
                CHECK(std::abs(base_mix.at(category) - p) <
                      1.5 / static_cast<double>(boundary_seq) + 1e-9);

        auto du_mix = realized_mix(records, boundary_seq, records.size(), catalog);
        CHECK(du_mix.count("large_scale_cc") == 0);
        for (const auto& [category, p] : schedule.phases[1].plan.proportions)
            if (p > 0.0) CHECK(std::abs(du_mix.at(category) - p) < 0.005);

        CHECK_THROWS_AS(realized_mix(records, 5, 5, catalog), ValidationError);
        auto single = realized_mix(records, 0, 1, catalog);
        double total = 0.0;
        for (const auto& [category, f] : single) total += f;
        CHECK(total == doctest::Approx(1.0));
    }

    SUBCASE("epoch accounting matches phase targets within one sequence per phase") {
        Sampler s(schedule, catalog, 11, seq_len);
        while (!s.done()) s.next();
        for (const DataSource& src : catalog.sources) {
            double target = 0.0;
            for (const Phase& phase : schedule.phases) {
                auto it = phase.plan.source_weights.find(src.name);
                if (it != phase.plan.source_weights.end())
                    target += it->second * static_cast<double>(phase.length());
            }
            double consumed = static_cast<double>(s.consumed_tokens(src.name));
            CHECK(std::abs(consumed - target) <=
                  static_cast<double>(seq_len) * schedule.phases.size());
        }
    }

    SUBCASE("save/restore resumes the exact stream, including across the boundary") {
        std::uint64_t boundary_seq = schedule.phases[0].length() / seq_len;
        for (std::uint64_t stop : {std::uint64_t(1), std::uint64_t(137), boundary_seq,
                                   boundary_seq + 1, std::uint64_t(3999)}) {
            Sampler reference(schedule, catalog, 11, seq_len);
            SequenceRecord expect;
            for (std::uint64_t i = 0; i < stop; ++i) reference.next(expect);

            Sampler replay(schedule, catalog, 11, seq_len);
            SequenceRecord rec;
            for (std::uint64_t i = 0; i < stop; ++i) replay.next(rec);

            std::vector<std::uint8_t> image = save_state(replay.state());
            SamplerState restored = restore_state(image);
            CHECK(restored == replay.state());

            Sampler resumed(schedule, catalog, restored);
            for (int i = 0; i < 50 && !reference.done(); ++i) {
                reference.next(expect);
                resumed.next(rec);
                REQUIRE(rec.source == expect.source);
                REQUIRE(rec.global_index == expect.global_index);
                REQUIRE(rec.tokens == expect.tokens);
            }
        }
    }

    SUBCASE("state images catch truncation, corruption and version skew") {
        Sampler s(schedule, catalog, 11, seq_len);
        for (int i = 0; i < 10; ++i) s.next();
        std::vector<std::uint8_t> image = save_state(s.state());

        std::vector<std::uint8_t> truncated(image.begin(), image.end() - 9);
        CHECK_THROWS_AS(restore_state(truncated), IntegrityError);

        std::vector<std::uint8_t> flipped = image;
        flipped[20] ^= 0xFF;
        CHECK_THROWS_AS(restore_state(flipped), IntegrityError);

        std::vector<std::uint8_t> not_an_image = {1, 2, 3};
        CHECK_THROWS_AS(restore_state(not_an_image), IntegrityError);

        // A future-version image with a valid checksum is a version
        // mismatch, not corruption.
        std::vector<std::uint8_t> future = image;
        future[4] = 2;
        std::uint32_t crc = crc32(future.data(), future.size() - 4);
        for (int i = 0; i < 4; ++i)
            future[future.size() - 4 + i] = static_cast<std::uint8_t>(crc >> (8 * i));
        CHECK_THROWS_AS(restore_state(future), ConfigError);
    }

    SUBCASE("credits sum to zero at every step") {
        Sampler s(schedule, catalog, 11, seq_len);
        for (int i = 0; i < 2000 && !s.done(); ++i) {
            s.next();
            SamplerState st = s.state();
            double sum = 0.0;
            for (const auto& [name, cur] : st.sources) sum += cur.credit;
            REQUIRE(std::abs(sum) < 1e-9);
        }
    }

    SUBCASE("next on an exhausted schedule throws") {
        Sampler s(schedule, catalog, 11, seq_len);
        while (!s.done()) s.next();
        CHECK(s.sequences_emitted() == s.total_sequences());
        CHECK_THROWS_AS(s.next(), EndOfScheduleError);
    }

    SUBCASE("resume_check passes honestly and fails under perturbation") {
        auto points = pick_interruption_points(schedule, seq_len, 6, 99);
        REQUIRE(points.size() == 6);
        std::uint64_t boundary_seq = schedule.phases[0].length() / seq_len;
        CHECK(std::count(points.begin(), points.end(), boundary_seq) == 1);

        ResumeReport ok = resume_check(schedule, catalog, 11, seq_len, points);
        CHECK(ok.pass);
        CHECK(ok.first_divergence == -1);
        CHECK(ok.sequences == 4000);

        ResumeReport bad = resume_check(schedule, catalog, 11, seq_len, points, 2);
        CHECK_FALSE(bad.pass);
        CHECK(bad.first_divergence >= static_cast<std::int64_t>(points[2]));
    }
}

TEST_CASE("per-epoch consumption is a permutation, with tails carried over") {
    auto dir = fresh_dir("dumix-test-perm");
    const std::uint32_t seq_len = 16;
    const std::uint64_t size = 16 * 13 + 7;  // deliberately not sequence-aligned
    Catalog catalog;
    catalog.base_dir = dir;
    // 100-token shards misaligned with the 16-token blocks, so single
    // block reads straddle shard boundaries.
    catalog.sources = {iota_source("solo", "only", size, 0, dir, 100)};
    REQUIRE(catalog.sources[0].shards.size() == 3);

    MixPlan plan = explicit_plan(catalog, {{"only", 1.0}}, 3 * size + seq_len);
    TrainingSchedule schedule;
    schedule.total_budget = plan.budget;
    schedule.phases = {Phase{0, plan.budget, plan}};

    Sampler s(schedule, catalog, 321, seq_len);
    std::vector<std::uint32_t> stream;
    while (!s.done()) {
        SequenceRecord rec = s.next();
        CHECK(rec.tokens.size() == seq_len);
        stream.insert(stream.end(), rec.tokens.begin(), rec.tokens.end());
    }

    // Every full window of `size` tokens covers each position exactly once.
    std::size_t epochs = stream.size() / size;
    REQUIRE(epochs >= 3);
    for (std::size_t e = 0; e < epochs; ++e) {
        std::set<std::uint32_t> seen(stream.begin() + e * size, stream.begin() + (e + 1) * size);
        CHECK(seen.size() == size);
        CHECK(*seen.begin() == 0);
        CHECK(*seen.rbegin() == size - 1);
    }

    // Different epochs get different shuffles.
    std::vector<std::uint32_t> first(stream.begin(), stream.begin() + size);
    std::vector<std::uint32_t> second(stream.begin() + size, stream.begin() + 2 * size);
    CHECK(first != second);
}

TEST_CASE("undersized and shardless sources are rejected up front") {
    auto dir = fresh_dir("dumix-test-undersized");
    Catalog catalog;
    catalog.base_dir = dir;
    catalog.sources = {iota_source("tiny", "only", 8, 0, dir)};
    MixPlan plan = explicit_plan(catalog, {{"only", 1.0}}, 64);
    TrainingSchedule schedule;
    schedule.total_budget = 64;
    schedule.phases = {Phase{0, 64, plan}};
    CHECK_THROWS_WITH_AS(Sampler(schedule, catalog, 1, 16), doctest::Contains("tiny"),
                         ValidationError);

    Catalog shardless = catalog;
    shardless.sources[0].shards.clear();
    shardless.sources[0].token_count = 64;
    MixPlan plan2 = explicit_plan(shardless, {{"only", 1.0}}, 64);
    TrainingSchedule schedule2;
    schedule2.total_budget = 64;
    schedule2.phases = {Phase{0, 64, plan2}};
    CHECK_THROWS_WITH_AS(Sampler(schedule2, shardless, 1, 16), doctest::Contains("shard"),
                         ValidationError);
}

TEST_CASE("sequences never straddle the phase boundary") {
    auto dir = fresh_dir("dumix-test-straddle");
    Catalog catalog = testutil::four_band_catalog(dir, 5000, 17);
    const std::uint32_t seq_len = 64;
    MixPlan base = plan_for(catalog,
                            {{"large_scale_cc", 0.25},
                             {"small_scale_cc", 0.25},
                             {"domain_specific", 0.25},
                             {"code", 0.25}},
                            10000);
    MixPlan du = base;
    TrainingSchedule schedule = make_du_schedule(base, du, 10000, 0.33, seq_len);
    CHECK(schedule.phases[0].end_token % seq_len == 0);

    Sampler s(schedule, catalog, 3, seq_len);
    std::vector<SequenceRecord> records;
    while (!s.done()) records.push_back(s.next());
    // 10000 tokens at seq_len 64: the 6700/3300 nominal split snaps to
    // 6656, leaving 3344 for the second phase; 16 more tokens than two
    // full sequences span.
    CHECK(records.size() == s.total_sequences());
    CHECK(records.size() == 6656 / 64 + 3344 / 64);

    // Uniform plan: every category converges to an even split.
    auto mix = realized_mix(records, 0, records.size(), catalog);
    for (const auto& [category, fraction] : mix)
        CHECK(std::abs(fraction - 0.25) < 2.0 / static_cast<double>(records.size()));
}

TEST_CASE("misaligned interior phase boundaries are rejected") {
    auto dir = fresh_dir("dumix-test-misaligned");
    Catalog catalog = testutil::four_band_catalog(dir, 2000, 23);
    MixPlan plan = explicit_plan(catalog,
                                 {{"large_scale_cc", 0.25},
                                  {"small_scale_cc", 0.25},
                                  {"domain_specific", 0.25},
                                  {"code", 0.25}},
                                 1000);
    TrainingSchedule schedule;
    schedule.total_budget = 2000;
    schedule.phases = {Phase{0, 1000, plan}, Phase{1000, 2000, plan}};
    // 1000 is not a multiple of 64, so sequences would straddle the switch.
    CHECK_THROWS_AS(Sampler(schedule, catalog, 1, 64), ValidationError);
}
