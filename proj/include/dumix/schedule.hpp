// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dumix/mix_plan.hpp"

namespace dumix {

// Default sequence length; mixing operates at whole-sequence granularity.
inline constexpr std::uint32_t kDefaultSeqLen = 4096;

// One constant-mix span of training, [start_token, end_token).
struct Phase {
    std::uint64_t start_token = 0;
    std::uint64_t end_token = 0;
    MixPlan plan;  // plan.budget == end_token - start_token

    std::uint64_t length() const { return end_token - start_token; }

    friend bool operator==(const Phase&, const Phase&) = default;
};

// A piecewise-constant mix over a token budget. Phases are contiguous,
// non-overlapping, and cover [0, total_budget) exactly.
struct TrainingSchedule {
    std::vector<Phase> phases;
    std::uint64_t total_budget = 0;

    friend bool operator==(const TrainingSchedule&, const TrainingSchedule&) = default;
};

void validate_schedule(const TrainingSchedule& schedule);

// Two-phase end-of-training switch: `base` over [0, (1-f)*B), `du` over
// the rest. The boundary is (1-f)*B rounded to the nearest token, then
// snapped down to a multiple of seq_len so no sequence straddles phases.
// f = 0 yields a single-phase schedule.
TrainingSchedule make_du_schedule(const MixPlan& base, const MixPlan& du,
                                  std::uint64_t total_budget, double du_fraction,
                                  std::uint32_t seq_len = kDefaultSeqLen);

// The unique phase containing token_index.
const Phase& phase_at(const TrainingSchedule& schedule, std::uint64_t token_index);

// Per-category token totals summed across phases.
std::map<std::string, std::uint64_t> tokens_per_category(const TrainingSchedule& schedule);

std::string schedule_to_string(const TrainingSchedule& schedule);
TrainingSchedule schedule_from_string(const std::string& text);
void save_schedule(const TrainingSchedule& schedule, const std::filesystem::path& path);
TrainingSchedule load_schedule(const std::filesystem::path& path);

}  // namespace dumix
