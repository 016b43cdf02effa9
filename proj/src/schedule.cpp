// SPDX-License-Identifier: Apache-2.0
#include "dumix/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dumix/errors.hpp"

namespace dumix {

using nlohmann::json;

void validate_schedule(const TrainingSchedule& schedule) {
    if (schedule.phases.empty()) throw ValidationError("schedule has no phases");
    if (schedule.total_budget == 0) throw ValidationError("schedule budget must be positive");
    std::uint64_t cursor = 0;
    for (std::size_t i = 0; i < schedule.phases.size(); ++i) {
        const Phase& p = schedule.phases[i];
        if (p.start_token != cursor)
            throw ValidationError("phase " + std::to_string(i) + " starts at " +
                                  std::to_string(p.start_token) + ", expected " +
                                  std::to_string(cursor));
        if (p.end_token <= p.start_token)
            throw ValidationError("phase " + std::to_string(i) + " is empty");
        if (p.plan.budget != p.length())
            throw ValidationError("phase " + std::to_string(i) + " plan budget " +
                                  std::to_string(p.plan.budget) + " != phase length " +
                                  std::to_string(p.length()));
        cursor = p.end_token;
    }
    if (cursor != schedule.total_budget)
        throw ValidationError("phases cover " + std::to_string(cursor) + " tokens, budget is " +
                              std::to_string(schedule.total_budget));
}

TrainingSchedule make_du_schedule(const MixPlan& base, const MixPlan& du,
                                  std::uint64_t total_budget, double du_fraction,
                                  std::uint32_t seq_len) {
    if (total_budget == 0) throw ValidationError("budget must be positive");
    if (seq_len == 0) throw ValidationError("sequence length must be positive");
    if (!(du_fraction >= 0.0) || du_fraction >= 1.0)
        throw ValidationError("du fraction " + std::to_string(du_fraction) +
                              " outside [0, 1)");

    TrainingSchedule schedule;
    schedule.total_budget = total_budget;
    if (du_fraction == 0.0) {
        schedule.phases.push_back(Phase{0, total_budget, rescale_plan(base, total_budget)});
        return schedule;
    }

    long double keep = (1.0L - static_cast<long double>(du_fraction)) *
                       static_cast<long double>(total_budget);
    auto boundary = static_cast<std::uint64_t>(std::llroundl(keep));
    boundary -= boundary % seq_len;
    if (boundary == 0)
        throw ValidationError("du fraction " + std::to_string(du_fraction) +
                              " leaves no base phase at this budget");

    schedule.phases.push_back(Phase{0, boundary, rescale_plan(base, boundary)});
    schedule.phases.push_back(
        Phase{boundary, total_budget, rescale_plan(du, total_budget - boundary)});
    validate_schedule(schedule);
    return schedule;
}

const Phase& phase_at(const TrainingSchedule& schedule, std::uint64_t token_index) {
    if (token_index >= schedule.total_budget)
        throw ValidationError("token index " + std::to_string(token_index) +
                              " outside budget " + std::to_string(schedule.total_budget));
    for (const Phase& p : schedule.phases)
        if (token_index >= p.start_token && token_index < p.end_token) return p;
    throw ValidationError("schedule phases do not cover token index " +
                          std::to_string(token_index));
}

std::map<std::string, std::uint64_t> tokens_per_category(const TrainingSchedule& schedule) {
    std::map<std::string, std::uint64_t> totals;
    for (const Phase& p : schedule.phases)
        for (const auto& [category, tokens] : p.plan.tokens) totals[category] += tokens;
    return totals;
}

std::string schedule_to_string(const TrainingSchedule& schedule) {
    json j;
    j["version"] = 1;
    j["total_budget"] = schedule.total_budget;
    json phases = json::array();
    for (const Phase& p : schedule.phases) {
        json pj;
        pj["start_token"] = p.start_token;
        pj["end_token"] = p.end_token;
        pj["plan"] = json::parse(plan_to_string(p.plan));
        phases.push_back(pj);
    }
    j["phases"] = phases;
    return j.dump(2) + "\n";
}

TrainingSchedule schedule_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("schedule parse error: ") + e.what());
    }
    TrainingSchedule schedule;
    try {
        if (j.at("version").get<int>() != 1)
            throw ConfigError("unsupported schedule version");
        schedule.total_budget = j.at("total_budget").get<std::uint64_t>();
        for (const auto& pj : j.at("phases")) {
            Phase p;
            p.start_token = pj.at("start_token").get<std::uint64_t>();
            p.end_token = pj.at("end_token").get<std::uint64_t>();
            p.plan = plan_from_string(pj.at("plan").dump());
            schedule.phases.push_back(std::move(p));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("schedule parse error: ") + e.what());
    }
    validate_schedule(schedule);
    return schedule;
}

void save_schedule(const TrainingSchedule& schedule, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write schedule '" + path.string() + "'");
    out << schedule_to_string(schedule);
    if (!out) throw IoError("write failed for schedule '" + path.string() + "'");
}

TrainingSchedule load_schedule(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open schedule '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return schedule_from_string(buf.str());
}

}  // namespace dumix
