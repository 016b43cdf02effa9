// SPDX-License-Identifier: Apache-2.0
//
// dumix: deterministic data-mixing engine. Subcommands cover the full
// workflow: plan -> schedule -> stream/stats -> ablate, plus synthetic
// corpus generation, resume verification, score aggregation and scaling
// fits. Identical invocations produce identical outputs; nothing here
// reads the clock or unsorted directory listings.
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dumix/ablation.hpp"
#include "dumix/catalog.hpp"
#include "dumix/errors.hpp"
#include "dumix/eval_agg.hpp"
#include "dumix/mix_plan.hpp"
#include "dumix/sampler.hpp"
#include "dumix/scaling.hpp"
#include "dumix/schedule.hpp"
#include "dumix/shard_io.hpp"
#include "dumix/units.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dumix;

namespace {

// Default seed when --seed is omitted; documented in the README.
constexpr std::uint64_t kDefaultSeed = 1729;

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : text) {
        if (c == sep) {
            parts.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    parts.push_back(current);
    return parts;
}

std::map<std::string, double> parse_kv_doubles(const std::string& text, const char* what) {
    std::map<std::string, double> out;
    if (text.empty()) return out;
    for (const std::string& part : split(text, ',')) {
        auto eq = part.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError(std::string(what) + ": expected key=value, got '" + part + "'");
        try {
            out[part.substr(0, eq)] = std::stod(part.substr(eq + 1));
        } catch (const std::exception&) {
            throw ConfigError(std::string(what) + ": bad number in '" + part + "'");
        }
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> out;
    if (text.empty()) return out;
    for (const std::string& part : split(text, ',')) {
        try {
            out.push_back(std::stod(part));
        } catch (const std::exception&) {
            throw ConfigError(std::string(what) + ": bad number '" + part + "'");
        }
    }
    return out;
}

std::string fixed(double v, int places) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(places) << v;
    return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

json plan_report(const MixPlan& plan) {
    json j;
    j["budget"] = plan.budget;
    j["proportions"] = plan.proportions;
    j["tokens"] = plan.tokens;
    j["epochs"] = plan.epochs;
    j["source_weights"] = plan.source_weights;
    if (!plan.filler_category.empty()) j["filler_category"] = plan.filler_category;
    return j;
}

void print_plan_table(const MixPlan& plan, std::ostream& out) {
    out << std::left << std::setw(24) << "category" << std::right << std::setw(12) << "percentage"
        << std::setw(12) << "tokens" << std::setw(10) << "epochs" << "\n";
    for (const auto& [category, tokens] : plan.tokens) {
        out << std::left << std::setw(24) << category << std::right << std::setw(11)
            << fixed(plan.proportions.at(category) * 100.0, 2) << "%" << std::setw(12)
            << format_token_count(tokens);
        auto it = plan.epochs.find(category);
        out << std::setw(10) << (it == plan.epochs.end() ? "-" : fixed(it->second, 3));
        if (category == plan.filler_category) out << "  (filler)";
        out << "\n";
    }
    out << std::left << std::setw(24) << "total" << std::right << std::setw(11) << "100.00"
        << "%" << std::setw(12) << format_token_count(plan.budget) << "\n";
}

void print_schedule_table(const TrainingSchedule& schedule, std::ostream& out) {
    for (std::size_t i = 0; i < schedule.phases.size(); ++i) {
        const Phase& p = schedule.phases[i];
        out << "phase " << i << "  [" << p.start_token << ", " << p.end_token << ")  "
            << format_token_count(p.length()) << " tokens\n";
        print_plan_table(p.plan, out);
        out << "\n";
    }
    out << "cross-phase totals\n";
    for (const auto& [category, tokens] : tokens_per_category(schedule))
        out << "  " << std::left << std::setw(24) << category << std::right << std::setw(12)
            << format_token_count(tokens) << "\n";
}

struct CommonOpts {
    std::uint64_t seed = kDefaultSeed;
    std::string output;
    bool machine = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--seed", opts.seed, "seed for every random decision (default 1729)");
    cmd->add_option("--output,-o", opts.output, "output file or directory");
    cmd->add_flag("--json", opts.machine, "emit a machine-readable JSON report on stdout");
    cmd->configurable();
}

// ---------------------------------------------------------------- plan --

struct PlanOpts {
    CommonOpts common;
    std::string catalog_path;
    std::string budget;
    std::string epochs;
    std::string filler;
    std::string proportions;
};

int run_plan(const PlanOpts& opt) {
    Catalog catalog = load_catalog(opt.catalog_path);
    std::uint64_t budget = parse_token_count(opt.budget);

    MixPlan plan;
    if (!opt.proportions.empty()) {
        if (!opt.epochs.empty() || !opt.filler.empty())
            throw ConfigError("--proportions excludes --epochs/--filler");
        plan = explicit_plan(catalog, parse_kv_doubles(opt.proportions, "--proportions"), budget);
    } else {
        if (opt.filler.empty()) throw ConfigError("--filler is required with --epochs");
        EpochHeuristic heuristic;
        heuristic.epochs_by_category = parse_kv_doubles(opt.epochs, "--epochs");
        heuristic.filler_category = opt.filler;
        plan = plan_from_epochs(catalog, budget, heuristic);
    }

    if (!opt.common.output.empty()) save_plan(plan, opt.common.output);
    if (opt.common.machine)
        std::cout << plan_report(plan).dump(2) << "\n";
    else
        print_plan_table(plan, std::cout);
    return 0;
}

// ------------------------------------------------------------ schedule --

struct ScheduleOpts {
    CommonOpts common;
    std::string catalog_path;
    std::string base_plan;
    std::string du_plan;
    std::string budget;
    double du_fraction = 0.2;
    std::uint32_t seq_len = kDefaultSeqLen;
};

int run_schedule(const ScheduleOpts& opt) {
    MixPlan base = load_plan(opt.base_plan);
    MixPlan du = opt.du_plan.empty() ? base : load_plan(opt.du_plan);
    std::uint64_t budget = opt.budget.empty() ? base.budget : parse_token_count(opt.budget);

    TrainingSchedule schedule = make_du_schedule(base, du, budget, opt.du_fraction, opt.seq_len);
    if (!opt.common.output.empty()) save_schedule(schedule, opt.common.output);

    if (opt.common.machine) {
        json j = json::parse(schedule_to_string(schedule));
        j["tokens_per_category"] = tokens_per_category(schedule);
        std::cout << j.dump(2) << "\n";
    } else {
        print_schedule_table(schedule, std::cout);
    }
    return 0;
}

// --------------------------------------------------------------- synth --

struct SynthOpts {
    CommonOpts common;
    std::vector<std::string> sources;
    bool demo = false;
    std::uint64_t shard_tokens = 1u << 22;
};

SynthSpec parse_synth_source(const std::string& text, std::uint64_t default_seed) {
    SynthSpec spec;
    spec.seed = default_seed;
    for (const std::string& part : split(text, ',')) {
        auto eq = part.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--source: expected key=value, got '" + part + "'");
        std::string key = part.substr(0, eq);
        std::string value = part.substr(eq + 1);
        if (key == "name") {
            spec.name = value;
        } else if (key == "category") {
            spec.category = value;
        } else if (key == "tokens") {
            spec.size = parse_token_count(value);
        } else if (key == "band") {
            auto parts = split(value, ':');
            if (parts.size() != 2) throw ConfigError("--source: band must be lo:hi");
            spec.band_lo = static_cast<std::uint32_t>(std::stoul(parts[0]));
            spec.band_hi = static_cast<std::uint32_t>(std::stoul(parts[1]));
        } else if (key == "tags") {
            for (const std::string& tag : split(value, '|'))
                if (!tag.empty()) spec.tags.push_back(tag);
        } else if (key == "seed") {
            spec.seed = std::stoull(value);
        } else {
            throw ConfigError("--source: unknown key '" + key + "'");
        }
    }
    if (spec.name.empty() || spec.category.empty() || spec.size == 0)
        throw ConfigError("--source needs at least name=, category= and tokens=");
    return spec;
}

std::vector<SynthSpec> demo_specs(std::uint64_t seed) {
    return {
        {"web-large", "large_scale_cc", 4000000, 0, 50000, seed, {}},
        {"web-small", "small_scale_cc", 2000000, 50000, 100000, seed, {}},
        {"reference", "domain_specific", 600000, 100000, 150000, seed, {}},
        {"math-text", "domain_specific", 400000, 150000, 200000, seed, {"math"}},
        {"repos", "code", 1500000, 200000, 250000, seed, {}},
    };
}

int run_synth(const SynthOpts& opt) {
    if (opt.common.output.empty()) throw ConfigError("synth needs --output <dir>");
    fs::path dir(opt.common.output);
    fs::create_directories(dir);

    std::vector<SynthSpec> specs;
    if (opt.demo) {
        specs = demo_specs(opt.common.seed);
    }
    for (const std::string& text : opt.sources)
        specs.push_back(parse_synth_source(text, opt.common.seed));
    if (specs.empty()) throw ConfigError("synth needs --demo or at least one --source");

    Catalog catalog;
    catalog.base_dir = dir;
    for (const SynthSpec& spec : specs)
        catalog.sources.push_back(synth_corpus(spec, dir, opt.shard_tokens));
    validate_catalog(catalog);
    save_catalog(catalog, dir / "catalog.json");

    if (opt.common.machine) {
        std::cout << catalog_to_string(catalog);
    } else {
        std::cout << "wrote " << catalog.sources.size() << " sources to " << dir.string()
                  << "\n";
        for (const DataSource& s : catalog.sources)
            std::cout << "  " << std::left << std::setw(16) << s.name << std::setw(22)
                      << s.category << std::right << std::setw(10)
                      << format_token_count(s.token_count) << "  shards: " << s.shards.size()
                      << "\n";
    }
    return 0;
}

// ------------------------------------------------------- stream / stats --

struct StreamOpts {
    CommonOpts common;
    std::string catalog_path;
    std::string schedule_path;
    std::uint32_t seq_len = kDefaultSeqLen;
    std::uint64_t shard_tokens = 1u << 22;
    std::uint64_t stats_every = 0;
    std::uint64_t limit = 0;
    bool no_verify = false;
    bool stats_only = false;
};

int run_stream(const StreamOpts& opt) {
    Catalog catalog = load_catalog(opt.catalog_path);
    TrainingSchedule schedule = load_schedule(opt.schedule_path);
    fs::path out_dir;
    if (!opt.stats_only) {
        if (opt.common.output.empty()) throw ConfigError("stream needs --output <dir>");
        out_dir = opt.common.output;
        fs::create_directories(out_dir);
    }

    SamplerOptions sampler_opts;
    sampler_opts.verify_shards = !opt.no_verify;
    Sampler sampler(schedule, catalog, opt.common.seed, opt.seq_len, sampler_opts);

    json windows = json::array();
    std::map<std::string, std::uint64_t> window_counts;
    std::uint64_t window_begin = 0;
    std::uint32_t window_phase = 0;
    auto flush_window = [&](std::uint64_t end) {
        if (end == window_begin) return;
        std::uint64_t total = 0;
        for (const auto& [category, n] : window_counts) total += n;
        json mix;
        for (const auto& [category, n] : window_counts)
            mix[category] = static_cast<double>(n) / static_cast<double>(total);
        windows.push_back({{"begin", window_begin},
                           {"end", end},
                           {"phase", window_phase},
                           {"sequences", total},
                           {"mix", mix}});
        window_counts.clear();
        window_begin = end;
    };

    std::map<std::string, std::string> category_of;
    for (const DataSource& s : catalog.sources) category_of[s.name] = s.category;

    json shards = json::array();
    std::unique_ptr<ShardWriter> writer;
    std::uint64_t shard_index = 0;
    std::uint64_t tokens_in_shard = 0;
    auto rotate_shard = [&]() {
        if (writer) {
            ShardRef ref = writer->finish();
            shards.push_back({{"path", fs::path(ref.path).filename().string()},
                              {"tokens", ref.tokens},
                              {"crc32", ref.checksum}});
            writer.reset();
        }
    };

    SequenceRecord rec;
    std::uint64_t emitted = 0;
    while (!sampler.done() && (opt.limit == 0 || emitted < opt.limit)) {
        std::uint32_t phase_before = sampler.state().phase_index;
        sampler.next(rec);
        std::uint32_t phase_now = sampler.state().phase_index;
        if (phase_now != phase_before && !window_counts.empty()) {
            flush_window(rec.global_index);
            window_phase = phase_now;
        }
        window_phase = phase_now;
        ++window_counts[category_of.at(rec.source)];
        ++emitted;
        if (opt.stats_every > 0 && emitted % opt.stats_every == 0) flush_window(emitted);

        if (!opt.stats_only) {
            if (!writer) {
                std::ostringstream name;
                name << "stream-" << std::setfill('0') << std::setw(6) << shard_index++
                     << ".dutk";
                writer = std::make_unique<ShardWriter>(out_dir / name.str());
                tokens_in_shard = 0;
            }
            writer->append(rec.tokens);
            tokens_in_shard += rec.tokens.size();
            if (tokens_in_shard + opt.seq_len > opt.shard_tokens) rotate_shard();
        }
    }
    flush_window(emitted);
    if (!opt.stats_only) rotate_shard();

    json report;
    report["sequences"] = emitted;
    report["tokens"] = emitted * opt.seq_len;
    report["seq_len"] = opt.seq_len;
    report["seed"] = opt.common.seed;
    report["windows"] = windows;
    if (!opt.stats_only) report["shards"] = shards;
    json sources;
    for (const DataSource& s : catalog.sources) {
        std::uint64_t consumed = sampler.consumed_tokens(s.name);
        sources[s.name] = {{"consumed_tokens", consumed},
                           {"epochs", static_cast<double>(consumed) /
                                          static_cast<double>(s.token_count)}};
    }
    report["sources"] = sources;

    std::string report_text = report.dump(2) + "\n";
    if (!opt.stats_only)
        write_text(out_dir / "stream-report.json", report_text);
    else if (!opt.common.output.empty())
        write_text(opt.common.output, report_text);

    if (opt.common.machine) {
        std::cout << report_text;
    } else {
        std::cout << "emitted " << emitted << " sequences (" << format_token_count(emitted * opt.seq_len)
                  << " tokens)\n";
        for (const auto& w : windows) {
            std::cout << "  window [" << w["begin"] << ", " << w["end"] << ") phase "
                      << w["phase"] << ":";
            for (const auto& [category, fraction] : w["mix"].items())
                std::cout << "  " << category << " " << fixed(fraction.get<double>() * 100.0, 2)
                          << "%";
            std::cout << "\n";
        }
        for (const auto& [name, info] : sources.items())
            std::cout << "  " << std::left << std::setw(16) << name << " epochs "
                      << fixed(info["epochs"].get<double>(), 4) << "\n";
    }
    return 0;
}

// ---------------------------------------------------------- resume-check --

struct ResumeOpts {
    CommonOpts common;
    std::string catalog_path;
    std::string schedule_path;
    std::uint32_t seq_len = kDefaultSeqLen;
    std::size_t interruptions = 10;
    std::uint64_t check_seed = 7;
    std::int64_t perturb = -1;
};

int run_resume_check(const ResumeOpts& opt) {
    Catalog catalog = load_catalog(opt.catalog_path);
    TrainingSchedule schedule = load_schedule(opt.schedule_path);

    std::vector<std::uint64_t> points =
        pick_interruption_points(schedule, opt.seq_len, opt.interruptions, opt.check_seed);
    ResumeReport report =
        resume_check(schedule, catalog, opt.common.seed, opt.seq_len, points, opt.perturb);

    json j;
    j["pass"] = report.pass;
    j["sequences"] = report.sequences;
    j["interruption_points"] = report.interruption_points;
    j["first_divergence"] = report.first_divergence;
    std::string text = j.dump(2) + "\n";
    if (!opt.common.output.empty()) write_text(opt.common.output, text);

    if (opt.common.machine) {
        std::cout << text;
    } else if (report.pass) {
        std::cout << "resume-check PASS: " << report.sequences << " sequences, "
                  << report.interruption_points.size() << " interruptions\n";
    } else {
        std::cout << "resume-check FAIL: first divergent sequence index "
                  << report.first_divergence << "\n";
    }
    return report.pass ? 0 : 2;
}

// -------------------------------------------------------------- ablate --

struct AblateOpts {
    CommonOpts common;
    std::string catalog_path;
    std::string base_plan;
    std::string du_plan;
    std::string budget;
    std::string fractions = "0.05,0.1,0.2,0.3";
    std::vector<std::string> exclude_tags;
    std::uint32_t seq_len = kDefaultSeqLen;
};

int run_ablate(const AblateOpts& opt) {
    if (opt.common.output.empty()) throw ConfigError("ablate needs --output <dir>");
    Catalog catalog = load_catalog(opt.catalog_path);
    MixPlan base = load_plan(opt.base_plan);
    MixPlan du = load_plan(opt.du_plan);
    std::uint64_t budget = opt.budget.empty() ? base.budget : parse_token_count(opt.budget);

    std::vector<ExperimentSpec> specs =
        du_sweep(base, du, budget, parse_double_list(opt.fractions, "--fractions"),
                 opt.common.seed, opt.seq_len);
    std::size_t sweep_size = specs.size();
    for (const std::string& tag : opt.exclude_tags)
        for (std::size_t i = 0; i < sweep_size; ++i)
            if (specs[i].schedule.phases.size() > 1)
                specs.push_back(exclusion_variant(specs[i], tag, catalog));

    fs::path dir(opt.common.output);
    fs::create_directories(dir);
    json report = json::array();
    for (const ExperimentSpec& spec : specs) {
        fs::path file = dir / (spec.label + ".schedule.json");
        save_schedule(spec.schedule, file);
        json entry;
        entry["label"] = spec.label;
        entry["schedule_file"] = file.filename().string();
        entry["seed"] = spec.seed;
        entry["tokens_per_category"] = tokens_per_category(spec.schedule);
        if (spec.schedule.phases.size() > 1)
            entry["du_phase_tokens"] = spec.schedule.phases.back().plan.tokens;
        report.push_back(entry);
    }
    write_text(dir / "experiments.json", report.dump(2) + "\n");

    if (opt.common.machine) {
        std::cout << report.dump(2) << "\n";
    } else {
        std::cout << "wrote " << specs.size() << " experiment schedules to " << dir.string()
                  << "\n";
        for (const auto& entry : report) {
            std::cout << "  " << std::left << std::setw(28)
                      << entry["label"].get<std::string>() << " tokens:";
            for (const auto& [category, tokens] : entry["tokens_per_category"].items())
                std::cout << "  " << category << " "
                          << format_token_count(tokens.get<std::uint64_t>());
            std::cout << "\n";
        }
    }
    return 0;
}

// ------------------------------------------------------------ eval-agg --

struct EvalOpts {
    CommonOpts common;
    std::string scores_path;
    std::string baseline;
};

GauntletReport model_from_json(const json& m) {
    std::string label = m.at("label").get<std::string>();
    std::map<std::string, double> headline;
    if (m.contains("headline"))
        headline = m.at("headline").get<std::map<std::string, double>>();

    if (m.contains("tasks")) {
        if (m.contains("categories"))
            throw ConfigError("model '" + label + "' has both tasks and categories");
        std::vector<TaskScore> tasks;
        for (const auto& t : m.at("tasks")) {
            TaskScore task;
            task.task = t.at("task").get<std::string>();
            task.category = competency_from_name(t.at("category").get<std::string>());
            task.accuracy = t.at("accuracy").get<double>();
            task.random_baseline = t.value("baseline", 0.0);
            tasks.push_back(std::move(task));
        }
        return report_from_tasks(label, tasks, std::move(headline));
    }

    if (!m.contains("categories"))
        throw ConfigError("model '" + label + "' needs tasks or categories");
    std::map<Competency, double> categories;
    for (const auto& [name, value] : m.at("categories").items())
        categories[competency_from_name(name)] = value.get<double>();
    std::optional<double> printed_core;
    if (m.contains("core_average")) printed_core = m.at("core_average").get<double>();
    return make_report(label, categories, std::move(headline), printed_core);
}

int run_eval_agg(const EvalOpts& opt) {
    std::ifstream in(opt.scores_path);
    if (!in) throw ConfigError("cannot open scores file '" + opt.scores_path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scores parse error: ") + e.what());
    }

    std::vector<GauntletReport> reports;
    try {
        for (const auto& m : doc.at("models")) reports.push_back(model_from_json(m));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scores parse error: ") + e.what());
    }
    if (reports.empty()) throw ConfigError("scores file lists no models");

    std::size_t baseline_index = 0;
    if (!opt.baseline.empty()) {
        auto it = std::find_if(reports.begin(), reports.end(),
                               [&](const GauntletReport& r) { return r.label == opt.baseline; });
        if (it == reports.end())
            throw ConfigError("baseline '" + opt.baseline + "' not among the models");
        baseline_index = static_cast<std::size_t>(it - reports.begin());
    }

    json out;
    json models = json::array();
    for (const GauntletReport& r : reports) {
        json jm;
        jm["label"] = r.label;
        for (Competency c : kAllCompetencies)
            jm["categories"][std::string(competency_name(c))] = r.category_scores.at(c);
        jm["core_average"] = r.core;
        if (!r.headline.empty()) jm["headline"] = r.headline;
        models.push_back(jm);
    }
    out["models"] = models;

    std::optional<Comparison> cmp;
    if (reports.size() >= 2) {
        cmp = compare(reports, baseline_index);
        json rows = json::array();
        for (const ComparisonRow& row : cmp->rows) {
            json jr;
            jr["metric"] = row.metric;
            jr["values"] = row.values;
            jr["best"] = row.best;
            jr["delta_vs_baseline"] = row.delta;
            rows.push_back(jr);
        }
        out["comparison"] = {{"labels", cmp->labels},
                             {"baseline", reports[baseline_index].label},
                             {"rows", rows}};
    }

    std::string text = out.dump(2) + "\n";
    if (!opt.common.output.empty()) write_text(opt.common.output, text);
    if (opt.common.machine) {
        std::cout << text;
        return 0;
    }

    if (!cmp) {
        const GauntletReport& r = reports[0];
        std::cout << r.label << "\n";
        for (Competency c : kAllCompetencies)
            std::cout << "  " << std::left << std::setw(26) << competency_name(c) << std::right
                      << std::setw(8) << fixed(r.category_scores.at(c), 2) << "\n";
        std::cout << "  " << std::left << std::setw(26) << "core_average" << std::right
                  << std::setw(8) << fixed(r.core, 2) << "\n";
        return 0;
    }

    std::cout << std::left << std::setw(26) << "metric";
    for (const std::string& label : cmp->labels) std::cout << std::right << std::setw(18) << label;
    std::cout << "\n";
    for (const ComparisonRow& row : cmp->rows) {
        std::cout << std::left << std::setw(26) << row.metric;
        for (std::size_t i = 0; i < row.values.size(); ++i) {
            std::string cell = fixed(row.values[i], 2);
            if (row.best[i]) cell += "*";
            std::cout << std::right << std::setw(18) << cell;
        }
        std::cout << "\n";
        std::cout << std::left << std::setw(26) << "  delta";
        for (double d : row.delta)
            std::cout << std::right << std::setw(18) << (d >= 0 ? "+" + fixed(d, 2) : fixed(d, 2));
        std::cout << "\n";
    }
    std::cout << "(* per-metric best, deltas vs " << reports[baseline_index].label << ")\n";
    return 0;
}

// --------------------------------------------------------- scaling-fit --

struct ScalingOpts {
    CommonOpts common;
    std::string points_path;
    std::string metric;
    std::string fit_labels;
    double flop_multiplier = kDefaultFlopMultiplier;
};

int run_scaling_fit(const ScalingOpts& opt) {
    std::ifstream in(opt.points_path);
    if (!in) throw ConfigError("cannot open points file '" + opt.points_path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("points parse error: ") + e.what());
    }

    std::vector<ModelPoint> points;
    try {
        for (const auto& p : doc.at("points")) {
            ModelPoint point;
            point.label = p.at("label").get<std::string>();
            point.param_count = p.at("params").get<double>();
            point.token_count = p.at("tokens").get<double>();
            point.scores = p.at("scores").get<std::map<std::string, double>>();
            points.push_back(std::move(point));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("points parse error: ") + e.what());
    }

    std::vector<ModelPoint> family;
    if (opt.fit_labels.empty()) {
        family = points;
    } else {
        for (const std::string& label : split(opt.fit_labels, ',')) {
            auto it = std::find_if(points.begin(), points.end(),
                                   [&](const ModelPoint& p) { return p.label == label; });
            if (it == points.end())
                throw ConfigError("fit label '" + label + "' not among the points");
            family.push_back(*it);
        }
    }

    ScalingFit fit = fit_scaling(family, opt.metric, opt.flop_multiplier);

    json out;
    out["metric"] = fit.metric;
    out["slope"] = fit.slope;
    out["intercept"] = fit.intercept;
    out["flop_multiplier"] = fit.flop_multiplier;
    out["fit_points"] = fit.point_labels;
    json rows = json::array();
    for (const ModelPoint& p : points) {
        double c = flops(p.param_count, p.token_count, opt.flop_multiplier);
        double x = std::log10(c);
        json jr;
        jr["label"] = p.label;
        jr["flops"] = c;
        jr["log10_flops"] = x;
        jr["log10_error"] = std::log10(100.0 - p.scores.at(opt.metric));
        jr["predicted_log10_error"] = fit.predict_log_error(x);
        jr["residual"] = residual(p, fit, opt.metric);
        rows.push_back(jr);
    }
    out["points"] = rows;

    std::string text = out.dump(2) + "\n";
    if (!opt.common.output.empty()) write_text(opt.common.output, text);
    if (opt.common.machine) {
        std::cout << text;
        return 0;
    }

    std::cout << "fit " << opt.metric << ": log10(error) = " << fit.slope << " * log10(flops) + "
              << fit.intercept << "\n";
    std::cout << std::left << std::setw(20) << "label" << std::right << std::setw(14)
              << "log10_flops" << std::setw(14) << "log10_err" << std::setw(14) << "predicted"
              << std::setw(12) << "residual" << "\n";
    for (const auto& row : rows) {
        std::cout << std::left << std::setw(20) << row["label"].get<std::string>() << std::right
                  << std::setw(14) << fixed(row["log10_flops"].get<double>(), 4) << std::setw(14)
                  << fixed(row["log10_error"].get<double>(), 4) << std::setw(14)
                  << fixed(row["predicted_log10_error"].get<double>(), 4) << std::setw(12)
                  << fixed(row["residual"].get<double>(), 4) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dumix: deterministic data-mixing engine for multi-source token streams"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "INI file with [subcommand] sections supplying option defaults; "
                   "command-line flags win on conflict");

    PlanOpts plan_opts;
    CLI::App* plan_cmd = app.add_subcommand("plan", "compute a mix plan from epoch targets or "
                                                    "explicit proportions");
    plan_cmd->add_option("--catalog", plan_opts.catalog_path, "catalog file")->required();
    plan_cmd->add_option("--budget", plan_opts.budget, "token budget, e.g. 1T")->required();
    plan_cmd->add_option("--epochs", plan_opts.epochs, "per-category epochs, cat=0.5,...");
    plan_cmd->add_option("--filler", plan_opts.filler, "filler category");
    plan_cmd->add_option("--proportions", plan_opts.proportions,
                         "explicit proportions, cat=0.3,...");
    add_common(plan_cmd, plan_opts.common);

    ScheduleOpts sched_opts;
    CLI::App* sched_cmd =
        app.add_subcommand("schedule", "build a two-phase end-of-training switch schedule");
    sched_cmd->add_option("--base-plan", sched_opts.base_plan, "base mix plan file")->required();
    sched_cmd->add_option("--du-plan", sched_opts.du_plan, "upsampled mix plan file");
    sched_cmd->add_option("--budget", sched_opts.budget,
                          "token budget (defaults to the base plan's)");
    sched_cmd->add_option("--du-fraction", sched_opts.du_fraction,
                          "fraction of training under the upsampled mix");
    sched_cmd->add_option("--seq-len", sched_opts.seq_len, "sequence length (default 4096)");
    add_common(sched_cmd, sched_opts.common);

    SynthOpts synth_opts;
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "generate a deterministic synthetic corpus + catalog");
    synth_cmd->add_option("--source", synth_opts.sources,
                          "source spec: name=N,category=C,tokens=1M,band=lo:hi[,tags=a|b]");
    synth_cmd->add_flag("--demo", synth_opts.demo, "emit the built-in four-category demo corpus");
    synth_cmd->add_option("--shard-tokens", synth_opts.shard_tokens, "tokens per shard");
    add_common(synth_cmd, synth_opts.common);

    StreamOpts stream_opts;
    CLI::App* stream_cmd =
        app.add_subcommand("stream", "emit the deterministic sequence stream to output shards");
    stream_cmd->add_option("--catalog", stream_opts.catalog_path, "catalog file")->required();
    stream_cmd->add_option("--schedule", stream_opts.schedule_path, "schedule file")->required();
    stream_cmd->add_option("--seq-len", stream_opts.seq_len, "sequence length (default 4096)");
    stream_cmd->add_option("--shard-tokens", stream_opts.shard_tokens,
                           "tokens per output shard");
    stream_cmd->add_option("--stats-every", stream_opts.stats_every,
                           "realized-mix window size in sequences (0 = per phase)");
    stream_cmd->add_option("--limit", stream_opts.limit, "stop after this many sequences");
    stream_cmd->add_flag("--no-verify", stream_opts.no_verify,
                         "skip shard checksum validation on open");
    add_common(stream_cmd, stream_opts.common);

    StreamOpts stats_opts;
    stats_opts.stats_only = true;
    CLI::App* stats_cmd =
        app.add_subcommand("stats", "stream without writing shards; report realized mixes");
    stats_cmd->add_option("--catalog", stats_opts.catalog_path, "catalog file")->required();
    stats_cmd->add_option("--schedule", stats_opts.schedule_path, "schedule file")->required();
    stats_cmd->add_option("--seq-len", stats_opts.seq_len, "sequence length (default 4096)");
    stats_cmd->add_option("--stats-every", stats_opts.stats_every,
                          "realized-mix window size in sequences (0 = per phase)");
    stats_cmd->add_option("--limit", stats_opts.limit, "stop after this many sequences");
    stats_cmd->add_flag("--no-verify", stats_opts.no_verify,
                        "skip shard checksum validation on open");
    add_common(stats_cmd, stats_opts.common);

    ResumeOpts resume_opts;
    CLI::App* resume_cmd = app.add_subcommand(
        "resume-check", "verify that save/restore reproduces the uninterrupted stream");
    resume_cmd->add_option("--catalog", resume_opts.catalog_path, "catalog file")->required();
    resume_cmd->add_option("--schedule", resume_opts.schedule_path, "schedule file")->required();
    resume_cmd->add_option("--seq-len", resume_opts.seq_len, "sequence length (default 4096)");
    resume_cmd->add_option("--interruptions", resume_opts.interruptions,
                           "number of interruption points (default 10)");
    resume_cmd->add_option("--check-seed", resume_opts.check_seed,
                           "seed for drawing interruption points");
    resume_cmd->add_option("--perturb", resume_opts.perturb,
                           "test hook: corrupt the restored state at this interruption index");
    add_common(resume_cmd, resume_opts.common);

    AblateOpts ablate_opts;
    CLI::App* ablate_cmd = app.add_subcommand(
        "ablate", "emit the upsampling-duration sweep and tag-exclusion variants");
    ablate_cmd->add_option("--catalog", ablate_opts.catalog_path, "catalog file")->required();
    ablate_cmd->add_option("--base-plan", ablate_opts.base_plan, "base mix plan file")
        ->required();
    ablate_cmd->add_option("--du-plan", ablate_opts.du_plan, "upsampled mix plan file")
        ->required();
    ablate_cmd->add_option("--budget", ablate_opts.budget,
                           "token budget (defaults to the base plan's)");
    ablate_cmd->add_option("--fractions", ablate_opts.fractions,
                           "comma-separated upsampling fractions");
    ablate_cmd->add_option("--exclude-tag", ablate_opts.exclude_tags,
                           "also emit variants excluding sources with this tag");
    ablate_cmd->add_option("--seq-len", ablate_opts.seq_len, "sequence length (default 4096)");
    add_common(ablate_cmd, ablate_opts.common);

    EvalOpts eval_opts;
    CLI::App* eval_cmd = app.add_subcommand(
        "eval-agg", "aggregate benchmark scores into category and core averages");
    eval_cmd->add_option("--scores", eval_opts.scores_path, "scores file")->required();
    eval_cmd->add_option("--baseline", eval_opts.baseline,
                         "model label used as the delta baseline");
    add_common(eval_cmd, eval_opts.common);

    ScalingOpts scaling_opts;
    CLI::App* scaling_cmd = app.add_subcommand(
        "scaling-fit", "fit log10(error) against log10(FLOPs) over a model family");
    scaling_cmd->add_option("--points", scaling_opts.points_path, "points file")->required();
    scaling_cmd->add_option("--metric", scaling_opts.metric, "metric to fit")->required();
    scaling_cmd->add_option("--fit-labels", scaling_opts.fit_labels,
                            "comma-separated labels forming the fit family (default: all)");
    scaling_cmd->add_option("--flop-multiplier", scaling_opts.flop_multiplier,
                            "FLOPs = multiplier * params * tokens (default 6)");
    add_common(scaling_cmd, scaling_opts.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
        return 1;
    }

    try {
        if (app.got_subcommand(plan_cmd)) return run_plan(plan_opts);
        if (app.got_subcommand(sched_cmd)) return run_schedule(sched_opts);
        if (app.got_subcommand(synth_cmd)) return run_synth(synth_opts);
        if (app.got_subcommand(stream_cmd)) return run_stream(stream_opts);
        if (app.got_subcommand(stats_cmd)) return run_stream(stats_opts);
        if (app.got_subcommand(resume_cmd)) return run_resume_check(resume_opts);
        if (app.got_subcommand(ablate_cmd)) return run_ablate(ablate_opts);
        if (app.got_subcommand(eval_cmd)) return run_eval_agg(eval_opts);
        if (app.got_subcommand(scaling_cmd)) return run_scaling_fit(scaling_opts);
    } catch (const IntegrityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
