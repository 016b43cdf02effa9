// SPDX-License-Identifier: Apache-2.0
#include "dumix/sampler.hpp"

#include <algorithm>
#include <cstring>

#include "dumix/rng.hpp"

namespace dumix {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteCursor {
public:
    explicit ByteCursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint16_t u16() { return static_cast<std::uint16_t>(u(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(u(4)); }
    std::uint64_t u64() { return u(8); }

    std::string str(std::size_t len) {
        need(len);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) {
        if (pos_ + n > bytes_.size())
            throw IntegrityError("sampler state image truncated");
    }
    std::uint64_t u(int width) {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = width - 1; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

constexpr char kStateMagic[4] = {'D', 'U', 'S', 'S'};
constexpr std::uint16_t kStateVersion = 1;

std::uint64_t credit_bits(double c) {
    std::uint64_t b;
    std::memcpy(&b, &c, 8);
    return b;
}

double credit_from_bits(std::uint64_t b) {
    double c;
    std::memcpy(&c, &b, 8);
    return c;
}

}  // namespace

std::vector<std::uint8_t> save_state(const SamplerState& state) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kStateMagic, kStateMagic + 4);
    put_u16(out, kStateVersion);
    put_u16(out, 0);
    put_u64(out, state.seed);
    put_u32(out, state.seq_len);
    put_u32(out, state.phase_index);
    put_u64(out, state.global_token_cursor);
    put_u32(out, static_cast<std::uint32_t>(state.sources.size()));
    for (const auto& [name, cursor] : state.sources) {
        put_u16(out, static_cast<std::uint16_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put_u64(out, cursor.epoch);
        put_u64(out, cursor.pos);
        put_u64(out, credit_bits(cursor.credit));
    }
    put_u32(out, crc32(out.data(), out.size()));
    return out;
}

SamplerState restore_state(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kStateMagic, 4) != 0)
        throw IntegrityError("not a sampler state image");
    std::uint32_t stored_crc = 0;
    {
        if (bytes.size() < 4) throw IntegrityError("sampler state image truncated");
        const std::uint8_t* tail = bytes.data() + bytes.size() - 4;
        for (int i = 3; i >= 0; --i) stored_crc = (stored_crc << 8) | tail[i];
    }
    if (crc32(bytes.data(), bytes.size() - 4) != stored_crc)
        throw IntegrityError("sampler state image checksum mismatch");

    ByteCursor cur(bytes.first(bytes.size() - 4));
    cur.str(4);  // magic
    if (std::uint16_t v = cur.u16(); v != kStateVersion)
        throw ConfigError("unsupported sampler state version " + std::to_string(v));
    cur.u16();  // reserved
    SamplerState state;
    state.seed = cur.u64();
    state.seq_len = cur.u32();
    state.phase_index = cur.u32();
    state.global_token_cursor = cur.u64();
    std::uint32_t n = cur.u32();
    state.sources.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::uint16_t len = cur.u16();
        std::string name = cur.str(len);
        SamplerState::SourceCursor sc;
        sc.epoch = cur.u64();
        sc.pos = cur.u64();
        sc.credit = credit_from_bits(cur.u64());
        state.sources.emplace_back(std::move(name), sc);
    }
    return state;
}

struct Sampler::SourceRuntime {
    const DataSource* source = nullptr;
    std::vector<ShardRef> shards;               // paths resolved against the catalog dir
    std::vector<std::uint64_t> shard_starts;    // prefix sums, size() == shards.size() + 1
    std::vector<std::unique_ptr<ShardReader>> readers;
    std::vector<std::uint32_t> perm;            // block permutation of the cached epoch
    std::uint64_t perm_epoch = UINT64_MAX;
    std::uint64_t full_blocks = 0;              // token_count / seq_len
    bool used = false;                          // positive weight in some phase
};

Sampler::Sampler(const TrainingSchedule& schedule, const Catalog& catalog, std::uint64_t seed,
                 std::uint32_t seq_len, SamplerOptions options)
    : schedule_(schedule), catalog_(catalog), options_(options), seq_len_(seq_len) {
    state_.seed = seed;
    state_.seq_len = seq_len;
    for (const DataSource& s : catalog.sources)
        state_.sources.emplace_back(s.name, SamplerState::SourceCursor{});

    validate_schedule(schedule_);
    if (seq_len_ == 0) throw ValidationError("sequence length must be positive");
    for (std::size_t i = 0; i + 1 < schedule_.phases.size(); ++i)
        if (schedule_.phases[i].end_token % seq_len_ != 0)
            throw ValidationError("phase boundary " + std::to_string(schedule_.phases[i].end_token) +
                                  " is not a multiple of the sequence length");

    runtimes_.reserve(catalog.sources.size());
    for (const DataSource& s : catalog.sources) {
        auto rt = std::make_unique<SourceRuntime>();
        rt->source = &s;
        rt->shard_starts.push_back(0);
        for (const ShardRef& ref : s.shards) {
            ShardRef resolved = ref;
            resolved.path = catalog.resolve(ref.path).string();
            rt->shards.push_back(std::move(resolved));
            rt->shard_starts.push_back(rt->shard_starts.back() + ref.tokens);
        }
        rt->readers.resize(rt->shards.size());
        rt->full_blocks = s.token_count / seq_len_;
        if (rt->full_blocks > UINT32_MAX)
            throw ValidationError("source '" + s.name + "' has too many blocks");
        runtimes_.push_back(std::move(rt));
    }

    for (const Phase& phase : schedule_.phases) {
        for (const auto& [name, weight] : phase.plan.source_weights) {
            if (weight <= 0.0) continue;
            const DataSource* s = catalog.find(name);
            if (!s) throw ValidationError("plan references unknown source '" + name + "'");
            if (s->token_count < seq_len_)
                throw ValidationError("source '" + name + "' has " +
                                      std::to_string(s->token_count) +
                                      " tokens, smaller than one sequence of " +
                                      std::to_string(seq_len_));
            if (s->shards.empty())
                throw ValidationError("source '" + name + "' has no shard data");
            for (std::size_t i = 0; i < catalog.sources.size(); ++i)
                if (catalog.sources[i].name == name) runtimes_[i]->used = true;
        }
    }

    load_phase_weights();
}

Sampler::~Sampler() = default;

Sampler::Sampler(const TrainingSchedule& schedule, const Catalog& catalog,
                 const SamplerState& state, SamplerOptions options)
    : Sampler(schedule, catalog, state.seed, state.seq_len, options) {
    if (state.sources.size() != catalog.sources.size())
        throw ValidationError("state has " + std::to_string(state.sources.size()) +
                              " sources, catalog has " + std::to_string(catalog.sources.size()));
    for (std::size_t i = 0; i < state.sources.size(); ++i)
        if (state.sources[i].first != catalog.sources[i].name)
            throw ValidationError("state source '" + state.sources[i].first +
                                  "' does not match catalog source '" +
                                  catalog.sources[i].name + "'");
    if (state.global_token_cursor % state.seq_len != 0)
        throw IntegrityError("state cursor is not sequence-aligned");
    if (state.phase_index >= schedule.phases.size())
        throw IntegrityError("state phase index out of range");

    state_ = state;
    load_phase_weights();
    std::vector<double> credits(state_.sources.size());
    for (std::size_t i = 0; i < credits.size(); ++i) credits[i] = state_.sources[i].second.credit;
    const Phase& phase = schedule_.phases[state_.phase_index];
    std::uint64_t steps_into_phase =
        (state_.global_token_cursor - phase.start_token) / state_.seq_len;
    selector_->restore(credits, steps_into_phase);
}

SamplerState Sampler::state() const {
    SamplerState snapshot = state_;
    std::span<const double> credits = selector_->credits();
    for (std::size_t i = 0; i < snapshot.sources.size(); ++i)
        snapshot.sources[i].second.credit = credits[i];
    return snapshot;
}

std::uint64_t Sampler::total_sequences() const {
    std::uint64_t n = 0;
    for (const Phase& p : schedule_.phases) n += p.length() / seq_len_;
    return n;
}

std::uint64_t Sampler::consumed_tokens(std::string_view source_name) const {
    for (std::size_t i = 0; i < state_.sources.size(); ++i) {
        if (state_.sources[i].first == source_name) {
            const auto& cur = state_.sources[i].second;
            return cur.epoch * runtimes_[i]->source->token_count + cur.pos;
        }
    }
    throw ValidationError("unknown source '" + std::string(source_name) + "'");
}

void Sampler::load_phase_weights() {
    const MixPlan& plan = schedule_.phases[state_.phase_index].plan;
    std::vector<double> weights;
    weights.reserve(catalog_.sources.size());
    for (const DataSource& s : catalog_.sources) {
        auto it = plan.source_weights.find(s.name);
        weights.push_back(it == plan.source_weights.end() ? 0.0 : it->second);
    }
    selector_ = std::make_unique<CreditScheduler>(std::move(weights));
}

void Sampler::advance_phase() {
    // Credits reset at every boundary: phases are independent experiments.
    while (state_.phase_index + 1 < schedule_.phases.size() &&
           state_.global_token_cursor >= schedule_.phases[state_.phase_index].end_token) {
        ++state_.phase_index;
        load_phase_weights();
    }
}

bool Sampler::done() const {
    return state_.global_token_cursor + seq_len_ > schedule_.total_budget;
}

void Sampler::next(SequenceRecord& out) {
    if (done())
        throw EndOfScheduleError("schedule exhausted at token " +
                                 std::to_string(state_.global_token_cursor));
    advance_phase();
    std::size_t chosen = selector_->next();
    out.source = catalog_.sources[chosen].name;
    out.global_index = state_.global_token_cursor / seq_len_;
    gather(chosen, seq_len_, out.tokens);
    state_.global_token_cursor += seq_len_;
}

SequenceRecord Sampler::next() {
    SequenceRecord rec;
    next(rec);
    return rec;
}

void Sampler::gather(std::size_t source_index, std::uint64_t n, std::vector<std::uint32_t>& out) {
    out.clear();
    SourceRuntime& rt = *runtimes_[source_index];
    SamplerState::SourceCursor& cur = state_.sources[source_index].second;
    const std::uint64_t size = rt.source->token_count;
    const std::uint64_t full_tokens = rt.full_blocks * seq_len_;

    while (n > 0) {
        if (rt.perm_epoch != cur.epoch) {
            rt.perm = epoch_permutation(state_.seed, rt.source->name, cur.epoch,
                                        static_cast<std::uint32_t>(rt.full_blocks));
            rt.perm_epoch = cur.epoch;
        }
        std::uint64_t phys, run;
        if (cur.pos < full_tokens) {
            std::uint64_t block = cur.pos / seq_len_;
            std::uint64_t offset = cur.pos % seq_len_;
            phys = static_cast<std::uint64_t>(rt.perm[block]) * seq_len_ + offset;
            run = std::min<std::uint64_t>(n, seq_len_ - offset);
        } else {
            // The sub-sequence tail sits at the physical end of the source
            // and carries into the next epoch's permutation head.
            phys = cur.pos;
            run = std::min(n, size - cur.pos);
        }
        read_physical(rt, phys, run, out);
        cur.pos += run;
        n -= run;
        if (cur.pos == size) {
            cur.pos = 0;
            ++cur.epoch;
        }
    }
}

void Sampler::read_physical(SourceRuntime& rt, std::uint64_t phys, std::uint64_t len,
                            std::vector<std::uint32_t>& out) {
    while (len > 0) {
        auto it = std::upper_bound(rt.shard_starts.begin(), rt.shard_starts.end(), phys);
        std::size_t idx = static_cast<std::size_t>(it - rt.shard_starts.begin()) - 1;
        if (idx >= rt.shards.size())
            throw IntegrityError("source '" + rt.source->name + "': physical offset " +
                                 std::to_string(phys) + " beyond shard data");
        std::uint64_t within = phys - rt.shard_starts[idx];
        std::uint64_t chunk = std::min(len, rt.shards[idx].tokens - within);
        if (!rt.readers[idx]) {
            if (options_.verify_shards) validate_shard(rt.shards[idx]);
            rt.readers[idx] = std::make_unique<ShardReader>(rt.shards[idx]);
        }
        rt.readers[idx]->read_into(within, chunk, out);
        phys += chunk;
        len -= chunk;
    }
}

std::map<std::string, double> realized_mix(std::span<const SequenceRecord> records,
                                           std::uint64_t window_begin, std::uint64_t window_end,
                                           const Catalog& catalog) {
    if (window_begin >= window_end) throw ValidationError("empty realized-mix window");
    std::map<std::string, std::string> category_of;
    for (const DataSource& s : catalog.sources) category_of[s.name] = s.category;

    std::map<std::string, std::uint64_t> counts;
    std::uint64_t total = 0;
    for (const SequenceRecord& rec : records) {
        if (rec.global_index < window_begin || rec.global_index >= window_end) continue;
        auto it = category_of.find(rec.source);
        if (it == category_of.end())
            throw ValidationError("record source '" + rec.source + "' not in catalog");
        ++counts[it->second];
        ++total;
    }
    if (total == 0) throw ValidationError("no records inside the realized-mix window");
    std::map<std::string, double> mix;
    for (const auto& [category, count] : counts)
        mix[category] = static_cast<double>(count) / static_cast<double>(total);
    return mix;
}

namespace {

std::uint64_t record_fingerprint(const SequenceRecord& rec) {
    std::uint64_t h = fnv1a_init();
    h = fnv1a_str(h, rec.source);
    h = fnv1a_u64(h, rec.global_index);
    h = fnv1a(h, rec.tokens.data(), rec.tokens.size() * sizeof(std::uint32_t));
    return h;
}

}  // namespace

std::vector<std::uint64_t> pick_interruption_points(const TrainingSchedule& schedule,
                                                    std::uint32_t seq_len, std::size_t count,
                                                    std::uint64_t pick_seed) {
    std::uint64_t total = 0;
    for (const Phase& p : schedule.phases) total += p.length() / seq_len;
    if (total < 2) throw ValidationError("schedule too short for interruption points");
    count = std::min<std::size_t>(count, static_cast<std::size_t>(total - 1));

    std::vector<std::uint64_t> points;
    std::uint64_t boundary = schedule.phases[0].length() / seq_len;
    if (schedule.phases.size() > 1 && count > 0 && boundary > 0 && boundary < total)
        points.push_back(boundary);

    SplitMix64 rng(pick_seed);
    while (points.size() < count) {
        std::uint64_t p = 1 + rng.next_below(total - 1);
        if (std::find(points.begin(), points.end(), p) == points.end()) points.push_back(p);
    }
    std::sort(points.begin(), points.end());
    return points;
}

ResumeReport resume_check(const TrainingSchedule& schedule, const Catalog& catalog,
                          std::uint64_t seed, std::uint32_t seq_len,
                          std::vector<std::uint64_t> interruption_points,
                          std::int64_t perturb_credit_at) {
    std::sort(interruption_points.begin(), interruption_points.end());
    interruption_points.erase(
        std::unique(interruption_points.begin(), interruption_points.end()),
        interruption_points.end());

    std::vector<std::uint64_t> reference;
    {
        Sampler sampler(schedule, catalog, seed, seq_len);
        SequenceRecord rec;
        while (!sampler.done()) {
            sampler.next(rec);
            reference.push_back(record_fingerprint(rec));
        }
    }

    ResumeReport report;
    report.sequences = reference.size();
    report.interruption_points = interruption_points;

    auto sampler = std::make_unique<Sampler>(schedule, catalog, seed, seq_len);
    SequenceRecord rec;
    std::size_t next_point = 0;
    for (std::uint64_t idx = 0; idx < reference.size(); ++idx) {
        while (next_point < interruption_points.size() && interruption_points[next_point] == idx) {
            std::vector<std::uint8_t> image = save_state(sampler->state());
            SamplerState restored = restore_state(image);
            if (perturb_credit_at >= 0 &&
                static_cast<std::size_t>(perturb_credit_at) == next_point) {
                // Move one whole selection of credit between the two
                // heaviest sources of the current phase. The state stays
                // internally consistent but encodes a different selection
                // history, so the continuation must diverge.
                const MixPlan& plan = phase_at(schedule, restored.global_token_cursor).plan;
                SamplerState::SourceCursor* donor = nullptr;
                SamplerState::SourceCursor* receiver = nullptr;
                double donor_w = 0.0, receiver_w = 0.0;
                for (auto& [name, cursor] : restored.sources) {
                    auto it = plan.source_weights.find(name);
                    if (it == plan.source_weights.end() || it->second <= 0.0) continue;
                    if (it->second > donor_w) {
                        receiver = donor;
                        receiver_w = donor_w;
                        donor = &cursor;
                        donor_w = it->second;
                    } else if (it->second > receiver_w) {
                        receiver = &cursor;
                        receiver_w = it->second;
                    }
                }
                if (donor && receiver) {
                    donor->credit += 1.0;
                    receiver->credit -= 1.0;
                }
            }
            sampler = std::make_unique<Sampler>(schedule, catalog, restored);
            ++next_point;
        }
        sampler->next(rec);
        if (record_fingerprint(rec) != reference[idx]) {
            report.first_divergence = static_cast<std::int64_t>(idx);
            report.pass = false;
            return report;
        }
    }
    report.pass = true;
    return report;
}

}  // namespace dumix
