// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dumix/catalog.hpp"
#include "dumix/schedule.hpp"
#include "dumix/weighted_scheduler.hpp"

namespace dumix {

// Raised by next() once the schedule's budget is exhausted.
class EndOfScheduleError : public Error {
public:
    explicit EndOfScheduleError(const std::string& msg) : Error(msg) {}
};

// One emitted sequence: seq_len tokens drawn from a single source.
struct SequenceRecord {
    std::string source;
    std::uint64_t global_index = 0;
    std::vector<std::uint32_t> tokens;
};

// Complete resumable sampler state. Everything else the sampler holds
// (permutations, file handles) is derived from this plus the schedule and
// catalog, which is what makes save/restore bit-exact.
struct SamplerState {
    struct SourceCursor {
        std::uint64_t epoch = 0;  // completed passes over the source
        std::uint64_t pos = 0;    // tokens consumed within the current epoch
        double credit = 0.0;

        friend bool operator==(const SourceCursor&, const SourceCursor&) = default;
    };

    std::uint64_t global_token_cursor = 0;  // always a multiple of seq_len
    std::uint32_t phase_index = 0;
    std::uint64_t seed = 0;
    std::uint32_t seq_len = 0;
    // Catalog order; pairs of (source name, cursor).
    std::vector<std::pair<std::string, SourceCursor>> sources;

    friend bool operator==(const SamplerState&, const SamplerState&) = default;
};

// Binary state image with magic, version and CRC-32 trailer.
std::vector<std::uint8_t> save_state(const SamplerState& state);
SamplerState restore_state(std::span<const std::uint8_t> bytes);

struct SamplerOptions {
    // Scan each shard's payload against its manifest checksum the first
    // time it is opened.
    bool verify_shards = false;
};

// Streams the deterministic sequence order realizing a TrainingSchedule.
// Selection is the credit rule; each source is consumed through seeded
// per-epoch block permutations; short epoch tails carry into the next
// epoch so no token is lost.
class Sampler {
public:
    Sampler(const TrainingSchedule& schedule, const Catalog& catalog, std::uint64_t seed,
            std::uint32_t seq_len, SamplerOptions options = {});
    Sampler(const TrainingSchedule& schedule, const Catalog& catalog, const SamplerState& state,
            SamplerOptions options = {});
    ~Sampler();

    Sampler(const Sampler&) = delete;
    Sampler& operator=(const Sampler&) = delete;

    bool done() const;
    // Fills `out`, reusing its token buffer. Throws EndOfScheduleError
    // once done() is true.
    void next(SequenceRecord& out);
    SequenceRecord next();

    // Snapshot of the resumable state (credits included).
    SamplerState state() const;
    std::uint64_t sequences_emitted() const { return state_.global_token_cursor / seq_len_; }
    std::uint64_t total_sequences() const;

    // epoch * size + pos for one source.
    std::uint64_t consumed_tokens(std::string_view source_name) const;

private:
    struct SourceRuntime;

    void load_phase_weights();
    void advance_phase();
    void gather(std::size_t source_index, std::uint64_t n, std::vector<std::uint32_t>& out);
    void read_physical(SourceRuntime& rt, std::uint64_t phys, std::uint64_t len,
                       std::vector<std::uint32_t>& out);

    const TrainingSchedule& schedule_;
    const Catalog& catalog_;
    SamplerOptions options_;
    std::uint32_t seq_len_;
    SamplerState state_;
    std::vector<std::unique_ptr<SourceRuntime>> runtimes_;  // catalog order
    std::unique_ptr<CreditScheduler> selector_;
};

// Empirical per-category sequence fractions over records whose global
// index lies in [window_begin, window_end).
std::map<std::string, double> realized_mix(std::span<const SequenceRecord> records,
                                           std::uint64_t window_begin, std::uint64_t window_end,
                                           const Catalog& catalog);

struct ResumeReport {
    bool pass = false;
    std::uint64_t sequences = 0;
    std::vector<std::uint64_t> interruption_points;  // sequence indices
    std::int64_t first_divergence = -1;              // -1 when pass
};

// Streams the schedule twice, uninterrupted and with save/restore at the
// given interruption points (sequence indices), and compares the two
// streams record by record. perturb_credit_at >= 0 deliberately corrupts
// the restored state at that interruption; used to prove the check can
// fail.
ResumeReport resume_check(const TrainingSchedule& schedule, const Catalog& catalog,
                          std::uint64_t seed, std::uint32_t seq_len,
                          std::vector<std::uint64_t> interruption_points,
                          std::int64_t perturb_credit_at = -1);

// Draws `count` interruption points for resume_check: deterministic picks
// in (0, total_sequences), always including the first phase boundary when
// the schedule has more than one phase.
std::vector<std::uint64_t> pick_interruption_points(const TrainingSchedule& schedule,
                                                    std::uint32_t seq_len, std::size_t count,
                                                    std::uint64_t pick_seed);

}  // namespace dumix
