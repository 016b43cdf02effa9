// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dumix {

// CRC-32 (reflected polynomial 0xEDB88320), the checksum used by shard
// payloads and state images.
std::uint32_t crc32(std::uint32_t crc, const void* data, std::size_t len);
inline std::uint32_t crc32(const void* data, std::size_t len) { return crc32(0, data, len); }

// One tokenized shard on disk.
//
// Layout, all little-endian:
//   bytes 0..3   magic "DUTK"
//   bytes 4..5   format version (u16, currently 1)
//   byte  6      token width in bytes (4)
//   byte  7      reserved (0)
//   bytes 8..15  token count (u64)
//   then         count * u32 token ids
//   then         CRC-32 of the payload bytes (u32)
struct ShardRef {
    std::string path;
    std::uint64_t tokens = 0;
    std::uint32_t checksum = 0;

    friend bool operator==(const ShardRef&, const ShardRef&) = default;
};

inline constexpr char kShardMagic[4] = {'D', 'U', 'T', 'K'};
inline constexpr std::uint16_t kShardVersion = 1;
inline constexpr std::size_t kShardHeaderBytes = 16;

// Writes a complete shard in one call. The u64 overload rejects ids that
// do not fit the 4-byte token width.
ShardRef write_shard(std::span<const std::uint32_t> tokens, const std::filesystem::path& path);
ShardRef write_shard(std::span<const std::uint64_t> tokens, const std::filesystem::path& path);

// Incremental writer for streamed output: header up front, payload
// appended in chunks, count and checksum patched on finish().
class ShardWriter {
public:
    explicit ShardWriter(const std::filesystem::path& path);
    ~ShardWriter();

    ShardWriter(const ShardWriter&) = delete;
    ShardWriter& operator=(const ShardWriter&) = delete;

    void append(std::span<const std::uint32_t> tokens);
    ShardRef finish();

    std::uint64_t tokens_written() const { return count_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::uint64_t count_ = 0;
    std::uint32_t crc_ = 0;
    bool finished_ = false;
};

// Reads ref.tokens[start .. start+len). validate=true additionally scans
// the whole payload and checks it against the manifest checksum.
std::vector<std::uint32_t> read_range(const ShardRef& ref, std::uint64_t start, std::uint64_t len,
                                      bool validate = false);

// Full-payload checksum scan; throws IntegrityError on mismatch with the
// manifest entry or the trailing checksum in the file.
void validate_shard(const ShardRef& ref);

// Random-access reader over one shard with a persistent file handle.
class ShardReader {
public:
    explicit ShardReader(const ShardRef& ref);

    // Appends len tokens starting at token offset start to out.
    void read_into(std::uint64_t start, std::uint64_t len, std::vector<std::uint32_t>& out);

    const ShardRef& ref() const { return ref_; }

private:
    ShardRef ref_;
    std::ifstream in_;
};

// Spec for one deterministically generated source: `size` tokens drawn
// uniformly from [band_lo, band_hi). Disjoint bands across sources let
// tests identify a token's source from its value alone.
struct SynthSpec {
    std::string name;
    std::string category;
    std::uint64_t size = 0;
    std::uint32_t band_lo = 0;
    std::uint32_t band_hi = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> tags;
};

struct DataSource;  // catalog.hpp

// Generates the shards for one synthetic source under dir and returns the
// DataSource entry (paths relative to dir). Same spec, same bytes.
DataSource synth_corpus(const SynthSpec& spec, const std::filesystem::path& dir,
                        std::uint64_t shard_tokens = 1u << 22);

}  // namespace dumix
