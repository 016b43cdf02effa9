// SPDX-License-Identifier: Apache-2.0
#include "dumix/shard_io.hpp"

#include <array>
#include <cstring>

#include "dumix/catalog.hpp"
#include "dumix/errors.hpp"
#include "dumix/rng.hpp"

namespace dumix {

namespace {

struct Crc32Table {
    std::array<std::uint32_t, 256> t;
    Crc32Table() {
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
    }
};

const Crc32Table kCrcTable;

void put_u16(unsigned char* p, std::uint16_t v) {
    p[0] = static_cast<unsigned char>(v);
    p[1] = static_cast<unsigned char>(v >> 8);
}

void put_u32(unsigned char* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

void put_u64(unsigned char* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

void encode_header(unsigned char* h, std::uint64_t count) {
    std::memcpy(h, kShardMagic, 4);
    put_u16(h + 4, kShardVersion);
    h[6] = 4;  // token width
    h[7] = 0;  // reserved
    put_u64(h + 8, count);
}

// Tokens serialize as little-endian u32 regardless of host order.
void encode_tokens(std::span<const std::uint32_t> tokens, std::vector<unsigned char>& buf) {
    buf.resize(tokens.size() * 4);
    unsigned char* p = buf.data();
    for (std::uint32_t t : tokens) {
        put_u32(p, t);
        p += 4;
    }
}

std::uint64_t parse_header(std::ifstream& in, const std::string& path) {
    unsigned char h[kShardHeaderBytes];
    if (!in.read(reinterpret_cast<char*>(h), sizeof(h)))
        throw IntegrityError("shard '" + path + "': truncated header");
    if (std::memcmp(h, kShardMagic, 4) != 0)
        throw IntegrityError("shard '" + path + "': bad magic");
    if (std::uint16_t v = get_u16(h + 4); v != kShardVersion)
        throw ConfigError("shard '" + path + "': unsupported format version " + std::to_string(v));
    if (h[6] != 4)
        throw ConfigError("shard '" + path + "': unsupported token width " + std::to_string(h[6]));
    return get_u64(h + 8);
}

}  // namespace

std::uint32_t crc32(std::uint32_t crc, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint32_t c = crc ^ 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i)
        c = kCrcTable.t[(c ^ p[i]) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

ShardRef write_shard(std::span<const std::uint32_t> tokens, const std::filesystem::path& path) {
    ShardWriter w(path);
    w.append(tokens);
    return w.finish();
}

ShardRef write_shard(std::span<const std::uint64_t> tokens, const std::filesystem::path& path) {
    std::vector<std::uint32_t> narrow;
    narrow.reserve(tokens.size());
    for (std::uint64_t t : tokens) {
        if (t > 0xFFFFFFFFull)
            throw ValidationError("token id " + std::to_string(t) +
                                  " does not fit token width 4 in '" + path.string() + "'");
        narrow.push_back(static_cast<std::uint32_t>(t));
    }
    return write_shard(std::span<const std::uint32_t>(narrow), path);
}

ShardWriter::ShardWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
    unsigned char h[kShardHeaderBytes];
    encode_header(h, 0);  // count patched in finish()
    out_.write(reinterpret_cast<const char*>(h), sizeof(h));
}

ShardWriter::~ShardWriter() = default;

void ShardWriter::append(std::span<const std::uint32_t> tokens) {
    if (finished_) throw IoError("append to finished shard '" + path_.string() + "'");
    std::vector<unsigned char> buf;
    encode_tokens(tokens, buf);
    crc_ = crc32(crc_, buf.data(), buf.size());
    out_.write(reinterpret_cast<const char*>(buf.data()),
               static_cast<std::streamsize>(buf.size()));
    count_ += tokens.size();
}

ShardRef ShardWriter::finish() {
    if (finished_) throw IoError("shard '" + path_.string() + "' already finished");
    finished_ = true;
    unsigned char tail[4];
    put_u32(tail, crc_);
    out_.write(reinterpret_cast<const char*>(tail), sizeof(tail));
    unsigned char h[kShardHeaderBytes];
    encode_header(h, count_);
    out_.seekp(0);
    out_.write(reinterpret_cast<const char*>(h), sizeof(h));
    out_.flush();
    if (!out_) throw IoError("write failed for shard '" + path_.string() + "'");
    out_.close();
    return ShardRef{path_.string(), count_, crc_};
}

ShardReader::ShardReader(const ShardRef& ref) : ref_(ref), in_(ref.path, std::ios::binary) {
    if (!in_) throw IoError("cannot open shard '" + ref.path + "'");
    std::uint64_t count = parse_header(in_, ref.path);
    if (count != ref.tokens)
        throw IntegrityError("shard '" + ref.path + "': header declares " +
                             std::to_string(count) + " tokens, manifest says " +
                             std::to_string(ref.tokens));
}

void ShardReader::read_into(std::uint64_t start, std::uint64_t len,
                            std::vector<std::uint32_t>& out) {
    if (start + len > ref_.tokens)
        throw ValidationError("read [" + std::to_string(start) + ", " +
                              std::to_string(start + len) + ") out of range for shard '" +
                              ref_.path + "' with " + std::to_string(ref_.tokens) + " tokens");
    if (len == 0) return;
    in_.clear();
    in_.seekg(static_cast<std::streamoff>(kShardHeaderBytes + start * 4));
    std::vector<unsigned char> buf(len * 4);
    if (!in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
        throw IntegrityError("shard '" + ref_.path + "': truncated payload");
    std::size_t base = out.size();
    out.resize(base + len);
    for (std::uint64_t i = 0; i < len; ++i) out[base + i] = get_u32(buf.data() + i * 4);
}

std::vector<std::uint32_t> read_range(const ShardRef& ref, std::uint64_t start, std::uint64_t len,
                                      bool validate) {
    if (validate) validate_shard(ref);
    ShardReader reader(ref);
    std::vector<std::uint32_t> out;
    out.reserve(len);
    reader.read_into(start, len, out);
    return out;
}

void validate_shard(const ShardRef& ref) {
    std::ifstream in(ref.path, std::ios::binary);
    if (!in) throw IoError("cannot open shard '" + ref.path + "'");
    std::uint64_t count = parse_header(in, ref.path);
    if (count != ref.tokens)
        throw IntegrityError("shard '" + ref.path + "': header declares " +
                             std::to_string(count) + " tokens, manifest says " +
                             std::to_string(ref.tokens));
    std::uint32_t crc = 0;
    std::uint64_t remaining = count * 4;
    std::vector<char> buf(1 << 20);
    while (remaining > 0) {
        std::size_t chunk = static_cast<std::size_t>(
            std::min<std::uint64_t>(remaining, buf.size()));
        if (!in.read(buf.data(), static_cast<std::streamsize>(chunk)))
            throw IntegrityError("shard '" + ref.path + "': truncated payload");
        crc = crc32(crc, buf.data(), chunk);
        remaining -= chunk;
    }
    unsigned char tail[4];
    if (!in.read(reinterpret_cast<char*>(tail), sizeof(tail)))
        throw IntegrityError("shard '" + ref.path + "': missing checksum");
    std::uint32_t stored = get_u32(tail);
    if (crc != stored)
        throw IntegrityError("shard '" + ref.path + "': payload checksum mismatch (computed " +
                             std::to_string(crc) + ", stored " + std::to_string(stored) + ")");
    if (crc != ref.checksum)
        throw IntegrityError("shard '" + ref.path + "': checksum " + std::to_string(crc) +
                             " does not match manifest " + std::to_string(ref.checksum));
}

DataSource synth_corpus(const SynthSpec& spec, const std::filesystem::path& dir,
                        std::uint64_t shard_tokens) {
    if (spec.size < 1) throw ValidationError("synthetic source '" + spec.name + "': size must be >= 1");
    if (spec.band_hi <= spec.band_lo)
        throw ValidationError("synthetic source '" + spec.name + "': empty vocabulary band [" +
                              std::to_string(spec.band_lo) + ", " + std::to_string(spec.band_hi) + ")");
    if (shard_tokens == 0) throw ValidationError("shard_tokens must be positive");

    std::filesystem::create_directories(dir);
    SplitMix64 rng(derive_seed(spec.seed, spec.name, 0));
    std::uint32_t band = spec.band_hi - spec.band_lo;

    DataSource source;
    source.name = spec.name;
    source.category = spec.category;
    source.token_count = spec.size;
    source.tags.insert(spec.tags.begin(), spec.tags.end());

    std::vector<std::uint32_t> chunk;
    std::uint64_t remaining = spec.size;
    int shard_index = 0;
    while (remaining > 0) {
        std::uint64_t n = std::min(remaining, shard_tokens);
        std::string file = spec.name + "-" + std::to_string(shard_index++) + ".dutk";
        ShardWriter w(dir / file);
        std::uint64_t left = n;
        while (left > 0) {
            std::size_t batch = static_cast<std::size_t>(std::min<std::uint64_t>(left, 1u << 20));
            chunk.resize(batch);
            for (std::size_t i = 0; i < batch; ++i)
                chunk[i] = spec.band_lo + static_cast<std::uint32_t>(rng.next_below(band));
            w.append(chunk);
            left -= batch;
        }
        ShardRef ref = w.finish();
        ref.path = file;  // manifest paths stay relative to the catalog dir
        source.shards.push_back(ref);
        remaining -= n;
    }
    return source;
}

}  // namespace dumix
