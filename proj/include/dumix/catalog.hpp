// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dumix/shard_io.hpp"

namespace dumix {

// A named tokenized source: one dataset inside a category.
struct DataSource {
    std::string name;
    std::string category;
    std::uint64_t token_count = 0;
    std::set<std::string> tags;
    std::vector<ShardRef> shards;  // may be empty for planning-only catalogs

    bool has_tag(std::string_view tag) const { return tags.count(std::string(tag)) != 0; }

    friend bool operator==(const DataSource&, const DataSource&) = default;
};

inline constexpr int kCatalogVersion = 1;

struct Catalog {
    std::vector<DataSource> sources;
    int version = kCatalogVersion;
    // Directory shard paths are resolved against; set by load_catalog,
    // not serialized.
    std::filesystem::path base_dir;

    const DataSource* find(std::string_view name) const;
    const DataSource& at(std::string_view name) const;
    bool has_category(std::string_view category) const;
    std::filesystem::path resolve(const std::string& shard_path) const;

    friend bool operator==(const Catalog& a, const Catalog& b) {
        return a.sources == b.sources && a.version == b.version;
    }
};

// Checks every catalog invariant; throws ValidationError (duplicate name,
// zero-size source) or IntegrityError (shard token sums disagree with the
// declared token_count), naming the offending source.
void validate_catalog(const Catalog& catalog);

Catalog load_catalog(const std::filesystem::path& path);

// Byte-stable: the same catalog always serializes to the same bytes.
void save_catalog(const Catalog& catalog, const std::filesystem::path& path);
std::string catalog_to_string(const Catalog& catalog);
Catalog catalog_from_string(const std::string& text);

struct ExcludeResult {
    Catalog catalog;
    // Categories that had sources before the exclusion and none after.
    std::vector<std::string> emptied_categories;
};

// Keeps exactly the sources NOT carrying the tag. A tag matching nothing
// returns the catalog unchanged.
ExcludeResult exclude_by_tag(const Catalog& catalog, std::string_view tag);

// Exact per-category token sums; categories with no sources are absent.
std::map<std::string, std::uint64_t> category_totals(const Catalog& catalog);

}  // namespace dumix
