// SPDX-License-Identifier: Apache-2.0
#include "dumix/catalog.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dumix/errors.hpp"

namespace dumix {

using nlohmann::json;

const DataSource* Catalog::find(std::string_view name) const {
    for (const DataSource& s : sources)
        if (s.name == name) return &s;
    return nullptr;
}

const DataSource& Catalog::at(std::string_view name) const {
    if (const DataSource* s = find(name)) return *s;
    throw ValidationError("catalog has no source named '" + std::string(name) + "'");
}

bool Catalog::has_category(std::string_view category) const {
    for (const DataSource& s : sources)
        if (s.category == category) return true;
    return false;
}

std::filesystem::path Catalog::resolve(const std::string& shard_path) const {
    std::filesystem::path p(shard_path);
    if (p.is_absolute() || base_dir.empty()) return p;
    return base_dir / p;
}

void validate_catalog(const Catalog& catalog) {
    if (catalog.version != kCatalogVersion)
        throw ConfigError("unsupported catalog version " + std::to_string(catalog.version));
    if (catalog.sources.empty()) throw ValidationError("catalog has no sources");
    std::set<std::string_view> names;
    for (const DataSource& s : catalog.sources) {
        if (s.name.empty()) throw ValidationError("catalog contains a source with an empty name");
        if (!names.insert(s.name).second)
            throw ValidationError("duplicate source name '" + s.name + "'");
        if (s.category.empty())
            throw ValidationError("source '" + s.name + "' has an empty category");
        if (s.token_count == 0)
            throw ValidationError("source '" + s.name + "' has zero tokens");
        if (!s.shards.empty()) {
            std::uint64_t sum = 0;
            for (const ShardRef& shard : s.shards) sum += shard.tokens;
            if (sum != s.token_count)
                throw IntegrityError("source '" + s.name + "' declares " +
                                     std::to_string(s.token_count) + " tokens but its shards sum to " +
                                     std::to_string(sum));
        }
    }
}

namespace {

json source_to_json(const DataSource& s) {
    json j;
    j["name"] = s.name;
    j["category"] = s.category;
    j["token_count"] = s.token_count;
    j["tags"] = s.tags;  // std::set serializes sorted
    json shards = json::array();
    for (const ShardRef& ref : s.shards)
        shards.push_back({{"path", ref.path}, {"tokens", ref.tokens}, {"crc32", ref.checksum}});
    j["shards"] = shards;
    return j;
}

DataSource source_from_json(const json& j) {
    DataSource s;
    s.name = j.at("name").get<std::string>();
    s.category = j.at("category").get<std::string>();
    s.token_count = j.at("token_count").get<std::uint64_t>();
    if (j.contains("tags"))
        for (const auto& t : j.at("tags")) s.tags.insert(t.get<std::string>());
    if (j.contains("shards"))
        for (const auto& sh : j.at("shards"))
            s.shards.push_back(ShardRef{sh.at("path").get<std::string>(),
                                        sh.at("tokens").get<std::uint64_t>(),
                                        sh.at("crc32").get<std::uint32_t>()});
    return s;
}

}  // namespace

std::string catalog_to_string(const Catalog& catalog) {
    json j;
    j["version"] = catalog.version;
    json sources = json::array();
    for (const DataSource& s : catalog.sources) sources.push_back(source_to_json(s));
    j["sources"] = sources;
    return j.dump(2) + "\n";
}

Catalog catalog_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("catalog parse error: ") + e.what());
    }
    Catalog catalog;
    try {
        catalog.version = j.at("version").get<int>();
        for (const auto& s : j.at("sources")) catalog.sources.push_back(source_from_json(s));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("catalog parse error: ") + e.what());
    }
    validate_catalog(catalog);
    return catalog;
}

Catalog load_catalog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open catalog '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    Catalog catalog = catalog_from_string(buf.str());
    catalog.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    return catalog;
}

void save_catalog(const Catalog& catalog, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write catalog '" + path.string() + "'");
    out << catalog_to_string(catalog);
    if (!out) throw IoError("write failed for catalog '" + path.string() + "'");
}

ExcludeResult exclude_by_tag(const Catalog& catalog, std::string_view tag) {
    if (tag.empty()) throw ValidationError("exclusion tag must be non-empty");
    std::set<std::string> before;
    for (const DataSource& s : catalog.sources) before.insert(s.category);

    ExcludeResult result;
    result.catalog.version = catalog.version;
    result.catalog.base_dir = catalog.base_dir;
    for (const DataSource& s : catalog.sources)
        if (!s.has_tag(tag)) result.catalog.sources.push_back(s);

    std::set<std::string> after;
    for (const DataSource& s : result.catalog.sources) after.insert(s.category);
    for (const std::string& c : before)
        if (!after.count(c)) result.emptied_categories.push_back(c);
    return result;
}

std::map<std::string, std::uint64_t> category_totals(const Catalog& catalog) {
    std::map<std::string, std::uint64_t> totals;
    for (const DataSource& s : catalog.sources) totals[s.category] += s.token_count;
    return totals;
}

}  // namespace dumix
