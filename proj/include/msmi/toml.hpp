// Minimal TOML reader/writer covering what run configs need: comments,
// [table] headers, dotted keys, basic and literal strings, integers, floats,
// booleans, and single-line arrays of scalars. Keys flatten to dotted paths
// in a sorted map; serialize() is deterministic and parse(serialize(t)) == t.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace msmi::toml {

using Scalar = std::variant<std::string, std::int64_t, double, bool>;
using Value = std::variant<std::string, std::int64_t, double, bool, std::vector<Scalar>>;
using Table = std::map<std::string, Value>;

Table parse(std::string_view text);
Table parse_file(const std::filesystem::path& path);

std::string serialize(const Table& table);

// Typed lookups. Absent keys yield nullopt; present keys of the wrong type
// throw ConfigError. get_double accepts integer values.
std::optional<std::string> get_string(const Table& table, const std::string& key);
std::optional<std::int64_t> get_int(const Table& table, const std::string& key);
std::optional<double> get_double(const Table& table, const std::string& key);
std::optional<bool> get_bool(const Table& table, const std::string& key);
std::optional<std::vector<std::string>> get_string_array(const Table& table,
                                                         const std::string& key);

}  // namespace msmi::toml
