#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "maxfun/error.hpp"

namespace maxfun::cli {

using json = nlohmann::json;

/// Builds the effective configuration: `defaults`, then the JSON file, then
/// each `key.path=value` assignment in order. Keys absent from `defaults`
/// are rejected. An assignment's value is parsed as JSON when possible and
/// taken as a plain string otherwise.
json resolve_config(const json& defaults, const std::optional<std::filesystem::path>& file,
                    const std::vector<std::string>& assignments);

/// Throws InvalidArgument naming the first key of `cfg` that `schema` lacks.
/// Objects are checked recursively; arrays are left to the typed readers.
void check_keys(const json& cfg, const json& schema, const std::string& prefix = "");

/// Typed access with readable errors ("config key 'window': expected ...").
template <typename T>
T get(const json& cfg, std::string_view key) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) throw InvalidArgument("config key '" + std::string(key) + "' is missing");
  try {
    return it->template get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument("config key '" + std::string(key) + "': " + e.what());
  }
}

/// Non-negative integer.
std::size_t get_count(const json& cfg, std::string_view key);

/// Path value resolved relative to `base` when relative; empty for null.
std::filesystem::path get_path(const json& cfg, std::string_view key, const std::filesystem::path& base);

}  // namespace maxfun::cli
