#include "config.hpp"

#include <fstream>

namespace maxfun::cli {

namespace {

void merge(json& into, const json& from, const json& schema, const std::string& prefix) {
  for (const auto& [key, value] : from.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    const auto it = schema.find(key);
    if (it == schema.end()) throw InvalidArgument("unknown config key '" + path + "'");
    if (it->is_object() && value.is_object()) {
      merge(into[key], value, *it, path);
    } else {
      into[key] = value;
    }
  }
}

}  // namespace

void check_keys(const json& cfg, const json& schema, const std::string& prefix) {
  if (!cfg.is_object()) return;
  for (const auto& [key, value] : cfg.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    const auto it = schema.find(key);
    if (it == schema.end()) throw InvalidArgument("unknown config key '" + path + "'");
    if (it->is_object()) check_keys(value, *it, path);
  }
}

json resolve_config(const json& defaults, const std::optional<std::filesystem::path>& file,
                    const std::vector<std::string>& assignments) {
  json cfg = defaults;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw InvalidArgument("cannot read config file " + file->string());
    json loaded;
    try {
      loaded = json::parse(in);
    } catch (const json::exception& e) {
      throw InvalidArgument("config file " + file->string() + ": " + e.what());
    }
    if (!loaded.is_object()) throw InvalidArgument("config file " + file->string() + " must hold a JSON object");
    merge(cfg, loaded, defaults, "");
  }

  for (const std::string& assignment : assignments) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw InvalidArgument("--set expects key=value, got '" + assignment + "'");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &cfg;
    const json* schema = &defaults;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      const auto it = schema->find(part);
      if (it == schema->end()) throw InvalidArgument("unknown config key '" + key + "'");
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      if (!it->is_object()) throw InvalidArgument("config key '" + key.substr(0, dot) + "' has no sub-keys");
      schema = &*it;
      node = &(*node)[part];
      start = dot + 1;
    }
  }
  check_keys(cfg, defaults);
  return cfg;
}

std::size_t get_count(const json& cfg, std::string_view key) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) throw InvalidArgument("config key '" + std::string(key) + "' is missing");
  if (!it->is_number_integer() || it->get<long long>() < 0) {
    throw InvalidArgument("config key '" + std::string(key) + "' must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

std::filesystem::path get_path(const json& cfg, std::string_view key, const std::filesystem::path& base) {
  const auto it = cfg.find(key);
  if (it == cfg.end() || it->is_null()) return {};
  std::filesystem::path p = get<std::string>(cfg, key);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

}  // namespace maxfun::cli
