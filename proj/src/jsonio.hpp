#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdk/errors.hpp"

namespace mdk {

// Strict object access: every key must be known, every required key present.
inline void expect_keys(const nlohmann::json& obj,
                        const std::set<std::string>& required,
                        const std::set<std::string>& optional,
                        const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!required.count(key) && !optional.count(key))
      throw ConfigError(where + ": unknown key '" + key + "'");
  }
  for (const auto& key : required)
    if (!obj.contains(key))
      throw ConfigError(where + ": missing key '" + key + "'");
}

template <typename T>
T get_as(const nlohmann::json& obj, const std::string& key,
         const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + ": bad value for '" + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const nlohmann::json& obj, const std::string& key, T fallback,
         const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return get_as<T>(obj, key, where);
}

}  // namespace mdk
