// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

// Typed access to optional JSON config fields with field-level errors.

#pragma once

#include <string>

#include <json.hpp>

#include "grassy/error.hpp"

namespace grassy::json_fields {

inline void require_object(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw Error(ErrorKind::ConfigInvalid, path + ": expected an object");
}

/// j[key] as T, or `fallback` when absent. Wrong JSON types throw ConfigInvalid.
template <typename T>
T get(const nlohmann::json& j, const char* key, T fallback, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw nlohmann::json::type_error::create(302, "expected a boolean", nullptr);
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw nlohmann::json::type_error::create(302, "expected an integer", nullptr);
      if constexpr (std::is_unsigned_v<T>)
        if (it->get<long long>() < 0) throw nlohmann::json::type_error::create(302, "expected a nonnegative integer", nullptr);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw nlohmann::json::type_error::create(302, "expected a number", nullptr);
    }
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigInvalid, path + "." + key + ": " + e.what());
  }
}

}  // namespace grassy::json_fields
