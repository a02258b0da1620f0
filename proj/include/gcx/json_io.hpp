#pragma once

// JSON mappings for the value types. Decimals travel as strings so that
// round trips are exact.

#include <json.hpp>
#include <optional>
#include <string>

#include "gcx/compute_units.hpp"
#include "gcx/decimal.hpp"
#include "gcx/error.hpp"
#include "gcx/instruments.hpp"
#include "gcx/risk.hpp"
#include "gcx/token_ledger.hpp"

namespace gcx {

using json = nlohmann::json;

void to_json(json& j, const Decimal& d);
void from_json(const json& j, Decimal& d);

void to_json(json& j, const GradeTriple& g);
void from_json(const json& j, GradeTriple& g);

void to_json(json& j, const ReferenceSystem& r);
void from_json(const json& j, ReferenceSystem& r);

void to_json(json& j, const SystemProfile& p);
void from_json(const json& j, SystemProfile& p);

void to_json(json& j, const InstrumentSpec& s);
void from_json(const json& j, InstrumentSpec& s);

void to_json(json& j, const Position& p);

void to_json(json& j, const MarginParams& m);
void from_json(const json& j, MarginParams& m);

void to_json(json& j, const TokenConfig& c);
void from_json(const json& j, TokenConfig& c);

/// Required member; throws Parse naming the key when absent or mistyped.
template <typename T>
T get_required(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::Parse, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return std::nullopt;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("field '") + key + "': " + e.what());
  }
}

/// Accepts a JSON string, integer or float; floats go through their shortest
/// decimal text, never through binary arithmetic.
Decimal decimal_from_json(const json& j);

/// Integer FLOPs given as a JSON number or a string such as "1e12".
Flops flops_from_json(const json& j);

/// 64-bit FNV-1a of the text, as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

}  // namespace gcx
