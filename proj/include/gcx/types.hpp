#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace gcx {

using AccountId = std::string;
using InstrumentId = std::string;
using OrderId = std::uint64_t;
using TradeId = std::uint64_t;
using ObligationId = std::uint64_t;

/// Simulated time in whole seconds.
using SimTime = std::int64_t;

inline constexpr SimTime kHour = 3600;
inline constexpr SimTime kDay = 24 * kHour;
inline constexpr SimTime kYear = 365 * kDay;

enum class Side { buy, sell };

constexpr Side opposite(Side s) { return s == Side::buy ? Side::sell : Side::buy; }
constexpr std::int64_t sign(Side s) { return s == Side::buy ? 1 : -1; }
constexpr std::string_view to_string(Side s) { return s == Side::buy ? "buy" : "sell"; }

}  // namespace gcx
