#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gcx/compute_units.hpp"
#include "gcx/decimal.hpp"
#include "gcx/types.hpp"

namespace gcx {

enum class InstrumentKind { spot, future, call_option, put_option, perpetual };

std::string_view to_string(InstrumentKind kind);
InstrumentKind parse_instrument_kind(std::string_view text);

/// Contract specification. Immutable once listed.
struct InstrumentSpec {
  InstrumentId id;
  InstrumentKind kind = InstrumentKind::future;
  Decimal contract_size{1};  // compute hours per contract
  GradeTriple grade_floor;
  std::optional<SimTime> expiry;
  std::optional<Decimal> strike;
  std::optional<InstrumentId> underlying;
  Decimal tick_size = Decimal::parse("0.01");
  std::optional<SimTime> funding_interval;

  bool is_option() const { return kind == InstrumentKind::call_option || kind == InstrumentKind::put_option; }
  /// Positions settled by variation margin against a mark.
  bool is_margined_linear() const { return kind == InstrumentKind::future || kind == InstrumentKind::perpetual; }
};

enum class InstrumentViolation {
  EmptyId,
  NonPositiveContractSize,
  NonPositiveTick,
  MissingExpiry,
  UnexpectedExpiry,
  MissingStrike,
  NonPositiveStrike,
  StrikeOffTick,
  UnexpectedStrike,
  MissingUnderlying,
  UnexpectedUnderlying,
  MissingFundingInterval,
  UnexpectedFundingInterval,
};

std::string_view to_string(InstrumentViolation v);

/// Either the spec is valid (nullopt) or exactly one violation is named, the
/// first found in a fixed check order.
std::optional<InstrumentViolation> validate(const InstrumentSpec& spec);

/// Net exposure of one account in one instrument.
struct Position {
  AccountId account_id;
  InstrumentId instrument_id;
  std::int64_t net_quantity = 0;  // signed contracts
  Decimal entry_price;            // volume-weighted over the open lots
  Decimal realized_pnl;

  /// Books a fill of signed quantity at price. Reductions realize P&L against
  /// the entry price; flips reopen at the fill price.
  void apply_fill(std::int64_t signed_quantity, Decimal price, Decimal contract_size);
};

struct ExerciseResult {
  std::int64_t option_delta = 0;  // change to the option position
  InstrumentId underlying;
  std::int64_t future_delta = 0;  // +q for calls, -q for puts
  Decimal entry_price;            // strike
};

/// American-style exercise of `quantity` long options into the underlying
/// future. Performs no delivery; the caller books the deltas.
ExerciseResult exercise_option(const InstrumentSpec& option, const Position& position, std::int64_t quantity,
                               SimTime at);

struct FundingTransfer {
  AccountId account_id;
  Decimal amount;  // positive: receives
};

/// Periodic perpetual funding: each position pays
/// (mark - index) * net_quantity * contract_size * coefficient.
std::vector<FundingTransfer> perp_funding(const InstrumentSpec& perp, Decimal mark, Decimal index,
                                          std::span<const Position> positions, Decimal coefficient = Decimal(1));

enum class OptionType { call, put };

double normal_cdf(double x);

/// Black-76 value on a future with zero discount rate. At zero vol or zero
/// time the intrinsic value is returned.
double black76_premium(double future_price, double strike, double vol, double time_to_expiry, OptionType type);

/// Call and put quoted on the option tick. The call is the rounded model
/// value; the put is derived from the call so that C - P = F - K exactly.
struct QuotePair {
  Decimal call;
  Decimal put;
};
QuotePair quote_pair(Decimal future_price, Decimal strike, double vol, double time_to_expiry, Decimal tick);

/// Per-strike volatility input for one underlying. No smile model is fitted.
struct VolTable {
  std::map<Decimal, double> by_strike;
  std::optional<double> fallback;

  std::optional<double> at(Decimal strike) const;
};

double years_between(SimTime from, SimTime to);

}  // namespace gcx
