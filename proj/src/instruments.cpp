#include "gcx/instruments.hpp"

#include <cmath>
#include <cstdlib>

#include "gcx/error.hpp"

namespace gcx {

std::string_view to_string(InstrumentKind kind) {
  switch (kind) {
    case InstrumentKind::spot: return "spot";
    case InstrumentKind::future: return "future";
    case InstrumentKind::call_option: return "call_option";
    case InstrumentKind::put_option: return "put_option";
    case InstrumentKind::perpetual: return "perpetual";
  }
  return "unknown";
}

InstrumentKind parse_instrument_kind(std::string_view text) {
  for (auto k : {InstrumentKind::spot, InstrumentKind::future, InstrumentKind::call_option, InstrumentKind::put_option,
                 InstrumentKind::perpetual})
    if (to_string(k) == text) return k;
  throw Error(ErrorCode::Parse, "unknown instrument kind '" + std::string(text) + "'");
}

std::string_view to_string(InstrumentViolation v) {
  switch (v) {
    case InstrumentViolation::EmptyId: return "EmptyId";
    case InstrumentViolation::NonPositiveContractSize: return "NonPositiveContractSize";
    case InstrumentViolation::NonPositiveTick: return "NonPositiveTick";
    case InstrumentViolation::MissingExpiry: return "MissingExpiry";
    case InstrumentViolation::UnexpectedExpiry: return "UnexpectedExpiry";
    case InstrumentViolation::MissingStrike: return "MissingStrike";
    case InstrumentViolation::NonPositiveStrike: return "NonPositiveStrike";
    case InstrumentViolation::StrikeOffTick: return "StrikeOffTick";
    case InstrumentViolation::UnexpectedStrike: return "UnexpectedStrike";
    case InstrumentViolation::MissingUnderlying: return "MissingUnderlying";
    case InstrumentViolation::UnexpectedUnderlying: return "UnexpectedUnderlying";
    case InstrumentViolation::MissingFundingInterval: return "MissingFundingInterval";
    case InstrumentViolation::UnexpectedFundingInterval: return "UnexpectedFundingInterval";
  }
  return "Unknown";
}

std::optional<InstrumentViolation> validate(const InstrumentSpec& spec) {
  using V = InstrumentViolation;
  if (spec.id.empty()) return V::EmptyId;
  if (!spec.contract_size.is_positive()) return V::NonPositiveContractSize;
  if (!spec.tick_size.is_positive()) return V::NonPositiveTick;

  const bool needs_expiry = spec.kind == InstrumentKind::future || spec.is_option();
  if (needs_expiry && !spec.expiry) return V::MissingExpiry;
  if (!needs_expiry && spec.expiry) return V::UnexpectedExpiry;

  if (spec.is_option()) {
    if (!spec.strike) return V::MissingStrike;
    if (!spec.strike->is_positive()) return V::NonPositiveStrike;
    if (!spec.strike->is_multiple_of(spec.tick_size)) return V::StrikeOffTick;
    if (!spec.underlying || spec.underlying->empty()) return V::MissingUnderlying;
  } else {
    if (spec.strike) return V::UnexpectedStrike;
    if (spec.underlying) return V::UnexpectedUnderlying;
  }

  if (spec.kind == InstrumentKind::perpetual) {
    if (!spec.funding_interval || *spec.funding_interval <= 0) return V::MissingFundingInterval;
  } else if (spec.funding_interval) {
    return V::UnexpectedFundingInterval;
  }
  return std::nullopt;
}

void Position::apply_fill(std::int64_t signed_quantity, Decimal price, Decimal contract_size) {
  if (signed_quantity == 0) return;
  const bool same_direction = net_quantity == 0 || (net_quantity > 0) == (signed_quantity > 0);
  if (same_direction) {
    const Decimal held = Decimal(std::llabs(net_quantity));
    const Decimal added = Decimal(std::llabs(signed_quantity));
    entry_price = (held * entry_price + added * price) / (held + added);
    net_quantity += signed_quantity;
    return;
  }
  const std::int64_t closed = std::min(std::llabs(signed_quantity), std::llabs(net_quantity));
  const Decimal direction = net_quantity > 0 ? Decimal(1) : Decimal(-1);
  realized_pnl += Decimal(closed) * contract_size * (price - entry_price) * direction;
  const std::int64_t before = net_quantity;
  net_quantity += signed_quantity;
  if (net_quantity == 0) {
    entry_price = Decimal();
  } else if ((before > 0) != (net_quantity > 0)) {
    entry_price = price;
  }
}

ExerciseResult exercise_option(const InstrumentSpec& option, const Position& position, std::int64_t quantity,
                               SimTime at) {
  if (!option.is_option()) throw Error(ErrorCode::NotAnOption, option.id + " is not an option");
  ExerciseResult result;
  result.underlying = option.underlying.value_or("");
  result.entry_price = option.strike.value_or(Decimal());
  if (quantity == 0) return result;
  if (quantity < 0 || position.net_quantity < quantity)
    throw Error(ErrorCode::NotLong, "exercise of " + std::to_string(quantity) + " exceeds long position " +
                                        std::to_string(position.net_quantity) + " in " + option.id);
  if (option.expiry && at > *option.expiry) throw Error(ErrorCode::Expired, option.id + " has expired");
  result.option_delta = -quantity;
  result.future_delta = option.kind == InstrumentKind::call_option ? quantity : -quantity;
  return result;
}

std::vector<FundingTransfer> perp_funding(const InstrumentSpec& perp, Decimal mark, Decimal index,
                                          std::span<const Position> positions, Decimal coefficient) {
  std::vector<FundingTransfer> transfers;
  transfers.reserve(positions.size());
  const Decimal premium = (mark - index) * perp.contract_size * coefficient;
  for (const auto& p : positions) {
    if (p.net_quantity == 0) continue;
    transfers.push_back({p.account_id, -(premium * Decimal(p.net_quantity))});
  }
  return transfers;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double black76_premium(double future_price, double strike, double vol, double time_to_expiry, OptionType type) {
  if (vol < 0 || time_to_expiry < 0 || future_price < 0 || strike < 0 || !std::isfinite(vol) ||
      !std::isfinite(future_price) || !std::isfinite(strike) || !std::isfinite(time_to_expiry))
    throw Error(ErrorCode::NegativeInputs, "Black-76 inputs must be finite and non-negative");
  const double intrinsic =
      type == OptionType::call ? std::max(future_price - strike, 0.0) : std::max(strike - future_price, 0.0);
  const double stdev = vol * std::sqrt(time_to_expiry);
  if (stdev == 0.0 || future_price == 0.0 || strike == 0.0) return intrinsic;
  const double d1 = (std::log(future_price / strike) + 0.5 * stdev * stdev) / stdev;
  const double d2 = d1 - stdev;
  if (type == OptionType::call) return future_price * normal_cdf(d1) - strike * normal_cdf(d2);
  return strike * normal_cdf(-d2) - future_price * normal_cdf(-d1);
}

QuotePair quote_pair(Decimal future_price, Decimal strike, double vol, double time_to_expiry, Decimal tick) {
  const double call = black76_premium(future_price.to_double(), strike.to_double(), vol, time_to_expiry, OptionType::call);
  QuotePair q;
  // Never below intrinsic, which keeps the derived put non-negative.
  const Decimal intrinsic = std::max(future_price - strike, Decimal());
  q.call = std::max(Decimal::from_double(call).round_to(tick), intrinsic.round_to(tick));
  if (q.call < intrinsic) q.call += tick;
  q.put = q.call - (future_price - strike);
  return q;
}

std::optional<double> VolTable::at(Decimal strike) const {
  if (auto it = by_strike.find(strike); it != by_strike.end()) return it->second;
  return fallback;
}

double years_between(SimTime from, SimTime to) {
  return to <= from ? 0.0 : static_cast<double>(to - from) / static_cast<double>(kYear);
}

}  // namespace gcx
