#include "gcx/risk.hpp"

#include <algorithm>
#include <array>

#include "gcx/error.hpp"

namespace gcx {

void MarginParams::validate() const {
  if (!price_scan_pct.is_positive() || price_scan_pct >= Decimal(1))
    throw Error(ErrorCode::InvalidArgument, "price_scan_pct must lie in (0, 1)");
  if (scan_steps < 3 || scan_steps % 2 == 0) throw Error(ErrorCode::InvalidArgument, "scan_steps must be odd and >= 3");
  if (vol_scan_pct.is_negative()) throw Error(ErrorCode::InvalidArgument, "vol_scan_pct must be >= 0");
  if (!maintenance_fraction.is_positive() || maintenance_fraction > Decimal(1))
    throw Error(ErrorCode::InvalidArgument, "maintenance_fraction must lie in (0, 1]");
}

const InstrumentSpec& MarketSnapshot::spec(const InstrumentId& id) const {
  auto it = instruments.find(id);
  if (it == instruments.end()) throw Error(ErrorCode::UnknownInstrument, "unknown instrument '" + id + "'");
  return it->second;
}

Decimal MarketSnapshot::mark(const InstrumentId& id) const {
  auto it = marks.find(id);
  if (it == marks.end()) throw Error(ErrorCode::MissingMark, "no mark for '" + id + "'");
  return it->second;
}

double MarketSnapshot::vol(const InstrumentId& id) const {
  auto it = vols.find(id);
  if (it == vols.end()) throw Error(ErrorCode::MissingVol, "no volatility for '" + id + "'");
  return it->second;
}

InstrumentId MarketSnapshot::risk_factor(const InstrumentId& id) const {
  const auto& s = spec(id);
  if (s.is_option()) return *s.underlying;
  return id;
}

Decimal MarketSnapshot::contract_value(const InstrumentId& id, Decimal factor_price, double vol_multiplier) const {
  const auto& s = spec(id);
  if (!s.is_option()) return factor_price * s.contract_size;
  const double v = vol(id) * vol_multiplier;
  const double t = years_between(now, *s.expiry);
  const auto type = s.kind == InstrumentKind::call_option ? OptionType::call : OptionType::put;
  const double premium = black76_premium(factor_price.to_double(), s.strike->to_double(), v, t, type);
  return Decimal::from_double(premium) * s.contract_size;
}

std::vector<Decimal> price_scan_multipliers(const MarginParams& params) {
  params.validate();
  const int n = params.scan_steps;
  std::vector<Decimal> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out.push_back(Decimal(1) + Decimal::mul_div(params.price_scan_pct, Decimal(2 * i - (n - 1)), Decimal(n - 1)));
  return out;
}

Decimal initial_margin(std::span<const RiskPosition> portfolio, const MarketSnapshot& market,
                       const MarginParams& params) {
  const auto multipliers = price_scan_multipliers(params);
  const double vol_shift = params.vol_scan_pct.to_double();
  const std::array<double, 3> vol_multipliers{1.0 - vol_shift, 1.0, 1.0 + vol_shift};

  // Group by risk factor; margin sums across factors without offsets.
  std::map<InstrumentId, std::vector<RiskPosition>> groups;
  for (const auto& p : portfolio) {
    if (p.quantity == 0) continue;
    if (market.spec(p.instrument_id).kind == InstrumentKind::spot) continue;
    groups[market.risk_factor(p.instrument_id)].push_back(p);
  }

  Decimal total;
  for (const auto& [factor, positions] : groups) {
    const Decimal base_price = market.mark(factor);
    Decimal base_value;
    for (const auto& p : positions)
      base_value += Decimal(p.quantity) * market.contract_value(p.instrument_id, base_price, 1.0);
    Decimal worst_loss;
    for (const Decimal m : multipliers) {
      const Decimal shocked = base_price * m;
      for (const double vm : vol_multipliers) {
        Decimal value;
        for (const auto& p : positions)
          value += Decimal(p.quantity) * market.contract_value(p.instrument_id, shocked, vm);
        worst_loss = std::max(worst_loss, base_value - value);
      }
    }
    total += worst_loss;
  }
  return total;
}

Decimal maintenance_margin(Decimal initial, const MarginParams& params) {
  return initial * params.maintenance_fraction;
}

std::string_view to_string(MarginStatus status) {
  switch (status) {
    case MarginStatus::healthy: return "healthy";
    case MarginStatus::margin_call: return "margin_call";
    case MarginStatus::liquidate: return "liquidate";
  }
  return "unknown";
}

MarginStatus margin_check(Decimal equity, Decimal initial, Decimal maintenance) {
  if (equity >= initial) return MarginStatus::healthy;
  if (equity >= maintenance) return MarginStatus::margin_call;
  return MarginStatus::liquidate;
}

std::string_view to_string(ReputationEvent event) {
  switch (event) {
    case ReputationEvent::delivery_success: return "delivery_success";
    case ReputationEvent::delivery_failure: return "delivery_failure";
    case ReputationEvent::liquidation: return "liquidation";
  }
  return "unknown";
}

int ReputationRules::delta(ReputationEvent event) const {
  switch (event) {
    case ReputationEvent::delivery_success: return delivery_success;
    case ReputationEvent::delivery_failure: return delivery_failure;
    case ReputationEvent::liquidation: return liquidation;
  }
  return 0;
}

int replay_reputation(std::span<const ReputationEvent> history, const ReputationRules& rules) {
  int score = std::clamp(rules.initial, 0, 100);
  for (auto e : history) score = std::clamp(score + rules.delta(e), 0, 100);
  return score;
}

void ReputationBook::register_account(const AccountId& id) {
  auto [it, inserted] = scores_.try_emplace(id);
  if (inserted) {
    it->second.account_id = id;
    it->second.score = std::clamp(rules_.initial, 0, 100);
  }
}

const ReputationScore& ReputationBook::update(const AccountId& id, ReputationEvent event) {
  auto it = scores_.find(id);
  if (it == scores_.end()) throw Error(ErrorCode::UnknownAccount, "no reputation record for '" + id + "'");
  it->second.history.push_back(event);
  it->second.score = std::clamp(it->second.score + rules_.delta(event), 0, 100);
  return it->second;
}

const ReputationScore& ReputationBook::at(const AccountId& id) const {
  auto it = scores_.find(id);
  if (it == scores_.end()) throw Error(ErrorCode::UnknownAccount, "no reputation record for '" + id + "'");
  return it->second;
}

}  // namespace gcx
