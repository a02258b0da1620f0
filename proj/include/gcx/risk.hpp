#pragma once

#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gcx/decimal.hpp"
#include "gcx/instruments.hpp"
#include "gcx/types.hpp"

namespace gcx {

/// Scenario-grid margin parameters.
struct MarginParams {
  Decimal price_scan_pct = Decimal::parse("0.15");
  int scan_steps = 7;  // odd, >= 3
  Decimal vol_scan_pct = Decimal::parse("0.25");
  Decimal maintenance_fraction = Decimal::parse("0.75");

  void validate() const;
};

struct RiskPosition {
  InstrumentId instrument_id;
  std::int64_t quantity = 0;  // signed contracts
};

/// Everything the margin grid reads: specs, marks of linear instruments and
/// option volatilities, all as of `now`.
struct MarketSnapshot {
  SimTime now = 0;
  std::map<InstrumentId, InstrumentSpec> instruments;
  std::map<InstrumentId, Decimal> marks;
  std::map<InstrumentId, double> vols;

  const InstrumentSpec& spec(const InstrumentId& id) const;
  Decimal mark(const InstrumentId& id) const;
  double vol(const InstrumentId& id) const;

  /// Linear instrument whose price drives this position's risk.
  InstrumentId risk_factor(const InstrumentId& id) const;

  /// Per-contract value: mark for linear instruments, Black-76 for options.
  Decimal contract_value(const InstrumentId& id, Decimal factor_price, double vol_multiplier) const;
};

/// Price multipliers of the scan, lowest first: 1 - pct ... 1 + pct.
std::vector<Decimal> price_scan_multipliers(const MarginParams& params);

/// Worst loss over the grid of scan_steps price moves crossed with the vol
/// shifts {-, 0, +}, computed independently per risk factor and summed; each
/// factor contributes max(0, worst loss). Spot positions carry no margin.
Decimal initial_margin(std::span<const RiskPosition> portfolio, const MarketSnapshot& market,
                       const MarginParams& params);

Decimal maintenance_margin(Decimal initial, const MarginParams& params);

enum class MarginStatus { healthy, margin_call, liquidate };
std::string_view to_string(MarginStatus status);

/// equity >= initial: healthy; initial > equity >= maintenance: margin call;
/// below maintenance: liquidate.
MarginStatus margin_check(Decimal equity, Decimal initial, Decimal maintenance);

enum class ReputationEvent { delivery_success, delivery_failure, liquidation };
std::string_view to_string(ReputationEvent event);

struct ReputationRules {
  int delivery_success = 1;
  int delivery_failure = -10;
  int liquidation = -5;
  int initial = 100;

  int delta(ReputationEvent event) const;
};

struct ReputationScore {
  AccountId account_id;
  int score = 100;
  std::vector<ReputationEvent> history;
};

/// Pure fold of an event history from the initial score, clamped to [0, 100]
/// after every step.
int replay_reputation(std::span<const ReputationEvent> history, const ReputationRules& rules = {});

class ReputationBook {
 public:
  explicit ReputationBook(ReputationRules rules = {}) : rules_(rules) {}

  void register_account(const AccountId& id);
  const ReputationScore& update(const AccountId& id, ReputationEvent event);
  const ReputationScore& at(const AccountId& id) const;
  bool contains(const AccountId& id) const { return scores_.contains(id); }
  const std::map<AccountId, ReputationScore>& all() const { return scores_; }

 private:
  ReputationRules rules_;
  std::map<AccountId, ReputationScore> scores_;
};

}  // namespace gcx
