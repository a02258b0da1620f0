#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gcx/compute_units.hpp"
#include "gcx/decimal.hpp"
#include "gcx/instruments.hpp"
#include "gcx/types.hpp"

namespace gcx {

// exchange: the treasury account. external: counterparties outside clearing
// (spot buyers of produced compute, power utilities); never gated or margined.
enum class AccountRole { hedger, trader, market_maker, guarantor, exchange, external };

std::string_view to_string(AccountRole role);
AccountRole parse_account_role(std::string_view text);

/// A clearing account. Customer collateral is the stable balance of the
/// customer's own account; a guarantor's pool collateral is the stable balance
/// of the guarantor's account, so the two are never commingled.
struct Account {
  AccountId account_id;
  AccountRole role = AccountRole::trader;
  std::optional<AccountId> guarantor_id;
  Decimal stable_balance;
  Decimal initial_stable;
  std::map<InstrumentId, Position> positions;

  // Physical compute flows in CH.
  Decimal ch_received;
  Decimal ch_delivered;
  Decimal ch_produced;
  Decimal power_cost;

  bool is_customer() const {
    return role == AccountRole::hedger || role == AccountRole::trader || role == AccountRole::market_maker;
  }
  std::int64_t position(const InstrumentId& id) const;
};

/// Guarantor pool as seen by the risk checks.
struct GuarantorPool {
  AccountId guarantor_id;
  Decimal pool_collateral;
  Decimal pool_staked_gcx;
  std::vector<AccountId> customers;
  Decimal insurance_stake;  // guarantor's token share of the insurance fund
};

enum class ObligationStatus { pending, capacity_verified, delivered, failed, compensated };

std::string_view to_string(ObligationStatus s);
ObligationStatus parse_obligation_status(std::string_view text);

/// pending -> capacity_verified -> {delivered, failed}; failed -> compensated.
/// pending -> failed is also allowed: capacity that lapses between the
/// pre-expiry check and expiry fails the obligation without a delivery attempt.
bool is_allowed_transition(ObligationStatus from, ObligationStatus to);

struct DeliveryObligation {
  ObligationId obligation_id = 0;
  InstrumentId instrument_id;
  AccountId short_account;
  AccountId long_account;
  Decimal quantity;  // CH
  GradeTriple grade_floor;
  Decimal contract_price;  // per CH
  SimTime created = 0;
  SimTime deadline = 0;
  ObligationStatus status = ObligationStatus::pending;
  std::vector<ObligationStatus> history{ObligationStatus::pending};
  std::string failure_reason;

  /// Throws BadState for transitions outside the state machine.
  void transition(ObligationStatus to);
  bool terminal() const { return status == ObligationStatus::delivered || status == ObligationStatus::compensated; }
};

/// Deterministic recompute challenge: a splitmix64 chain seeded per task.
struct ComputeTask {
  std::uint64_t task_id = 0;
  std::uint64_t seed = 0;
  std::uint64_t iterations = 0;
  std::string expected_digest;
};

std::string compute_digest(std::uint64_t seed, std::uint64_t iterations);
ComputeTask make_task(std::uint64_t task_id, std::uint64_t seed, std::uint64_t iterations);

enum class DeliveryOutcome { accepted, challenged_failed };
std::string_view to_string(DeliveryOutcome o);

/// Recomputes the kernel and compares digests. A submission after the
/// deadline is a failure, not an error. BadState unless capacity_verified.
DeliveryOutcome verify_delivery(const DeliveryObligation& obligation, const ComputeTask& task,
                                std::string_view claimed_digest, SimTime submitted_at);

enum class CapacityResult { capacity_verified, liquidate_short };
std::string_view to_string(CapacityResult r);

/// Passes iff the profile yields at least `quantity` CH over the delivery
/// window and its grade meets the floor.
CapacityResult verify_capacity(Decimal quantity, const GradeTriple& floor, const std::optional<SystemProfile>& profile,
                               const ReferenceSystem& ref, Decimal window_hours);

struct OpenInterest {
  AccountId account_id;
  std::optional<AccountId> guarantor_id;
  std::int64_t quantity = 0;  // contracts, > 0
};

struct ExpiryMatch {
  AccountId short_account;
  AccountId long_account;
  std::int64_t quantity = 0;
};

/// Pairs shorts with longs largest-first: first inside each guarantor, then
/// the residuals across guarantors. Ties order by account id.
std::vector<ExpiryMatch> match_expiry(std::vector<OpenInterest> shorts, std::vector<OpenInterest> longs);

enum class WaterfallLayer {
  defaulter_collateral,
  defaulter_stake,
  pool_collateral,
  pool_stake,
  insurance_fund,
  haircut,
};
inline constexpr std::size_t kWaterfallLayers = 6;

std::string_view to_string(WaterfallLayer layer);

struct WaterfallRecord {
  AccountId defaulter;
  AccountId guarantor;
  std::string cause;  // "delivery_failure" or "liquidation"
  Decimal shortfall;
  std::array<Decimal, kWaterfallLayers> available{};  // haircut entry is unused
  std::array<Decimal, kWaterfallLayers> drawn{};
  Decimal haircut_collected;  // liquidation haircuts debited from winners
  Decimal written_off;

  Decimal total_drawn() const;
};

/// Greedy layered draw for a fixed set of capacities (the five funded
/// layers); whatever remains lands in the haircut layer.
std::array<Decimal, kWaterfallLayers> plan_waterfall(Decimal shortfall,
                                                     const std::array<Decimal, kWaterfallLayers - 1>& capacities);

}  // namespace gcx
