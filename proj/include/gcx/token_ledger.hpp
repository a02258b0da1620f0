#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gcx/decimal.hpp"
#include "gcx/types.hpp"

namespace gcx {

struct TokenConfig {
  Decimal supply_cap = Decimal(1'000'000'000);
  Decimal fee_bps = Decimal(0);            // trading fee on notional
  Decimal burn_bps = Decimal(0);           // share of each fee burned, in bps of the fee
  Decimal seat_threshold = Decimal(1000);  // staked tokens for a member seat
  Decimal seat_discount = Decimal::parse("0.5");
  Decimal slash_burn_fraction = Decimal::parse("0.5");
  Decimal perf_burn_rate = Decimal(0);  // tokens burned per missed delivery
  Decimal yield_fraction = Decimal::parse("0.5");
  bool reputation_yield_bonus = true;
  AccountId treasury = "exchange";
};

struct TokenHolding {
  Decimal balance;
  Decimal staked;
  Decimal locked;  // slash exposure of open obligations; unstake may not cut below it
};

struct FundShare {
  Decimal stable;
  Decimal tokens;
};

/// Default-loss backstop. Every unit of the fund is attributed to a
/// contributor: the shares sum exactly to the fund balances.
struct InsuranceFund {
  Decimal stable_balance;
  Decimal token_balance;
  std::map<AccountId, FundShare> shares;
};

struct SlashRecord {
  AccountId account_id;
  Decimal slashed;
  Decimal burned;
  Decimal transferred;
  std::string recipient;  // account id, or "insurance_fund"
};

struct FeeRecord {
  AccountId account_id;
  Decimal notional;
  Decimal fee;
  bool seat = false;
  Decimal burned_tokens;
};

struct YieldTransfer {
  AccountId account_id;
  Decimal amount;
};

struct SupplyCheck {
  Decimal cumulative_issued;
  Decimal total_supply;
  Decimal cumulative_burned;
  Decimal supply_cap;
  bool identity_holds = false;  // issued == supply + burned, and supply == sum of holdings
  bool within_cap = false;
};

inline constexpr std::string_view kFundRecipient = "insurance_fund";

/// GCX supply, stakes, burns, fees and the insurance fund. Single writer.
class TokenLedger {
 public:
  explicit TokenLedger(TokenConfig config = {});

  const TokenConfig& config() const { return config_; }
  void open(const AccountId& id);
  bool has(const AccountId& id) const { return holdings_.contains(id); }
  const TokenHolding& holding(const AccountId& id) const;
  const std::map<AccountId, TokenHolding>& holdings() const { return holdings_; }

  /// New tokens to the treasury, never beyond the cap.
  void issue(Decimal amount);
  void transfer(const AccountId& from, const AccountId& to, Decimal amount);

  void stake(const AccountId& id, Decimal amount);
  void unstake(const AccountId& id, Decimal amount);
  void set_locked(const AccountId& id, Decimal amount);

  /// Removes amount from the stake; slash_burn_fraction is burned and the rest
  /// goes to the recipient (an account's balance, or the insurance fund).
  SlashRecord slash(const AccountId& id, Decimal amount, const std::string& recipient);

  /// Fee on notional, discounted for seat holders. The fee accrues to the fee
  /// pool; burn_bps of it is burned from the treasury at the token mark.
  FeeRecord charge_fee(const AccountId& id, Decimal notional);
  bool has_seat(const AccountId& id) const;

  /// Burns perf_burn_rate * missed from the stake, capped at the stake.
  Decimal performance_burn(const AccountId& id, std::int64_t missed_deliveries);

  /// Pays yield_fraction of the fee pool pro-rata to fund contributors. The
  /// weight of a contributor is the token-marked value of its share, times
  /// (1 + reputation / 100) when the bonus is enabled.
  std::vector<YieldTransfer> distribute_yield(const std::map<AccountId, int>& reputations);

  // Insurance fund movements. Stable amounts are debited/credited to the
  // clearing accounts by the caller.
  void fund_contribute_stable(const AccountId& contributor, Decimal amount);
  void fund_contribute_tokens(const AccountId& contributor, Decimal amount);
  /// Pays stable out of the fund, reducing shares pro-rata. Returns the amount
  /// actually paid (capped at the fund's stable balance).
  Decimal fund_pay_stable(Decimal amount);
  /// Tokens entering the fund (slash compensation), attributed pro-rata to the
  /// contributors' stable shares.
  void fund_receive_tokens(Decimal amount);

  const InsuranceFund& fund() const { return fund_; }
  Decimal fee_pool() const { return fee_pool_; }

  Decimal token_mark() const { return token_mark_; }
  void set_token_mark(Decimal mark);

  Decimal total_supply() const;
  Decimal cumulative_issued() const { return cumulative_issued_; }
  Decimal cumulative_burned() const { return cumulative_burned_; }
  SupplyCheck check() const;

 private:
  TokenHolding& mutable_holding(const AccountId& id);

  TokenConfig config_;
  std::map<AccountId, TokenHolding> holdings_;
  InsuranceFund fund_;
  Decimal fee_pool_;
  Decimal token_mark_{1};
  Decimal cumulative_issued_;
  Decimal cumulative_burned_;
};

}  // namespace gcx
