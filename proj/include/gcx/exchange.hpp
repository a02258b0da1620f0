#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gcx/clearing.hpp"
#include "gcx/compute_units.hpp"
#include "gcx/decimal.hpp"
#include "gcx/instruments.hpp"
#include "gcx/json_io.hpp"
#include "gcx/matching.hpp"
#include "gcx/risk.hpp"
#include "gcx/token_ledger.hpp"

namespace gcx {

inline constexpr int kEngineVersion = 1;

struct ExchangeConfig {
  MarginParams margin;
  TokenConfig tokens;
  ReputationRules reputation;
  ReferenceSystem reference{"REF-1TF", Decimal(1'000'000'000'000LL), Decimal(2'500'000'000LL), "HPL", 1};
  Decimal insurance_fraction = Decimal::parse("0.05");
  SimTime verification_lead = kDay;
  SimTime delivery_window = kDay;
  Decimal funding_coefficient{1};
  std::uint64_t task_iterations = 4096;
  std::uint64_t task_seed = 0;
};

void to_json(json& j, const ExchangeConfig& c);
void from_json(const json& j, ExchangeConfig& c);

struct AccountSetup {
  AccountId id;
  AccountRole role = AccountRole::trader;
  std::optional<AccountId> guarantor;
  Decimal stable;
  Decimal tokens;  // allocated from the treasury at genesis
  Decimal staked;  // part of `tokens` staked at genesis
  Decimal fund_stable;  // contributed to the insurance fund out of `stable`
  Decimal fund_tokens;  // contributed out of the unstaked tokens
  std::optional<SystemProfile> profile;
};

/// Everything needed to rebuild the engine's initial state.
struct Genesis {
  ExchangeConfig config;
  std::vector<InstrumentSpec> instruments;
  std::map<InstrumentId, Decimal> marks;
  std::map<InstrumentId, double> vols;  // per option
  InstrumentId spot_instrument;
  Decimal token_issue;
  Decimal token_mark{1};
  std::vector<AccountSetup> accounts;
};

void to_json(json& j, const Genesis& g);
void from_json(const json& j, Genesis& g);

// Commands. Every state change goes through one of these, so a log of
// commands replays to the same state.
struct SetMark { InstrumentId instrument; Decimal price; };
struct SetTokenMark { Decimal price; };
struct PlaceOrder {
  AccountId account;
  InstrumentId instrument;
  Side side = Side::buy;
  std::optional<Decimal> price;
  std::int64_t quantity = 0;
  TimeInForce time_in_force = TimeInForce::resting;
};
struct CancelOrder { AccountId account; OrderId order_id = 0; };
/// Bilateral deal entering clearing directly. Without a price the trade is
/// struck at the model quote (options) or the mark.
struct OtcTrade {
  AccountId buyer;
  AccountId seller;
  InstrumentId instrument;
  std::optional<Decimal> price;
  std::int64_t quantity = 0;
};
struct StakeTokens { AccountId account; Decimal amount; };
struct UnstakeTokens { AccountId account; Decimal amount; };
struct IssueTokens { Decimal amount; };
struct TransferTokens { AccountId from; AccountId to; Decimal amount; };
struct FundContribution { AccountId account; Decimal stable; Decimal tokens; };
struct ExerciseOption { AccountId account; InstrumentId option; std::int64_t quantity = 0; };
struct CheckCapacity { InstrumentId future; };
struct ExpireOption { InstrumentId option; };
struct ExpireFuture { InstrumentId future; };
struct SubmitDelivery { ObligationId obligation = 0; std::string digest; };
struct DeliveryDeadline { ObligationId obligation = 0; };
struct PerpFunding { InstrumentId perp; };
/// One production period: pays power for `capacity` CH and sells what was not
/// already delivered since the previous period at spot. With shutdown on and
/// spot below cost, nothing is produced.
struct Produce {
  AccountId account;
  Decimal capacity;
  Decimal cost_per_ch;
  bool shutdown = false;
  AccountId buyer;
  AccountId utility;
};
struct DistributeYield {};
struct SetProfile { AccountId account; SystemProfile profile; };
struct PerformanceBurn { AccountId account; std::int64_t missed = 0; };
/// Closes the account's positions with market orders (one instrument or all).
struct Flatten { AccountId account; std::optional<InstrumentId> instrument; };
/// Records a call/put quote pair for every strike listed on the underlying.
struct QuoteOptions { InstrumentId underlying; };
/// Rests a bid and an ask around the mark.
struct QuoteMarket {
  AccountId account;
  InstrumentId instrument;
  Decimal half_spread;
  std::int64_t quantity = 0;
};

using CommandBody =
    std::variant<SetMark, SetTokenMark, PlaceOrder, CancelOrder, OtcTrade, StakeTokens, UnstakeTokens, IssueTokens,
                 TransferTokens, FundContribution, ExerciseOption, CheckCapacity, ExpireOption, ExpireFuture,
                 SubmitDelivery, DeliveryDeadline, PerpFunding, Produce, DistributeYield, SetProfile,
                 PerformanceBurn, Flatten, QuoteOptions, QuoteMarket>;

struct Command {
  SimTime time = 0;
  CommandBody body;
};

std::string command_name(const CommandBody& body);
json command_to_json(const Command& c);
Command command_from_json(const json& j);

struct QuoteRecord {
  SimTime time = 0;
  InstrumentId underlying;
  Decimal strike;
  Decimal future_price;
  Decimal call;
  Decimal put;
  bool parity_holds = false;
};

/// The stateful exchange: books, clearing, tokens and reputation. Single
/// writer; every mutation arrives through apply().
class Exchange {
 public:
  explicit Exchange(const Genesis& genesis);

  /// Applies one command and returns the output records it produced. Domain
  /// failures (gate rejections, insufficient balances) become "rejected"
  /// records rather than exceptions; the state is left untouched by them.
  std::vector<json> apply(const Command& command);

  SimTime now() const { return now_; }
  const Genesis& genesis() const { return genesis_; }
  const ExchangeConfig& config() const { return genesis_.config; }

  const std::map<AccountId, Account>& accounts() const { return accounts_; }
  const Account& account(const AccountId& id) const;
  const std::map<ObligationId, DeliveryObligation>& obligations() const { return obligations_; }
  const ComputeTask& task(ObligationId id) const;
  const TokenLedger& tokens() const { return tokens_; }
  const ReputationBook& reputation() const { return reputation_; }
  const MatchingEngine& book() const { return book_; }
  const MarketSnapshot& market() const { return market_; }
  const std::vector<WaterfallRecord>& waterfalls() const { return waterfalls_; }
  const std::vector<SlashRecord>& slashes() const { return slashes_; }
  const std::vector<QuoteRecord>& quotes() const { return quotes_; }
  const std::vector<json>& margin_calls() const { return margin_calls_; }
  const std::vector<json>& liquidations() const { return liquidations_; }
  const std::optional<SystemProfile>& profile(const AccountId& id) const;

  Decimal mark(const InstrumentId& id) const { return market_.mark(id); }
  Decimal spot() const { return market_.mark(genesis_.spot_instrument); }
  Decimal equity(const AccountId& id) const;
  Decimal initial_margin_of(const AccountId& id) const;
  GuarantorPool pool(const AccountId& guarantor) const;

  /// Model premium for an option on the tick grid (call or put of a parity pair).
  Decimal option_quote(const InstrumentId& option) const;

  /// stable balances + fund stable + fee pool - write-offs. Constant over the
  /// life of the exchange.
  Decimal value_total() const;
  Decimal initial_value_total() const { return initial_value_total_; }
  Decimal write_offs() const { return write_offs_; }

  std::size_t supply_checks() const { return supply_checks_; }
  std::size_t supply_violations() const { return supply_violations_; }
  std::size_t trade_count() const { return trade_count_; }

  /// Canonical JSON of the full state and its FNV-1a hash.
  json state_json() const;
  std::string state_hash() const;

 private:
  struct Gate {
    bool approved = true;
    Decimal requirement;
    Decimal equity;
    std::string reason;
  };

  Account& mutable_account(const AccountId& id);
  const InstrumentSpec& spec(const InstrumentId& id) const { return market_.spec(id); }

  void dispatch(const CommandBody& body, std::vector<json>& out);
  void on(const SetMark& c, std::vector<json>& out);
  void on(const SetTokenMark& c, std::vector<json>& out);
  void on(const PlaceOrder& c, std::vector<json>& out);
  void on(const CancelOrder& c, std::vector<json>& out);
  void on(const OtcTrade& c, std::vector<json>& out);
  void on(const StakeTokens& c, std::vector<json>& out);
  void on(const UnstakeTokens& c, std::vector<json>& out);
  void on(const IssueTokens& c, std::vector<json>& out);
  void on(const TransferTokens& c, std::vector<json>& out);
  void on(const FundContribution& c, std::vector<json>& out);
  void on(const ExerciseOption& c, std::vector<json>& out);
  void on(const CheckCapacity& c, std::vector<json>& out);
  void on(const ExpireOption& c, std::vector<json>& out);
  void on(const ExpireFuture& c, std::vector<json>& out);
  void on(const SubmitDelivery& c, std::vector<json>& out);
  void on(const DeliveryDeadline& c, std::vector<json>& out);
  void on(const PerpFunding& c, std::vector<json>& out);
  void on(const Produce& c, std::vector<json>& out);
  void on(const DistributeYield& c, std::vector<json>& out);
  void on(const SetProfile& c, std::vector<json>& out);
  void on(const PerformanceBurn& c, std::vector<json>& out);
  void on(const Flatten& c, std::vector<json>& out);
  void on(const QuoteOptions& c, std::vector<json>& out);
  void on(const QuoteMarket& c, std::vector<json>& out);

  // Gate: worst case over {no resting orders filled, all resting buys filled,
  // all resting sells filled}, the new fills always included.
  Gate pre_trade_gate(const AccountId& id, const std::vector<std::pair<InstrumentId, std::pair<std::int64_t, Decimal>>>&
                                               new_fills) const;
  bool gated(const Account& a) const { return a.is_customer(); }

  Decimal contract_mark(const InstrumentId& id) const;
  void book_fill(Account& a, const InstrumentId& id, std::int64_t signed_qty, Decimal price);
  void settle_trade(const Trade& t, std::vector<json>& out, const char* kind);
  void execute_submit(const OrderRequest& req, std::vector<json>& out, const char* kind);
  void margin_sweep(std::vector<json>& out);
  void liquidate(const AccountId& id, const std::optional<InstrumentId>& only, const std::string& cause,
                 std::vector<json>& out);
  WaterfallRecord run_waterfall(const AccountId& defaulter, Decimal shortfall, const std::string& cause,
                                const std::optional<AccountId>& beneficiary,
                                const std::map<AccountId, Decimal>& winners, std::vector<json>& out);
  Decimal convert_stake(const AccountId& id, Decimal value, std::vector<json>& out);
  void exercise(const AccountId& holder, const InstrumentId& option, std::int64_t qty, std::vector<json>& out);
  void compensate(DeliveryObligation& ob, std::vector<json>& out);
  void refresh_lock(const AccountId& id);
  void emit_obligation(const DeliveryObligation& ob, std::vector<json>& out) const;

  Genesis genesis_;
  SimTime now_ = 0;
  MarketSnapshot market_;
  std::map<AccountId, Account> accounts_;
  std::map<AccountId, std::optional<SystemProfile>> profiles_;
  std::map<AccountId, Decimal> delivered_at_last_produce_;
  MatchingEngine book_;
  TokenLedger tokens_;
  ReputationBook reputation_;
  std::map<ObligationId, DeliveryObligation> obligations_;
  std::map<ObligationId, ComputeTask> tasks_;
  ObligationId next_obligation_ = 1;

  std::vector<WaterfallRecord> waterfalls_;
  std::vector<SlashRecord> slashes_;
  std::vector<QuoteRecord> quotes_;
  std::vector<json> margin_calls_;
  std::vector<json> liquidations_;
  Decimal write_offs_;
  Decimal initial_value_total_;
  std::size_t supply_checks_ = 0;
  std::size_t supply_violations_ = 0;
  std::size_t trade_count_ = 0;
};

json record_of(const WaterfallRecord& w);
json record_of(const SlashRecord& s);
json record_of(const DeliveryObligation& o);
json record_of(const QuoteRecord& q);

}  // namespace gcx
