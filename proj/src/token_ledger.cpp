#include "gcx/token_ledger.hpp"

#include <algorithm>

#include "gcx/error.hpp"

namespace gcx {
namespace {

const Decimal kBpsDenominator{10'000};

// Debits `amount` from the selected component of the shares in proportion to
// that component. Rounding dust lands on the largest share; if dust would
// drive a share negative the deficit moves to the next share with room, in
// id order.
template <typename Field>
void debit_shares(std::map<AccountId, FundShare>& shares, Decimal amount, Field field) {
  std::vector<Decimal> weights;
  Decimal total;
  for (auto& [id, share] : shares) {
    weights.push_back(share.*field);
    total += share.*field;
  }
  if (amount.is_zero()) return;
  if (amount > total) throw Error(ErrorCode::Insufficient, "fund shares cannot cover " + amount.str());
  if (amount == total) {
    for (auto& [id, share] : shares) share.*field = Decimal();
    return;
  }
  const auto parts = allocate_pro_rata(amount, weights);
  Decimal deficit;
  std::size_t i = 0;
  for (auto& [id, share] : shares) {
    share.*field -= parts[i++];
    if (share.*field < Decimal()) {
      deficit -= share.*field;
      share.*field = Decimal();
    }
  }
  for (auto& [id, share] : shares) {
    if (deficit.is_zero()) break;
    const Decimal take = std::min(deficit, share.*field);
    share.*field -= take;
    deficit -= take;
  }
}

}  // namespace

TokenLedger::TokenLedger(TokenConfig config) : config_(std::move(config)) {
  if (!config_.supply_cap.is_positive()) throw Error(ErrorCode::InvalidArgument, "supply cap must be positive");
  if (config_.slash_burn_fraction.is_negative() || config_.slash_burn_fraction > Decimal(1))
    throw Error(ErrorCode::InvalidArgument, "slash_burn_fraction must lie in [0, 1]");
  if (config_.seat_discount.is_negative() || config_.seat_discount > Decimal(1))
    throw Error(ErrorCode::InvalidArgument, "seat_discount must lie in [0, 1]");
  if (config_.yield_fraction.is_negative() || config_.yield_fraction > Decimal(1))
    throw Error(ErrorCode::InvalidArgument, "yield_fraction must lie in [0, 1]");
  open(config_.treasury);
}

void TokenLedger::open(const AccountId& id) { holdings_.try_emplace(id); }

const TokenHolding& TokenLedger::holding(const AccountId& id) const {
  auto it = holdings_.find(id);
  if (it == holdings_.end()) throw Error(ErrorCode::UnknownAccount, "no token holding for '" + id + "'");
  return it->second;
}

TokenHolding& TokenLedger::mutable_holding(const AccountId& id) {
  auto it = holdings_.find(id);
  if (it == holdings_.end()) throw Error(ErrorCode::UnknownAccount, "no token holding for '" + id + "'");
  return it->second;
}

void TokenLedger::issue(Decimal amount) {
  if (amount.is_negative()) throw Error(ErrorCode::InvalidArgument, "cannot issue a negative amount");
  if (total_supply() + amount > config_.supply_cap)
    throw Error(ErrorCode::CapExceeded, "issuing " + amount.str() + " would exceed cap " + config_.supply_cap.str());
  mutable_holding(config_.treasury).balance += amount;
  cumulative_issued_ += amount;
}

void TokenLedger::transfer(const AccountId& from, const AccountId& to, Decimal amount) {
  if (amount.is_negative()) throw Error(ErrorCode::InvalidArgument, "cannot transfer a negative amount");
  auto& src = mutable_holding(from);
  auto& dst = mutable_holding(to);
  if (src.balance < amount) throw Error(ErrorCode::Insufficient, from + " holds " + src.balance.str());
  src.balance -= amount;
  dst.balance += amount;
}

void TokenLedger::stake(const AccountId& id, Decimal amount) {
  if (amount.is_negative()) throw Error(ErrorCode::InvalidArgument, "cannot stake a negative amount");
  auto& h = mutable_holding(id);
  if (h.balance < amount) throw Error(ErrorCode::Insufficient, id + " balance " + h.balance.str() + " < " + amount.str());
  h.balance -= amount;
  h.staked += amount;
}

void TokenLedger::unstake(const AccountId& id, Decimal amount) {
  if (amount.is_negative()) throw Error(ErrorCode::InvalidArgument, "cannot unstake a negative amount");
  auto& h = mutable_holding(id);
  if (h.staked < amount) throw Error(ErrorCode::Insufficient, id + " staked " + h.staked.str() + " < " + amount.str());
  if (h.staked - amount < h.locked)
    throw Error(ErrorCode::LockedByObligations, id + " has " + h.locked.str() + " locked by open obligations");
  h.staked -= amount;
  h.balance += amount;
}

void TokenLedger::set_locked(const AccountId& id, Decimal amount) {
  if (amount.is_negative()) throw Error(ErrorCode::InvalidArgument, "locked amount must be >= 0");
  mutable_holding(id).locked = amount;
}

SlashRecord TokenLedger::slash(const AccountId& id, Decimal amount, const std::string& recipient) {
  if (amount.is_negative()) throw Error(ErrorCode::InvalidArgument, "cannot slash a negative amount");
  auto& h = mutable_holding(id);
  if (amount > h.staked) throw Error(ErrorCode::ExceedsStake, "slash " + amount.str() + " exceeds stake " + h.staked.str());
  SlashRecord rec{id, amount, Decimal(), Decimal(), recipient};
  if (amount.is_zero()) return rec;
  if (recipient != kFundRecipient) mutable_holding(recipient);  // validates before mutating
  rec.burned = amount * config_.slash_burn_fraction;
  rec.transferred = amount - rec.burned;
  h.staked -= amount;
  h.locked = std::min(h.locked, h.staked);
  cumulative_burned_ += rec.burned;
  if (recipient == kFundRecipient) {
    fund_receive_tokens(rec.transferred);
  } else {
    mutable_holding(recipient).balance += rec.transferred;
  }
  return rec;
}

bool TokenLedger::has_seat(const AccountId& id) const {
  auto it = holdings_.find(id);
  return it != holdings_.end() && it->second.staked >= config_.seat_threshold;
}

FeeRecord TokenLedger::charge_fee(const AccountId& id, Decimal notional) {
  FeeRecord rec;
  rec.account_id = id;
  rec.notional = notional;
  rec.seat = has_seat(id);
  Decimal fee = Decimal::mul_div(abs(notional), config_.fee_bps, kBpsDenominator);
  if (rec.seat) fee -= fee * config_.seat_discount;
  rec.fee = fee;
  fee_pool_ += fee;
  if (fee.is_positive() && config_.burn_bps.is_positive()) {
    const Decimal burn_value = Decimal::mul_div(fee, config_.burn_bps, kBpsDenominator);
    auto& treasury = mutable_holding(config_.treasury);
    const Decimal tokens = std::min(burn_value / token_mark_, treasury.balance);
    treasury.balance -= tokens;
    cumulative_burned_ += tokens;
    rec.burned_tokens = tokens;
  }
  return rec;
}

Decimal TokenLedger::performance_burn(const AccountId& id, std::int64_t missed_deliveries) {
  if (missed_deliveries < 0) throw Error(ErrorCode::InvalidArgument, "missed deliveries must be >= 0");
  auto& h = mutable_holding(id);
  const Decimal burn = std::min(config_.perf_burn_rate * Decimal(missed_deliveries), h.staked);
  h.staked -= burn;
  h.locked = std::min(h.locked, h.staked);
  cumulative_burned_ += burn;
  return burn;
}

std::vector<YieldTransfer> TokenLedger::distribute_yield(const std::map<AccountId, int>& reputations) {
  std::vector<YieldTransfer> out;
  const Decimal amount = fee_pool_ * config_.yield_fraction;
  if (!amount.is_positive() || fund_.shares.empty()) return out;
  std::vector<Decimal> weights;
  std::vector<AccountId> ids;
  for (const auto& [id, share] : fund_.shares) {
    Decimal w = share.stable + share.tokens * token_mark_;
    if (config_.reputation_yield_bonus) {
      auto it = reputations.find(id);
      const int rep = it == reputations.end() ? 0 : it->second;
      w = w + Decimal::mul_div(w, Decimal(rep), Decimal(100));
    }
    weights.push_back(w);
    ids.push_back(id);
  }
  Decimal weight_total;
  for (auto w : weights) weight_total += w;
  if (!weight_total.is_positive()) return out;
  const auto parts = allocate_pro_rata(amount, weights);
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (!parts[i].is_zero()) out.push_back({ids[i], parts[i]});
  fee_pool_ -= amount;
  return out;
}

void TokenLedger::fund_contribute_stable(const AccountId& contributor, Decimal amount) {
  if (amount.is_negative()) throw Error(ErrorCode::InvalidArgument, "contribution must be >= 0");
  fund_.stable_balance += amount;
  fund_.shares[contributor].stable += amount;
}

void TokenLedger::fund_contribute_tokens(const AccountId& contributor, Decimal amount) {
  if (amount.is_negative()) throw Error(ErrorCode::InvalidArgument, "contribution must be >= 0");
  auto& h = mutable_holding(contributor);
  if (h.balance < amount) throw Error(ErrorCode::Insufficient, contributor + " balance " + h.balance.str());
  h.balance -= amount;
  fund_.token_balance += amount;
  fund_.shares[contributor].tokens += amount;
}

Decimal TokenLedger::fund_pay_stable(Decimal amount) {
  if (amount.is_negative()) throw Error(ErrorCode::InvalidArgument, "payment must be >= 0");
  const Decimal paid = std::min(amount, fund_.stable_balance);
  debit_shares(fund_.shares, paid, &FundShare::stable);
  fund_.stable_balance -= paid;
  return paid;
}

void TokenLedger::fund_receive_tokens(Decimal amount) {
  if (amount.is_zero()) return;
  std::vector<Decimal> weights;
  Decimal total;
  for (const auto& [id, share] : fund_.shares) {
    weights.push_back(share.stable + share.tokens);
    total += share.stable + share.tokens;
  }
  if (fund_.shares.empty() || total.is_zero()) {
    fund_.shares[config_.treasury].tokens += amount;
  } else {
    const auto parts = allocate_pro_rata(amount, weights);
    std::size_t i = 0;
    for (auto& [id, share] : fund_.shares) share.tokens += parts[i++];
  }
  fund_.token_balance += amount;
}

void TokenLedger::set_token_mark(Decimal mark) {
  if (!mark.is_positive()) throw Error(ErrorCode::InvalidArgument, "token mark must be positive");
  token_mark_ = mark;
}

Decimal TokenLedger::total_supply() const {
  Decimal total = fund_.token_balance;
  for (const auto& [id, h] : holdings_) total += h.balance + h.staked;
  return total;
}

SupplyCheck TokenLedger::check() const {
  SupplyCheck c;
  c.cumulative_issued = cumulative_issued_;
  c.total_supply = total_supply();
  c.cumulative_burned = cumulative_burned_;
  c.supply_cap = config_.supply_cap;
  Decimal share_tokens;
  for (const auto& [id, s] : fund_.shares) share_tokens += s.tokens;
  c.identity_holds = c.cumulative_issued == c.total_supply + c.cumulative_burned && share_tokens == fund_.token_balance;
  c.within_cap = c.total_supply <= c.supply_cap;
  return c;
}

}  // namespace gcx
