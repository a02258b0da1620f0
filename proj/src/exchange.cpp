#include "gcx/exchange.hpp"

#include <algorithm>
#include <set>

#include "gcx/error.hpp"

namespace gcx {
namespace {

json decimals(const std::array<Decimal, kWaterfallLayers>& values) {
  json j = json::object();
  for (std::size_t i = 0; i < kWaterfallLayers; ++i) j[std::string(to_string(static_cast<WaterfallLayer>(i)))] = values[i];
  return j;
}

Decimal window_hours(SimTime window) { return Decimal(window) / Decimal(kHour); }

std::uint64_t task_seed_for(std::uint64_t base, ObligationId id) {
  std::uint64_t z = base ^ (id * 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  return z ^ (z >> 27);
}

}  // namespace

json record_of(const WaterfallRecord& w) {
  return json{{"type", "waterfall"},
              {"defaulter", w.defaulter},
              {"guarantor", w.guarantor},
              {"cause", w.cause},
              {"shortfall", w.shortfall},
              {"available", decimals(w.available)},
              {"drawn", decimals(w.drawn)},
              {"haircut_collected", w.haircut_collected},
              {"written_off", w.written_off}};
}

json record_of(const SlashRecord& s) {
  return json{{"type", "slash"},
              {"account", s.account_id},
              {"slashed", s.slashed},
              {"burned", s.burned},
              {"transferred", s.transferred},
              {"recipient", s.recipient}};
}

json record_of(const DeliveryObligation& o) {
  json history = json::array();
  for (auto s : o.history) history.push_back(std::string(to_string(s)));
  return json{{"id", o.obligation_id},
              {"instrument", o.instrument_id},
              {"short", o.short_account},
              {"long", o.long_account},
              {"quantity", o.quantity},
              {"grade_floor", o.grade_floor},
              {"contract_price", o.contract_price},
              {"created", o.created},
              {"deadline", o.deadline},
              {"status", std::string(to_string(o.status))},
              {"history", history},
              {"failure_reason", o.failure_reason}};
}

json record_of(const QuoteRecord& q) {
  return json{{"type", "quote"},
              {"time", q.time},
              {"underlying", q.underlying},
              {"strike", q.strike},
              {"future_price", q.future_price},
              {"call", q.call},
              {"put", q.put},
              {"parity_holds", q.parity_holds}};
}

Exchange::Exchange(const Genesis& genesis)
    : genesis_(genesis), tokens_(genesis.config.tokens), reputation_(genesis.config.reputation) {
  const auto& cfg = genesis_.config;
  cfg.margin.validate();
  cfg.reference.validate();

  for (const auto& s : genesis_.instruments) {
    if (auto v = validate(s)) throw Error(ErrorCode::InvalidInstrument, s.id + ": " + std::string(to_string(*v)));
    if (market_.instruments.contains(s.id)) throw Error(ErrorCode::InvalidInstrument, "duplicate instrument " + s.id);
    market_.instruments.emplace(s.id, s);
    book_.list_instrument(s.id, s.tick_size);
  }
  for (const auto& [id, s] : market_.instruments) {
    if (s.is_option()) {
      auto u = market_.instruments.find(*s.underlying);
      if (u == market_.instruments.end() || u->second.kind != InstrumentKind::future)
        throw Error(ErrorCode::InvalidInstrument, id + ": underlying must be a listed future");
      if (!genesis_.vols.contains(id)) throw Error(ErrorCode::MissingVol, "no volatility for option " + id);
    }
  }
  for (const auto& [id, m] : genesis_.marks) {
    if (!market_.instruments.contains(id)) throw Error(ErrorCode::UnknownInstrument, "mark for unknown " + id);
    if (m.is_negative()) throw Error(ErrorCode::InvalidArgument, "negative mark for " + id);
  }
  market_.marks = genesis_.marks;
  market_.vols = genesis_.vols;
  if (!genesis_.spot_instrument.empty()) {
    if (spec(genesis_.spot_instrument).kind != InstrumentKind::spot)
      throw Error(ErrorCode::InvalidInstrument, genesis_.spot_instrument + " is not a spot instrument");
  }

  const AccountId& treasury = cfg.tokens.treasury;
  tokens_.set_token_mark(genesis_.token_mark);
  tokens_.issue(genesis_.token_issue);
  {
    Account t;
    t.account_id = treasury;
    t.role = AccountRole::exchange;
    accounts_.emplace(treasury, t);
    profiles_[treasury];
    reputation_.register_account(treasury);
  }
  for (const auto& setup : genesis_.accounts) {
    if (setup.id.empty()) throw Error(ErrorCode::InvalidArgument, "account id must not be empty");
    if (setup.id == std::string(kFundRecipient)) throw Error(ErrorCode::InvalidArgument, "reserved account id");
    Account& a = accounts_[setup.id];
    if (setup.id == treasury) {
      if (setup.role != AccountRole::exchange) throw Error(ErrorCode::InvalidArgument, "treasury must have role exchange");
    } else if (!a.account_id.empty()) {
      throw Error(ErrorCode::InvalidArgument, "duplicate account " + setup.id);
    }
    if (setup.stable.is_negative() || setup.tokens.is_negative() || setup.staked.is_negative() ||
        setup.fund_stable.is_negative() || setup.fund_tokens.is_negative())
      throw Error(ErrorCode::InvalidArgument, setup.id + ": balances must be >= 0");
    if (setup.fund_stable > setup.stable) throw Error(ErrorCode::Insufficient, setup.id + ": fund_stable exceeds stable");
    if (setup.staked + setup.fund_tokens > setup.tokens && setup.id != treasury)
      throw Error(ErrorCode::Insufficient, setup.id + ": staked + fund_tokens exceed tokens");
    a.account_id = setup.id;
    a.role = setup.role;
    a.guarantor_id = setup.guarantor;
    a.stable_balance = setup.stable - setup.fund_stable;
    if (setup.profile) setup.profile->validate();
    profiles_[setup.id] = setup.profile;
    reputation_.register_account(setup.id);
    tokens_.open(setup.id);
    if (setup.id != treasury && setup.tokens.is_positive()) tokens_.transfer(treasury, setup.id, setup.tokens);
    if (setup.staked.is_positive()) tokens_.stake(setup.id, setup.staked);
    if (setup.fund_tokens.is_positive()) tokens_.fund_contribute_tokens(setup.id, setup.fund_tokens);
    if (setup.fund_stable.is_positive()) tokens_.fund_contribute_stable(setup.id, setup.fund_stable);
  }
  for (auto& [id, a] : accounts_) {
    if (a.guarantor_id) {
      auto g = accounts_.find(*a.guarantor_id);
      if (g == accounts_.end() || g->second.role != AccountRole::guarantor)
        throw Error(ErrorCode::UnknownAccount, id + ": guarantor '" + *a.guarantor_id + "' is not a guarantor account");
    }
    a.initial_stable = a.stable_balance;
    delivered_at_last_produce_[id] = Decimal();
  }
  initial_value_total_ = value_total();
}

const Account& Exchange::account(const AccountId& id) const {
  auto it = accounts_.find(id);
  if (it == accounts_.end()) throw Error(ErrorCode::UnknownAccount, "unknown account '" + id + "'");
  return it->second;
}

Account& Exchange::mutable_account(const AccountId& id) {
  auto it = accounts_.find(id);
  if (it == accounts_.end()) throw Error(ErrorCode::UnknownAccount, "unknown account '" + id + "'");
  return it->second;
}

const ComputeTask& Exchange::task(ObligationId id) const {
  auto it = tasks_.find(id);
  if (it == tasks_.end()) throw Error(ErrorCode::UnknownObligation, "no task for obligation " + std::to_string(id));
  return it->second;
}

const std::optional<SystemProfile>& Exchange::profile(const AccountId& id) const {
  auto it = profiles_.find(id);
  if (it == profiles_.end()) throw Error(ErrorCode::UnknownAccount, "unknown account '" + id + "'");
  return it->second;
}

Decimal Exchange::contract_mark(const InstrumentId& id) const {
  const auto& s = spec(id);
  if (!s.is_option()) return market_.mark(id);
  return market_.contract_value(id, market_.mark(*s.underlying), 1.0) / s.contract_size;
}

Decimal Exchange::equity(const AccountId& id) const {
  const Account& a = account(id);
  Decimal e = a.stable_balance;
  for (const auto& [instr, p] : a.positions) {
    if (p.net_quantity == 0) continue;
    const auto& s = spec(instr);
    if (s.is_option()) e += Decimal(p.net_quantity) * market_.contract_value(instr, market_.mark(*s.underlying), 1.0);
  }
  return e;
}

Decimal Exchange::initial_margin_of(const AccountId& id) const {
  std::vector<RiskPosition> portfolio;
  for (const auto& [instr, p] : account(id).positions)
    if (p.net_quantity != 0) portfolio.push_back({instr, p.net_quantity});
  return initial_margin(portfolio, market_, genesis_.config.margin);
}

GuarantorPool Exchange::pool(const AccountId& guarantor) const {
  const Account& g = account(guarantor);
  if (g.role != AccountRole::guarantor) throw Error(ErrorCode::NoGuarantor, guarantor + " is not a guarantor");
  GuarantorPool p;
  p.guarantor_id = guarantor;
  p.pool_collateral = g.stable_balance;
  p.pool_staked_gcx = tokens_.has(guarantor) ? tokens_.holding(guarantor).staked : Decimal();
  for (const auto& [id, a] : accounts_)
    if (a.guarantor_id == guarantor) p.customers.push_back(id);
  auto share = tokens_.fund().shares.find(guarantor);
  if (share != tokens_.fund().shares.end()) p.insurance_stake = share->second.tokens;
  return p;
}

Decimal Exchange::option_quote(const InstrumentId& option) const {
  const auto& s = spec(option);
  if (!s.is_option()) throw Error(ErrorCode::NotAnOption, option + " is not an option");
  const auto q = quote_pair(market_.mark(*s.underlying), *s.strike, market_.vol(option),
                            years_between(now_, *s.expiry), s.tick_size);
  return s.kind == InstrumentKind::call_option ? q.call : q.put;
}

Decimal Exchange::value_total() const {
  Decimal total = tokens_.fund().stable_balance + tokens_.fee_pool() - write_offs_;
  for (const auto& [id, a] : accounts_) total += a.stable_balance;
  return total;
}

std::vector<json> Exchange::apply(const Command& command) {
  if (command.time < now_)
    throw Error(ErrorCode::InvalidArgument, "command at " + std::to_string(command.time) + " precedes clock " +
                                                std::to_string(now_));
  now_ = command.time;
  market_.now = now_;
  std::vector<json> out;
  try {
    dispatch(command.body, out);
  } catch (const Error& e) {
    out.push_back(json{{"type", "rejected"},
                       {"op", command_name(command.body)},
                       {"code", std::string(to_string(e.code()))},
                       {"reason", e.what()}});
  }
  ++supply_checks_;
  const auto check = tokens_.check();
  if (!check.identity_holds || !check.within_cap) {
    ++supply_violations_;
    out.push_back(json{{"type", "supply_violation"},
                       {"issued", check.cumulative_issued},
                       {"supply", check.total_supply},
                       {"burned", check.cumulative_burned}});
  }
  for (auto& r : out)
    if (!r.contains("time")) r["time"] = now_;
  return out;
}

void Exchange::dispatch(const CommandBody& body, std::vector<json>& out) {
  std::visit([&](const auto& c) { on(c, out); }, body);
}

// ---------------------------------------------------------------- marks

void Exchange::on(const SetMark& c, std::vector<json>& out) {
  const auto& s = spec(c.instrument);
  if (s.is_option()) throw Error(ErrorCode::InvalidArgument, "options are marked by the model, not by price paths");
  if (c.price.is_negative()) throw Error(ErrorCode::InvalidArgument, "negative mark");
  auto it = market_.marks.find(c.instrument);
  if (s.is_margined_linear() && it != market_.marks.end()) {
    const Decimal move = c.price - it->second;
    for (auto& [id, a] : accounts_) {
      const auto n = a.position(c.instrument);
      if (n != 0) a.stable_balance += Decimal(n) * s.contract_size * move;
    }
  }
  market_.marks[c.instrument] = c.price;
  margin_sweep(out);
}

void Exchange::on(const SetTokenMark& c, std::vector<json>&) { tokens_.set_token_mark(c.price); }

void Exchange::margin_sweep(std::vector<json>& out) {
  std::vector<AccountId> ids;
  for (const auto& [id, a] : accounts_)
    if (a.is_customer()) ids.push_back(id);
  for (const auto& id : ids) {
    const Account& a = account(id);
    const bool has_positions = std::any_of(a.positions.begin(), a.positions.end(),
                                           [](const auto& kv) { return kv.second.net_quantity != 0; });
    if (!has_positions && !a.stable_balance.is_negative()) continue;
    const Decimal im = initial_margin_of(id);
    const Decimal mm = maintenance_margin(im, genesis_.config.margin);
    const Decimal eq = equity(id);
    const auto status = margin_check(eq, im, mm);
    if (status == MarginStatus::margin_call) {
      json r{{"type", "margin_call"}, {"account", id}, {"equity", eq}, {"initial", im}, {"maintenance", mm},
             {"time", now_}};
      margin_calls_.push_back(r);
      out.push_back(r);
    } else if (status == MarginStatus::liquidate) {
      liquidate(id, std::nullopt, "margin", out);
    }
  }
}

// ---------------------------------------------------------------- trading

void Exchange::book_fill(Account& a, const InstrumentId& id, std::int64_t signed_qty, Decimal price) {
  if (signed_qty == 0) return;
  const auto& s = spec(id);
  const Decimal q(signed_qty);
  switch (s.kind) {
    case InstrumentKind::spot: {
      a.stable_balance -= q * price * s.contract_size;
      const Decimal ch = abs(q) * s.contract_size;
      if (signed_qty > 0) a.ch_received += ch;
      else a.ch_delivered += ch;
      return;
    }
    case InstrumentKind::future:
    case InstrumentKind::perpetual:
      a.stable_balance += q * s.contract_size * (market_.mark(id) - price);
      break;
    case InstrumentKind::call_option:
    case InstrumentKind::put_option:
      a.stable_balance -= q * price * s.contract_size;
      break;
  }
  auto [it, inserted] = a.positions.try_emplace(id);
  if (inserted) {
    it->second.account_id = a.account_id;
    it->second.instrument_id = id;
  }
  it->second.apply_fill(signed_qty, price, s.contract_size);
  if (it->second.net_quantity == 0) a.positions.erase(it);
}

void Exchange::settle_trade(const Trade& t, std::vector<json>& out, const char* kind) {
  const auto& s = spec(t.instrument_id);
  if (s.is_margined_linear() && !market_.marks.contains(t.instrument_id)) market_.marks[t.instrument_id] = t.price;
  const AccountId& buyer = t.taker_side == Side::buy ? t.taker_account : t.maker_account;
  const AccountId& seller = t.taker_side == Side::buy ? t.maker_account : t.taker_account;
  Account& b = mutable_account(buyer);
  Account& se = mutable_account(seller);
  book_fill(b, t.instrument_id, t.quantity, t.price);
  book_fill(se, t.instrument_id, -t.quantity, t.price);
  const Decimal notional = t.price * Decimal(t.quantity) * s.contract_size;
  json fees = json::object();
  for (Account* a : {&b, &se}) {
    if (!a->is_customer()) continue;
    const auto fee = tokens_.charge_fee(a->account_id, notional);
    a->stable_balance -= fee.fee;
    fees[a->account_id] = fee.fee;
  }
  ++trade_count_;
  out.push_back(json{{"type", "trade"},
                     {"kind", kind},
                     {"trade_id", t.trade_id},
                     {"instrument", t.instrument_id},
                     {"price", t.price},
                     {"quantity", t.quantity},
                     {"maker", t.maker_account},
                     {"taker", t.taker_account},
                     {"buyer", buyer},
                     {"seller", seller},
                     {"maker_order_id", t.maker_order_id},
                     {"taker_order_id", t.taker_order_id},
                     {"self_trade", t.self_trade},
                     {"fees", fees},
                     {"timestamp", t.timestamp}});
}

void Exchange::execute_submit(const OrderRequest& req, std::vector<json>& out, const char* kind) {
  const auto result = book_.submit(req, now_);
  for (const auto& t : result.trades) settle_trade(t, out, kind);
  json r{{"type", "order"},
         {"order_id", result.order_id},
         {"account", req.account_id},
         {"instrument", req.instrument_id},
         {"side", std::string(to_string(req.side))},
         {"quantity", req.quantity},
         {"filled", result.filled},
         {"resting", result.resting},
         {"cancelled", result.cancelled}};
  if (req.price) r["price"] = *req.price;
  out.push_back(std::move(r));
}

Exchange::Gate Exchange::pre_trade_gate(
    const AccountId& id, const std::vector<std::pair<InstrumentId, std::pair<std::int64_t, Decimal>>>& new_fills) const {
  const Account& a = account(id);
  if (!a.guarantor_id) throw Error(ErrorCode::NoGuarantor, id + " is not onboarded to a guarantor");
  Gate gate;
  gate.equity = equity(id);

  std::vector<Order> resting = book_.open_orders(id);
  Decimal worst_requirement;
  Decimal worst_margin;
  bool first = true;
  for (int scenario = 0; scenario < 3; ++scenario) {
    std::map<InstrumentId, std::int64_t> pos;
    for (const auto& [instr, p] : a.positions) pos[instr] = p.net_quantity;
    Decimal delta;
    const auto add = [&](const InstrumentId& instr, std::int64_t q, Decimal price) {
      const auto& s = spec(instr);
      const Decimal dq(q);
      if (s.kind == InstrumentKind::spot) {
        delta -= dq * price * s.contract_size;
        return;
      }
      delta += dq * s.contract_size * (contract_mark(instr) - price);
      pos[instr] += q;
    };
    for (const auto& [instr, fill] : new_fills) add(instr, fill.first, fill.second);
    if (scenario > 0) {
      const Side side = scenario == 1 ? Side::buy : Side::sell;
      for (const auto& o : resting)
        if (o.side == side && o.price) add(o.instrument_id, sign(o.side) * o.quantity, *o.price);
    }
    std::vector<RiskPosition> portfolio;
    for (const auto& [instr, q] : pos)
      if (q != 0) portfolio.push_back({instr, q});
    const Decimal margin = initial_margin(portfolio, market_, genesis_.config.margin);
    const Decimal requirement = margin - delta;
    if (first || requirement > worst_requirement) worst_requirement = requirement;
    if (first || margin > worst_margin) worst_margin = margin;
    first = false;
  }
  gate.requirement = worst_requirement;
  if (gate.equity < gate.requirement) {
    gate.approved = false;
    gate.reason = "insufficient collateral";
    return gate;
  }

  // The guarantor's insurance stake must cover its customers' aggregate margin.
  const AccountId& g = *a.guarantor_id;
  Decimal aggregate = worst_margin;
  for (const auto& [cid, c] : accounts_)
    if (cid != id && c.guarantor_id == g && c.is_customer()) aggregate += initial_margin_of(cid);
  const Decimal required = genesis_.config.insurance_fraction * aggregate / tokens_.token_mark();
  const Decimal stake = pool(g).insurance_stake;
  if (stake < required) {
    gate.approved = false;
    gate.reason = "guarantor insurance stake " + stake.str() + " below required " + required.str();
  }
  return gate;
}

void Exchange::on(const PlaceOrder& c, std::vector<json>& out) {
  const Account& a = account(c.account);
  const auto& s = spec(c.instrument);
  if (s.expiry && now_ > *s.expiry) throw Error(ErrorCode::Expired, c.instrument + " has expired");
  OrderRequest req{c.account, c.instrument, c.side, c.price, c.quantity, c.time_in_force};
  if (gated(a)) {
    std::vector<std::pair<InstrumentId, std::pair<std::int64_t, Decimal>>> fills;
    std::int64_t filled = 0;
    for (const auto& f : book_.preview(req)) {
      fills.push_back({c.instrument, {sign(c.side) * f.quantity, f.price}});
      filled += f.quantity;
    }
    if (c.price && c.time_in_force == TimeInForce::resting && filled < c.quantity)
      fills.push_back({c.instrument, {sign(c.side) * (c.quantity - filled), *c.price}});
    const Gate gate = pre_trade_gate(c.account, fills);
    if (!gate.approved) {
      out.push_back(json{{"type", "rejected"},
                         {"op", "order"},
                         {"code", "GateRejected"},
                         {"account", c.account},
                         {"instrument", c.instrument},
                         {"reason", gate.reason},
                         {"equity", gate.equity},
                         {"requirement", gate.requirement},
                         {"shortfall", std::max(gate.requirement - gate.equity, Decimal())}});
      return;
    }
  }
  execute_submit(req, out, "book");
}

void Exchange::on(const CancelOrder& c, std::vector<json>& out) {
  account(c.account);
  for (const auto& o : book_.open_orders(c.account)) {
    if (o.order_id == c.order_id) {
      const auto q = book_.cancel(c.order_id);
      out.push_back(json{{"type", "cancel"}, {"account", c.account}, {"order_id", c.order_id}, {"cancelled", q}});
      return;
    }
  }
  for (const auto& [instr, s] : market_.instruments)
    for (const auto& o : book_.open_orders_for_instrument(instr))
      if (o.order_id == c.order_id) throw Error(ErrorCode::InvalidArgument, "order belongs to another account");
  const auto q = book_.cancel(c.order_id);  // throws for ids never issued
  out.push_back(json{{"type", "cancel"}, {"account", c.account}, {"order_id", c.order_id}, {"cancelled", q}});
}

void Exchange::on(const OtcTrade& c, std::vector<json>& out) {
  if (c.buyer == c.seller) throw Error(ErrorCode::InvalidArgument, "OTC counterparties must differ");
  if (c.quantity <= 0) throw Error(ErrorCode::InvalidArgument, "OTC quantity must be positive");
  const auto& s = spec(c.instrument);
  if (s.expiry && now_ > *s.expiry) throw Error(ErrorCode::Expired, c.instrument + " has expired");
  const Decimal price = c.price ? *c.price : (s.is_option() ? option_quote(c.instrument) : market_.mark(c.instrument));
  if (!price.is_positive() && !s.is_option()) throw Error(ErrorCode::BadTick, "OTC price must be positive");
  if (price.is_negative() || !price.is_multiple_of(s.tick_size))
    throw Error(ErrorCode::BadTick, "OTC price " + price.str() + " is off the tick grid");
  for (const auto& [who, side] : {std::pair{c.buyer, Side::buy}, std::pair{c.seller, Side::sell}}) {
    const Account& a = account(who);
    if (!gated(a)) continue;
    const Gate gate = pre_trade_gate(who, {{c.instrument, {sign(side) * c.quantity, price}}});
    if (!gate.approved) {
      out.push_back(json{{"type", "rejected"},
                         {"op", "otc"},
                         {"code", "GateRejected"},
                         {"account", who},
                         {"instrument", c.instrument},
                         {"reason", gate.reason},
                         {"equity", gate.equity},
                         {"requirement", gate.requirement},
                         {"shortfall", std::max(gate.requirement - gate.equity, Decimal())}});
      return;
    }
  }
  Trade t;
  t.instrument_id = c.instrument;
  t.maker_account = c.seller;
  t.taker_account = c.buyer;
  t.taker_side = Side::buy;
  t.price = price;
  t.quantity = c.quantity;
  t.timestamp = now_;
  settle_trade(t, out, "otc");
}

void Exchange::on(const QuoteMarket& c, std::vector<json>& out) {
  const auto& s = spec(c.instrument);
  if (c.quantity <= 0 || c.half_spread.is_negative())
    throw Error(ErrorCode::InvalidArgument, "quote needs a positive quantity and a non-negative spread");
  const Decimal mid = s.is_option() ? option_quote(c.instrument) : market_.mark(c.instrument);
  const Decimal bid = (mid - c.half_spread).round_to(s.tick_size);
  const Decimal ask = (mid + c.half_spread).round_to(s.tick_size);
  if (bid.is_positive()) on(PlaceOrder{c.account, c.instrument, Side::buy, bid, c.quantity, TimeInForce::resting}, out);
  on(PlaceOrder{c.account, c.instrument, Side::sell, std::max(ask, s.tick_size), c.quantity, TimeInForce::resting},
     out);
}

// ---------------------------------------------------------------- tokens

void Exchange::on(const StakeTokens& c, std::vector<json>& out) {
  tokens_.stake(c.account, c.amount);
  out.push_back(json{{"type", "stake"}, {"account", c.account}, {"amount", c.amount}});
}

void Exchange::on(const UnstakeTokens& c, std::vector<json>& out) {
  tokens_.unstake(c.account, c.amount);
  out.push_back(json{{"type", "unstake"}, {"account", c.account}, {"amount", c.amount}});
}

void Exchange::on(const IssueTokens& c, std::vector<json>& out) {
  tokens_.issue(c.amount);
  out.push_back(json{{"type", "issue"}, {"amount", c.amount}});
}

void Exchange::on(const TransferTokens& c, std::vector<json>& out) {
  tokens_.transfer(c.from, c.to, c.amount);
  out.push_back(json{{"type", "token_transfer"}, {"from", c.from}, {"to", c.to}, {"amount", c.amount}});
}

void Exchange::on(const FundContribution& c, std::vector<json>& out) {
  Account& a = mutable_account(c.account);
  if (c.stable.is_negative() || c.tokens.is_negative()) throw Error(ErrorCode::InvalidArgument, "negative contribution");
  if (a.stable_balance < c.stable) throw Error(ErrorCode::Insufficient, c.account + " lacks stable for contribution");
  if (tokens_.holding(c.account).balance < c.tokens)
    throw Error(ErrorCode::Insufficient, c.account + " lacks tokens for contribution");
  tokens_.fund_contribute_tokens(c.account, c.tokens);
  tokens_.fund_contribute_stable(c.account, c.stable);
  a.stable_balance -= c.stable;
  out.push_back(json{{"type", "fund_contribution"}, {"account", c.account}, {"stable", c.stable}, {"tokens", c.tokens}});
}

void Exchange::on(const DistributeYield&, std::vector<json>& out) {
  std::map<AccountId, int> reps;
  for (const auto& [id, s] : reputation_.all()) reps[id] = s.score;
  for (const auto& [id, share] : tokens_.fund().shares) account(id);
  const auto transfers = tokens_.distribute_yield(reps);
  json list = json::array();
  for (const auto& t : transfers) {
    mutable_account(t.account_id).stable_balance += t.amount;
    list.push_back(json{{"account", t.account_id}, {"amount", t.amount}});
  }
  out.push_back(json{{"type", "yield"}, {"transfers", list}, {"fee_pool_after", tokens_.fee_pool()}});
}

void Exchange::on(const PerformanceBurn& c, std::vector<json>& out) {
  const Decimal burned = tokens_.performance_burn(c.account, c.missed);
  out.push_back(json{{"type", "performance_burn"}, {"account", c.account}, {"missed", c.missed}, {"burned", burned}});
}

void Exchange::on(const SetProfile& c, std::vector<json>& out) {
  account(c.account);
  c.profile.validate();
  profiles_[c.account] = c.profile;
  out.push_back(json{{"type", "profile"}, {"account", c.account}, {"grade", grade(c.profile, genesis_.config.reference).grade}});
}

// ---------------------------------------------------------------- options

void Exchange::exercise(const AccountId& holder, const InstrumentId& option, std::int64_t qty, std::vector<json>& out) {
  const auto& s = spec(option);
  Account& h = mutable_account(holder);
  Position current;
  if (auto it = h.positions.find(option); it != h.positions.end()) current = it->second;
  const ExerciseResult r = exercise_option(s, current, qty, now_);
  if (qty == 0) return;
  const Decimal f = market_.mark(r.underlying);
  const Decimal intrinsic = std::max(s.kind == InstrumentKind::call_option ? f - r.entry_price : r.entry_price - f,
                                     Decimal());
  const auto close_without_cash = [&](Account& a, std::int64_t delta) {
    auto it = a.positions.find(option);
    it->second.apply_fill(delta, intrinsic, s.contract_size);
    if (it->second.net_quantity == 0) a.positions.erase(it);
  };

  // Futures per option contract; sizes may differ between option and future.
  const auto& fut = spec(r.underlying);
  const auto future_qty = [&](std::int64_t option_qty) {
    const Decimal contracts = Decimal(option_qty) * s.contract_size / fut.contract_size;
    if (!contracts.is_multiple_of(Decimal(1)))
      throw Error(ErrorCode::InvalidInstrument, option + " size is not a whole number of underlying contracts");
    return contracts.to_integer();
  };
  const std::int64_t direction = r.future_delta >= 0 ? 1 : -1;

  std::vector<std::pair<std::int64_t, AccountId>> shorts;
  for (const auto& [id, a] : accounts_) {
    const auto n = a.position(option);
    if (n < 0) shorts.push_back({-n, id});
  }
  std::sort(shorts.begin(), shorts.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  std::int64_t assignable = 0;
  for (const auto& sh : shorts) assignable += sh.first;
  if (assignable < qty) throw Error(ErrorCode::BadState, "open short interest below exercised quantity");
  future_qty(qty);

  close_without_cash(h, -qty);
  book_fill(h, r.underlying, direction * future_qty(qty), r.entry_price);
  json assigned = json::array();
  std::int64_t remaining = qty;
  for (const auto& [held, id] : shorts) {
    if (remaining == 0) break;
    const std::int64_t take = std::min(held, remaining);
    Account& w = mutable_account(id);
    close_without_cash(w, take);
    book_fill(w, r.underlying, -direction * future_qty(take), r.entry_price);
    assigned.push_back(json{{"account", id}, {"quantity", take}});
    remaining -= take;
  }
  out.push_back(json{{"type", "exercise"},
                     {"account", holder},
                     {"option", option},
                     {"quantity", qty},
                     {"underlying", r.underlying},
                     {"strike", r.entry_price},
                     {"underlying_mark", f},
                     {"assigned", assigned}});
}

void Exchange::on(const ExerciseOption& c, std::vector<json>& out) { exercise(c.account, c.option, c.quantity, out); }

void Exchange::on(const ExpireOption& c, std::vector<json>& out) {
  const auto& s = spec(c.option);
  if (!s.is_option()) throw Error(ErrorCode::NotAnOption, c.option + " is not an option");
  if (now_ < *s.expiry) throw Error(ErrorCode::NotExpired, c.option + " expires at " + std::to_string(*s.expiry));
  const auto cancelled = book_.cancel_all(c.option);
  const Decimal f = market_.mark(*s.underlying);
  const bool itm = s.kind == InstrumentKind::call_option ? f > *s.strike : f < *s.strike;
  std::vector<std::pair<AccountId, std::int64_t>> longs;
  for (const auto& [id, a] : accounts_)
    if (a.position(c.option) > 0) longs.push_back({id, a.position(c.option)});
  if (itm)
    for (const auto& [id, q] : longs) exercise(id, c.option, q, out);
  std::int64_t expired_worthless = 0;
  for (auto& [id, a] : accounts_) {
    auto it = a.positions.find(c.option);
    if (it == a.positions.end()) continue;
    expired_worthless += std::llabs(it->second.net_quantity);
    it->second.apply_fill(-it->second.net_quantity, Decimal(), s.contract_size);
    a.positions.erase(it);
  }
  out.push_back(json{{"type", "option_expiry"},
                     {"option", c.option},
                     {"underlying_mark", f},
                     {"in_the_money", itm},
                     {"cancelled_orders", cancelled.size()},
                     {"expired_contracts", expired_worthless}});
}

void Exchange::on(const QuoteOptions& c, std::vector<json>& out) {
  const auto& u = spec(c.underlying);
  if (u.kind != InstrumentKind::future) throw Error(ErrorCode::NotAFuture, c.underlying + " is not a future");
  const Decimal f = market_.mark(c.underlying);
  std::map<Decimal, const InstrumentSpec*> by_strike;
  for (const auto& [id, s] : market_.instruments) {
    if (!s.is_option() || *s.underlying != c.underlying || now_ > *s.expiry) continue;
    auto [it, inserted] = by_strike.try_emplace(*s.strike, &s);
    if (!inserted && s.kind == InstrumentKind::call_option) it->second = &s;
  }
  for (const auto& [strike, s] : by_strike) {
    const auto q = quote_pair(f, strike, market_.vol(s->id), years_between(now_, *s->expiry), s->tick_size);
    QuoteRecord rec{now_, c.underlying, strike, f, q.call, q.put, q.call - q.put == f - strike};
    quotes_.push_back(rec);
    out.push_back(record_of(rec));
  }
}

// ---------------------------------------------------------------- futures lifecycle

void Exchange::on(const CheckCapacity& c, std::vector<json>& out) {
  const auto& s = spec(c.future);
  if (s.kind != InstrumentKind::future) throw Error(ErrorCode::NotAFuture, c.future + " is not a future");
  std::vector<std::pair<AccountId, std::int64_t>> shorts;
  for (const auto& [id, a] : accounts_)
    if (a.is_customer() && a.position(c.future) < 0) shorts.push_back({id, -a.position(c.future)});
  for (const auto& [id, q] : shorts) {
    const Decimal ch = Decimal(q) * s.contract_size;
    const auto result = verify_capacity(ch, s.grade_floor, profiles_[id], genesis_.config.reference,
                                        window_hours(genesis_.config.delivery_window));
    out.push_back(json{{"type", "capacity_check"},
                       {"account", id},
                       {"instrument", c.future},
                       {"quantity", ch},
                       {"result", std::string(to_string(result))}});
    if (result == CapacityResult::liquidate_short) liquidate(id, c.future, "capacity", out);
  }
}

void Exchange::emit_obligation(const DeliveryObligation& ob, std::vector<json>& out) const {
  json r = record_of(ob);
  r["type"] = "obligation";
  out.push_back(std::move(r));
}

void Exchange::refresh_lock(const AccountId& id) {
  if (!tokens_.has(id)) return;
  Decimal exposure;
  for (const auto& [oid, ob] : obligations_)
    if (ob.short_account == id && !ob.terminal()) exposure += ob.contract_price * ob.quantity;
  const Decimal locked = std::min(exposure / tokens_.token_mark(), tokens_.holding(id).staked);
  tokens_.set_locked(id, locked);
}

void Exchange::on(const ExpireFuture& c, std::vector<json>& out) {
  const auto& s = spec(c.future);
  if (s.kind != InstrumentKind::future) throw Error(ErrorCode::NotAFuture, c.future + " is not a future");
  if (now_ < *s.expiry) throw Error(ErrorCode::NotExpired, c.future + " expires at " + std::to_string(*s.expiry));
  const Decimal spot_price = spot();
  const auto cancelled = book_.cancel_all(c.future);

  // Final variation margin: converge to spot.
  const Decimal old_mark = market_.marks.contains(c.future) ? market_.marks.at(c.future) : spot_price;
  std::vector<OpenInterest> shorts, longs;
  for (auto& [id, a] : accounts_) {
    const auto n = a.position(c.future);
    if (n == 0) continue;
    a.stable_balance += Decimal(n) * s.contract_size * (spot_price - old_mark);
    (n > 0 ? longs : shorts).push_back({id, a.guarantor_id, std::llabs(n)});
  }
  market_.marks[c.future] = spot_price;
  for (auto& [id, a] : accounts_) {
    const auto n = a.position(c.future);
    if (n != 0) book_fill(a, c.future, -n, spot_price);
  }

  json created = json::array();
  for (const auto& m : match_expiry(shorts, longs)) {
    DeliveryObligation ob;
    ob.obligation_id = next_obligation_++;
    ob.instrument_id = c.future;
    ob.short_account = m.short_account;
    ob.long_account = m.long_account;
    ob.quantity = Decimal(m.quantity) * s.contract_size;
    ob.grade_floor = s.grade_floor;
    ob.contract_price = spot_price;
    ob.created = now_;
    ob.deadline = now_ + genesis_.config.delivery_window;
    tasks_[ob.obligation_id] = make_task(ob.obligation_id, task_seed_for(genesis_.config.task_seed, ob.obligation_id),
                                         genesis_.config.task_iterations);
    const auto capacity = verify_capacity(ob.quantity, ob.grade_floor, profiles_[ob.short_account],
                                          genesis_.config.reference, window_hours(genesis_.config.delivery_window));
    if (capacity == CapacityResult::capacity_verified) {
      ob.transition(ObligationStatus::capacity_verified);
    } else {
      ob.failure_reason = "capacity";
      ob.transition(ObligationStatus::failed);
    }
    created.push_back(ob.obligation_id);
    const auto id = ob.obligation_id;
    obligations_.emplace(id, std::move(ob));
    emit_obligation(obligations_.at(id), out);
    refresh_lock(obligations_.at(id).short_account);
  }
  out.push_back(json{{"type", "future_expiry"},
                     {"future", c.future},
                     {"spot", spot_price},
                     {"cancelled_orders", cancelled.size()},
                     {"obligations", created}});
}

void Exchange::on(const SubmitDelivery& c, std::vector<json>& out) {
  auto it = obligations_.find(c.obligation);
  if (it == obligations_.end()) throw Error(ErrorCode::UnknownObligation, "unknown obligation " + std::to_string(c.obligation));
  DeliveryObligation& ob = it->second;
  if (ob.status != ObligationStatus::capacity_verified && now_ > ob.deadline)
    throw Error(ErrorCode::DeadlinePassed, "obligation " + std::to_string(ob.obligation_id) + " is past its deadline");
  const auto outcome = verify_delivery(ob, tasks_.at(ob.obligation_id), c.digest, now_);
  out.push_back(json{{"type", "delivery_submission"},
                     {"obligation", ob.obligation_id},
                     {"outcome", std::string(to_string(outcome))}});
  if (outcome == DeliveryOutcome::accepted) {
    Account& buyer = mutable_account(ob.long_account);
    Account& seller = mutable_account(ob.short_account);
    const Decimal payment = ob.contract_price * ob.quantity;
    buyer.stable_balance -= payment;
    seller.stable_balance += payment;
    buyer.ch_received += ob.quantity;
    seller.ch_delivered += ob.quantity;
    ob.transition(ObligationStatus::delivered);
    emit_obligation(ob, out);
    const auto& rep = reputation_.update(ob.short_account, ReputationEvent::delivery_success);
    out.push_back(json{{"type", "reputation"}, {"account", ob.short_account}, {"event", "delivery_success"}, {"score", rep.score}});
    refresh_lock(ob.short_account);
  } else {
    ob.failure_reason = now_ > ob.deadline ? "late" : "digest_mismatch";
    ob.transition(ObligationStatus::failed);
    emit_obligation(ob, out);
  }
}

void Exchange::on(const DeliveryDeadline& c, std::vector<json>& out) {
  auto it = obligations_.find(c.obligation);
  if (it == obligations_.end()) throw Error(ErrorCode::UnknownObligation, "unknown obligation " + std::to_string(c.obligation));
  DeliveryObligation& ob = it->second;
  if (now_ < ob.deadline) throw Error(ErrorCode::BadState, "deadline not reached");
  if (ob.status == ObligationStatus::capacity_verified) {
    ob.failure_reason = "no_delivery";
    ob.transition(ObligationStatus::failed);
    emit_obligation(ob, out);
  }
  if (ob.status == ObligationStatus::failed) compensate(ob, out);
}

Decimal Exchange::convert_stake(const AccountId& id, Decimal value, std::vector<json>& out) {
  if (!value.is_positive()) return Decimal();
  const Decimal mark = tokens_.token_mark();
  const Decimal staked = tokens_.holding(id).staked;
  const Decimal tokens = value == staked * mark ? staked : std::min(value / mark, staked);
  const auto rec = tokens_.slash(id, tokens, std::string(kFundRecipient));
  slashes_.push_back(rec);
  out.push_back(record_of(rec));
  return tokens_.fund_pay_stable(value);
}

void Exchange::compensate(DeliveryObligation& ob, std::vector<json>& out) {
  const Decimal replacement = spot() * ob.quantity;
  Account& buyer = mutable_account(ob.long_account);

  // Slash first: min(stake value, replacement cost), paid out by the fund.
  Decimal slashed_value;
  if (tokens_.has(ob.short_account)) {
    const Decimal stake_value = tokens_.holding(ob.short_account).staked * tokens_.token_mark();
    slashed_value = std::min({stake_value, replacement, tokens_.fund().stable_balance});
    const Decimal paid = convert_stake(ob.short_account, slashed_value, out);
    buyer.stable_balance += paid;
  }
  const Decimal shortfall = replacement - slashed_value;
  if (shortfall.is_positive()) run_waterfall(ob.short_account, shortfall, "delivery_failure", ob.long_account, {}, out);

  ob.transition(ObligationStatus::compensated);
  json rec = record_of(ob);
  rec["type"] = "obligation";
  rec["replacement_cost"] = replacement;
  rec["slashed_value"] = slashed_value;
  out.push_back(std::move(rec));

  const auto& rep = reputation_.update(ob.short_account, ReputationEvent::delivery_failure);
  out.push_back(json{{"type", "reputation"}, {"account", ob.short_account}, {"event", "delivery_failure"}, {"score", rep.score}});
  if (tokens_.has(ob.short_account)) {
    const Decimal burned = tokens_.performance_burn(ob.short_account, 1);
    if (burned.is_positive())
      out.push_back(json{{"type", "performance_burn"}, {"account", ob.short_account}, {"missed", 1}, {"burned", burned}});
  }
  refresh_lock(ob.short_account);
}

WaterfallRecord Exchange::run_waterfall(const AccountId& defaulter, Decimal shortfall, const std::string& cause,
                                        const std::optional<AccountId>& beneficiary,
                                        const std::map<AccountId, Decimal>& winners, std::vector<json>& out) {
  Account& d = mutable_account(defaulter);
  Account* g = d.guarantor_id ? &mutable_account(*d.guarantor_id) : nullptr;
  Account* to = beneficiary ? &mutable_account(*beneficiary) : &d;
  WaterfallRecord w;
  w.defaulter = defaulter;
  w.guarantor = g ? g->account_id : "";
  w.cause = cause;
  w.shortfall = shortfall;
  Decimal remaining = shortfall;
  const Decimal mark = tokens_.token_mark();
  const auto stake_value = [&](const AccountId& id) {
    return tokens_.has(id) ? tokens_.holding(id).staked * mark : Decimal();
  };
  const auto layer = [&](WaterfallLayer l, Decimal available, auto&& draw) {
    const auto i = static_cast<std::size_t>(l);
    w.available[i] = std::max(available, Decimal());
    const Decimal take = std::min(remaining, w.available[i]);
    w.drawn[i] = take;
    if (take.is_positive()) {
      draw(take);
      to->stable_balance += take;
      remaining -= take;
    }
  };

  layer(WaterfallLayer::defaulter_collateral, d.stable_balance, [&](Decimal x) { d.stable_balance -= x; });
  layer(WaterfallLayer::defaulter_stake, std::min(stake_value(defaulter), tokens_.fund().stable_balance),
        [&](Decimal x) { convert_stake(defaulter, x, out); });
  if (g) {
    layer(WaterfallLayer::pool_collateral, g->stable_balance, [&](Decimal x) { g->stable_balance -= x; });
    layer(WaterfallLayer::pool_stake, std::min(stake_value(g->account_id), tokens_.fund().stable_balance),
          [&](Decimal x) { convert_stake(g->account_id, x, out); });
  }
  layer(WaterfallLayer::insurance_fund, tokens_.fund().stable_balance,
        [&](Decimal x) { tokens_.fund_pay_stable(x); });
  w.available[static_cast<std::size_t>(WaterfallLayer::haircut)] = remaining;
  w.drawn[static_cast<std::size_t>(WaterfallLayer::haircut)] = remaining;

  if (remaining.is_positive() && !beneficiary) {
    // Liquidation residue: haircut the winning side pro-rata, capped at what
    // each winner holds; anything still uncovered is written off.
    std::vector<AccountId> ids;
    std::vector<Decimal> weights;
    for (const auto& [id, wt] : winners) {
      ids.push_back(id);
      weights.push_back(wt);
    }
    if (!ids.empty()) {
      const auto parts = allocate_pro_rata(remaining, weights);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        Account& winner = mutable_account(ids[i]);
        const Decimal take = std::min(parts[i], std::max(winner.stable_balance, Decimal()));
        winner.stable_balance -= take;
        d.stable_balance += take;
        w.haircut_collected += take;
      }
    }
    w.written_off = remaining - w.haircut_collected;
    write_offs_ += w.written_off;
    d.stable_balance += w.written_off;
  }
  waterfalls_.push_back(w);
  out.push_back(record_of(w));
  return w;
}

void Exchange::liquidate(const AccountId& id, const std::optional<InstrumentId>& only, const std::string& cause,
                         std::vector<json>& out) {
  Account& a = mutable_account(id);
  for (const auto& o : book_.open_orders(id))
    if (!only || o.instrument_id == *only) book_.cancel(o.order_id);

  std::map<InstrumentId, std::int64_t> closing;
  for (const auto& [instr, p] : a.positions)
    if (p.net_quantity != 0 && (!only || instr == *only)) closing[instr] = p.net_quantity;

  json closed = json::array();
  for (const auto& [instr, net] : closing) {
    const Side side = net > 0 ? Side::sell : Side::buy;
    const auto result = book_.submit(OrderRequest{id, instr, side, std::nullopt, std::llabs(net),
                                                  TimeInForce::immediate_or_cancel},
                                     now_);
    for (const auto& t : result.trades) settle_trade(t, out, "liquidation");
    const std::int64_t remainder = std::llabs(net) - result.filled;
    json entry{{"instrument", instr}, {"quantity", net}, {"filled", result.filled}, {"transferred", 0}};
    if (remainder > 0 && a.guarantor_id && *a.guarantor_id != id) {
      // Unfilled remainder moves to the guarantor at the current mark.
      const Decimal price = contract_mark(instr);
      const std::int64_t q = net > 0 ? remainder : -remainder;
      book_fill(a, instr, -q, price);
      book_fill(mutable_account(*a.guarantor_id), instr, q, price);
      entry["transferred"] = remainder;
      entry["transfer_price"] = price;
    }
    closed.push_back(std::move(entry));
  }

  std::optional<WaterfallRecord> waterfall;
  if (a.stable_balance.is_negative()) {
    std::map<AccountId, Decimal> winners;
    for (const auto& [instr, net] : closing)
      for (const auto& [oid, other] : accounts_) {
        if (oid == id || !other.is_customer()) continue;
        const auto n = other.position(instr);
        if ((net > 0 && n < 0) || (net < 0 && n > 0)) winners[oid] += Decimal(std::llabs(n));
      }
    waterfall = run_waterfall(id, -a.stable_balance, "liquidation", std::nullopt, winners, out);
  }
  json rec{{"type", "liquidation"},
           {"account", id},
           {"cause", cause},
           {"positions", closed},
           {"stable_after", a.stable_balance},
           {"time", now_}};
  if (waterfall) rec["shortfall"] = waterfall->shortfall;
  liquidations_.push_back(rec);
  out.push_back(rec);
  if (a.is_customer()) {
    const auto& rep = reputation_.update(id, ReputationEvent::liquidation);
    out.push_back(json{{"type", "reputation"}, {"account", id}, {"event", "liquidation"}, {"score", rep.score}});
  }
}

void Exchange::on(const Flatten& c, std::vector<json>& out) {
  account(c.account);
  for (const auto& o : book_.open_orders(c.account))
    if (!c.instrument || o.instrument_id == *c.instrument) book_.cancel(o.order_id);
  std::map<InstrumentId, std::int64_t> closing;
  for (const auto& [instr, p] : account(c.account).positions)
    if (p.net_quantity != 0 && (!c.instrument || instr == *c.instrument)) closing[instr] = p.net_quantity;
  for (const auto& [instr, net] : closing) {
    const auto& s = spec(instr);
    if (s.expiry && now_ > *s.expiry) continue;
    const Side side = net > 0 ? Side::sell : Side::buy;
    execute_submit(OrderRequest{c.account, instr, side, std::nullopt, std::llabs(net), TimeInForce::immediate_or_cancel},
                   out, "flatten");
  }
}

// ---------------------------------------------------------------- perps, production

void Exchange::on(const PerpFunding& c, std::vector<json>& out) {
  const auto& s = spec(c.perp);
  if (s.kind != InstrumentKind::perpetual) throw Error(ErrorCode::InvalidInstrument, c.perp + " is not a perpetual");
  std::vector<Position> positions;
  for (const auto& [id, a] : accounts_)
    if (auto it = a.positions.find(c.perp); it != a.positions.end() && it->second.net_quantity != 0)
      positions.push_back(it->second);
  const Decimal m = market_.mark(c.perp);
  const Decimal index = spot();
  const auto transfers = perp_funding(s, m, index, positions, genesis_.config.funding_coefficient);
  json list = json::array();
  for (const auto& t : transfers) {
    mutable_account(t.account_id).stable_balance += t.amount;
    list.push_back(json{{"account", t.account_id}, {"amount", t.amount}});
  }
  out.push_back(json{{"type", "funding"}, {"perp", c.perp}, {"mark", m}, {"index", index}, {"transfers", list}});
}

void Exchange::on(const Produce& c, std::vector<json>& out) {
  if (c.capacity.is_negative() || c.cost_per_ch.is_negative())
    throw Error(ErrorCode::InvalidArgument, "capacity and cost must be >= 0");
  Account& a = mutable_account(c.account);
  Account& buyer = mutable_account(c.buyer);
  Account& utility = mutable_account(c.utility);
  const Decimal s = spot();
  const Decimal delivered_since = a.ch_delivered - delivered_at_last_produce_[c.account];
  json r{{"type", "production"}, {"account", c.account}, {"spot", s}};
  if (c.shutdown && s < c.cost_per_ch) {
    r["produced"] = Decimal();
    r["sold"] = Decimal();
    r["power_cost"] = Decimal();
    r["shutdown"] = true;
  } else {
    const Decimal cost = c.cost_per_ch * c.capacity;
    a.stable_balance -= cost;
    utility.stable_balance += cost;
    a.power_cost += cost;
    a.ch_produced += c.capacity;
    const Decimal sold = std::max(c.capacity - delivered_since, Decimal());
    const Decimal proceeds = s * sold;
    buyer.stable_balance -= proceeds;
    a.stable_balance += proceeds;
    a.ch_delivered += sold;
    buyer.ch_received += sold;
    r["produced"] = c.capacity;
    r["sold"] = sold;
    r["power_cost"] = cost;
    r["shutdown"] = false;
  }
  delivered_at_last_produce_[c.account] = a.ch_delivered;
  out.push_back(std::move(r));
}

// ---------------------------------------------------------------- state

json Exchange::state_json() const {
  json accounts = json::object();
  for (const auto& [id, a] : accounts_) {
    json positions = json::array();
    for (const auto& [instr, p] : a.positions) positions.push_back(p);
    accounts[id] = json{{"role", std::string(to_string(a.role))},
                        {"guarantor", a.guarantor_id ? json(*a.guarantor_id) : json(nullptr)},
                        {"stable", a.stable_balance},
                        {"initial_stable", a.initial_stable},
                        {"ch_received", a.ch_received},
                        {"ch_delivered", a.ch_delivered},
                        {"ch_produced", a.ch_produced},
                        {"power_cost", a.power_cost},
                        {"positions", positions},
                        {"reputation", reputation_.at(id).score}};
    if (const auto& p = profiles_.at(id)) accounts[id]["profile"] = *p;
  }
  json holdings = json::object();
  for (const auto& [id, h] : tokens_.holdings())
    holdings[id] = json{{"balance", h.balance}, {"staked", h.staked}, {"locked", h.locked}};
  json shares = json::object();
  for (const auto& [id, s] : tokens_.fund().shares) shares[id] = json{{"stable", s.stable}, {"tokens", s.tokens}};
  json orders = json::array();
  for (const auto& [instr, s] : market_.instruments)
    for (const auto& o : book_.open_orders_for_instrument(instr))
      orders.push_back(json{{"order_id", o.order_id},
                            {"account", o.account_id},
                            {"instrument", o.instrument_id},
                            {"side", std::string(to_string(o.side))},
                            {"price", o.price ? json(*o.price) : json(nullptr)},
                            {"quantity", o.quantity}});
  json obligations = json::array();
  for (const auto& [oid, ob] : obligations_) obligations.push_back(record_of(ob));
  return json{{"version", kEngineVersion},
              {"now", now_},
              {"accounts", accounts},
              {"marks", market_.marks},
              {"token_mark", tokens_.token_mark()},
              {"tokens",
               {{"holdings", holdings},
                {"fund", {{"stable", tokens_.fund().stable_balance}, {"tokens", tokens_.fund().token_balance}, {"shares", shares}}},
                {"fee_pool", tokens_.fee_pool()},
                {"issued", tokens_.cumulative_issued()},
                {"burned", tokens_.cumulative_burned()},
                {"supply", tokens_.total_supply()}}},
              {"orders", orders},
              {"obligations", obligations},
              {"next_order_id", book_.next_order_id()},
              {"next_trade_id", book_.next_trade_id()},
              {"next_obligation_id", next_obligation_},
              {"write_offs", write_offs_},
              {"waterfalls", waterfalls_.size()},
              {"trades", trade_count_}};
}

std::string Exchange::state_hash() const { return fnv1a_hex(state_json().dump()); }

}  // namespace gcx
