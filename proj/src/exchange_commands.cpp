// JSON forms of the genesis block and of engine commands.

#include <array>
#include <utility>

#include "gcx/error.hpp"
#include "gcx/exchange.hpp"

namespace gcx {

void to_json(json& j, const ExchangeConfig& c) {
  j = json{{"margin", c.margin},
           {"tokens", c.tokens},
           {"reputation",
            {{"delivery_success", c.reputation.delivery_success},
             {"delivery_failure", c.reputation.delivery_failure},
             {"liquidation", c.reputation.liquidation},
             {"initial", c.reputation.initial}}},
           {"reference_system", c.reference},
           {"insurance_fraction", c.insurance_fraction},
           {"verification_lead", c.verification_lead},
           {"delivery_window", c.delivery_window},
           {"funding_coefficient", c.funding_coefficient},
           {"task_iterations", c.task_iterations},
           {"task_seed", c.task_seed}};
}

void from_json(const json& j, ExchangeConfig& c) {
  if (j.contains("margin")) c.margin = j.at("margin").get<MarginParams>();
  if (j.contains("tokens")) c.tokens = j.at("tokens").get<TokenConfig>();
  if (j.contains("reputation")) {
    const auto& r = j.at("reputation");
    c.reputation.delivery_success = get_or<int>(r, "delivery_success", c.reputation.delivery_success);
    c.reputation.delivery_failure = get_or<int>(r, "delivery_failure", c.reputation.delivery_failure);
    c.reputation.liquidation = get_or<int>(r, "liquidation", c.reputation.liquidation);
    c.reputation.initial = get_or<int>(r, "initial", c.reputation.initial);
  }
  if (j.contains("reference_system")) c.reference = j.at("reference_system").get<ReferenceSystem>();
  if (j.contains("insurance_fraction")) c.insurance_fraction = decimal_from_json(j.at("insurance_fraction"));
  c.verification_lead = get_or<SimTime>(j, "verification_lead", c.verification_lead);
  c.delivery_window = get_or<SimTime>(j, "delivery_window", c.delivery_window);
  if (j.contains("funding_coefficient")) c.funding_coefficient = decimal_from_json(j.at("funding_coefficient"));
  c.task_iterations = get_or<std::uint64_t>(j, "task_iterations", c.task_iterations);
  c.task_seed = get_or<std::uint64_t>(j, "task_seed", c.task_seed);
  if (c.verification_lead < 0 || c.delivery_window <= 0)
    throw Error(ErrorCode::InvalidArgument, "verification_lead must be >= 0 and delivery_window > 0");
}

void to_json(json& j, const Genesis& g) {
  json accounts = json::array();
  for (const auto& a : g.accounts) {
    json e{{"id", a.id},
           {"role", std::string(to_string(a.role))},
           {"stable", a.stable},
           {"tokens", a.tokens},
           {"staked", a.staked},
           {"fund_stable", a.fund_stable},
           {"fund_tokens", a.fund_tokens}};
    if (a.guarantor) e["guarantor"] = *a.guarantor;
    if (a.profile) e["profile"] = *a.profile;
    accounts.push_back(std::move(e));
  }
  j = json{{"config", g.config},
           {"instruments", g.instruments},
           {"marks", g.marks},
           {"vols", g.vols},
           {"spot_instrument", g.spot_instrument},
           {"token_issue", g.token_issue},
           {"token_mark", g.token_mark},
           {"accounts", accounts}};
}

void from_json(const json& j, Genesis& g) {
  g.config = get_or<json>(j, "config", json::object()).get<ExchangeConfig>();
  g.instruments = get_or<std::vector<InstrumentSpec>>(j, "instruments", {});
  g.marks.clear();
  const json marks = get_or<json>(j, "marks", json::object());
  for (const auto& [k, v] : marks.items()) g.marks[k] = decimal_from_json(v);
  g.vols = get_or<std::map<InstrumentId, double>>(j, "vols", {});
  g.spot_instrument = get_or<std::string>(j, "spot_instrument", "");
  g.token_issue = get_or<Decimal>(j, "token_issue", Decimal());
  g.token_mark = get_or<Decimal>(j, "token_mark", Decimal(1));
  g.accounts.clear();
  for (const auto& e : get_or<json>(j, "accounts", json::array())) {
    AccountSetup a;
    a.id = get_required<std::string>(e, "id");
    a.role = parse_account_role(get_or<std::string>(e, "role", "trader"));
    a.guarantor = get_optional<std::string>(e, "guarantor");
    a.stable = get_or<Decimal>(e, "stable", Decimal());
    a.tokens = get_or<Decimal>(e, "tokens", Decimal());
    a.staked = get_or<Decimal>(e, "staked", Decimal());
    a.fund_stable = get_or<Decimal>(e, "fund_stable", Decimal());
    a.fund_tokens = get_or<Decimal>(e, "fund_tokens", Decimal());
    a.profile = get_optional<SystemProfile>(e, "profile");
    g.accounts.push_back(std::move(a));
  }
}

namespace {

template <typename T>
struct CommandName;
#define GCX_COMMAND_NAME(T, name) \
  template <>                     \
  struct CommandName<T> {         \
    static constexpr const char* value = name; \
  };
GCX_COMMAND_NAME(SetMark, "set_mark")
GCX_COMMAND_NAME(SetTokenMark, "set_token_mark")
GCX_COMMAND_NAME(PlaceOrder, "order")
GCX_COMMAND_NAME(CancelOrder, "cancel")
GCX_COMMAND_NAME(OtcTrade, "otc")
GCX_COMMAND_NAME(StakeTokens, "stake")
GCX_COMMAND_NAME(UnstakeTokens, "unstake")
GCX_COMMAND_NAME(IssueTokens, "issue")
GCX_COMMAND_NAME(TransferTokens, "transfer_tokens")
GCX_COMMAND_NAME(FundContribution, "fund_contribute")
GCX_COMMAND_NAME(ExerciseOption, "exercise")
GCX_COMMAND_NAME(CheckCapacity, "check_capacity")
GCX_COMMAND_NAME(ExpireOption, "expire_option")
GCX_COMMAND_NAME(ExpireFuture, "expire_future")
GCX_COMMAND_NAME(SubmitDelivery, "submit_delivery")
GCX_COMMAND_NAME(DeliveryDeadline, "delivery_deadline")
GCX_COMMAND_NAME(PerpFunding, "perp_funding")
GCX_COMMAND_NAME(Produce, "produce")
GCX_COMMAND_NAME(DistributeYield, "distribute_yield")
GCX_COMMAND_NAME(SetProfile, "set_profile")
GCX_COMMAND_NAME(PerformanceBurn, "perf_burn")
GCX_COMMAND_NAME(Flatten, "flatten")
GCX_COMMAND_NAME(QuoteOptions, "quote_options")
GCX_COMMAND_NAME(QuoteMarket, "quote_market")
#undef GCX_COMMAND_NAME

Decimal dec(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::Parse, std::string("missing field '") + key + "'");
  return decimal_from_json(j.at(key));
}

std::optional<Decimal> opt_dec(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return decimal_from_json(j.at(key));
}

std::string str(const json& j, const char* key) { return get_required<std::string>(j, key); }

void put(json& j, const SetMark& c) { j["instrument"] = c.instrument; j["price"] = c.price; }
void get(const json& j, SetMark& c) { c.instrument = str(j, "instrument"); c.price = dec(j, "price"); }

void put(json& j, const SetTokenMark& c) { j["price"] = c.price; }
void get(const json& j, SetTokenMark& c) { c.price = dec(j, "price"); }

void put(json& j, const PlaceOrder& c) {
  j["account"] = c.account;
  j["instrument"] = c.instrument;
  j["side"] = std::string(to_string(c.side));
  if (c.price) j["price"] = *c.price;
  j["quantity"] = c.quantity;
  j["time_in_force"] = std::string(to_string(c.time_in_force));
}
void get(const json& j, PlaceOrder& c) {
  c.account = str(j, "account");
  c.instrument = str(j, "instrument");
  const auto side = str(j, "side");
  if (side != "buy" && side != "sell") throw Error(ErrorCode::Parse, "side must be buy or sell");
  c.side = side == "buy" ? Side::buy : Side::sell;
  c.price = opt_dec(j, "price");
  c.quantity = get_required<std::int64_t>(j, "quantity");
  c.time_in_force = parse_time_in_force(get_or<std::string>(j, "time_in_force", "resting"));
}

void put(json& j, const CancelOrder& c) { j["account"] = c.account; j["order_id"] = c.order_id; }
void get(const json& j, CancelOrder& c) {
  c.account = str(j, "account");
  c.order_id = get_required<OrderId>(j, "order_id");
}

void put(json& j, const OtcTrade& c) {
  j["buyer"] = c.buyer;
  j["seller"] = c.seller;
  j["instrument"] = c.instrument;
  if (c.price) j["price"] = *c.price;
  j["quantity"] = c.quantity;
}
void get(const json& j, OtcTrade& c) {
  c.buyer = str(j, "buyer");
  c.seller = str(j, "seller");
  c.instrument = str(j, "instrument");
  c.price = opt_dec(j, "price");
  c.quantity = get_required<std::int64_t>(j, "quantity");
}

void put(json& j, const StakeTokens& c) { j["account"] = c.account; j["amount"] = c.amount; }
void get(const json& j, StakeTokens& c) { c.account = str(j, "account"); c.amount = dec(j, "amount"); }
void put(json& j, const UnstakeTokens& c) { j["account"] = c.account; j["amount"] = c.amount; }
void get(const json& j, UnstakeTokens& c) { c.account = str(j, "account"); c.amount = dec(j, "amount"); }
void put(json& j, const IssueTokens& c) { j["amount"] = c.amount; }
void get(const json& j, IssueTokens& c) { c.amount = dec(j, "amount"); }

void put(json& j, const TransferTokens& c) { j["from"] = c.from; j["to"] = c.to; j["amount"] = c.amount; }
void get(const json& j, TransferTokens& c) {
  c.from = str(j, "from");
  c.to = str(j, "to");
  c.amount = dec(j, "amount");
}

void put(json& j, const FundContribution& c) {
  j["account"] = c.account;
  j["stable"] = c.stable;
  j["tokens"] = c.tokens;
}
void get(const json& j, FundContribution& c) {
  c.account = str(j, "account");
  c.stable = opt_dec(j, "stable").value_or(Decimal());
  c.tokens = opt_dec(j, "tokens").value_or(Decimal());
}

void put(json& j, const ExerciseOption& c) {
  j["account"] = c.account;
  j["option"] = c.option;
  j["quantity"] = c.quantity;
}
void get(const json& j, ExerciseOption& c) {
  c.account = str(j, "account");
  c.option = str(j, "option");
  c.quantity = get_required<std::int64_t>(j, "quantity");
}

void put(json& j, const CheckCapacity& c) { j["future"] = c.future; }
void get(const json& j, CheckCapacity& c) { c.future = str(j, "future"); }
void put(json& j, const ExpireOption& c) { j["option"] = c.option; }
void get(const json& j, ExpireOption& c) { c.option = str(j, "option"); }
void put(json& j, const ExpireFuture& c) { j["future"] = c.future; }
void get(const json& j, ExpireFuture& c) { c.future = str(j, "future"); }

void put(json& j, const SubmitDelivery& c) { j["obligation"] = c.obligation; j["digest"] = c.digest; }
void get(const json& j, SubmitDelivery& c) {
  c.obligation = get_required<ObligationId>(j, "obligation");
  c.digest = str(j, "digest");
}
void put(json& j, const DeliveryDeadline& c) { j["obligation"] = c.obligation; }
void get(const json& j, DeliveryDeadline& c) { c.obligation = get_required<ObligationId>(j, "obligation"); }

void put(json& j, const PerpFunding& c) { j["perp"] = c.perp; }
void get(const json& j, PerpFunding& c) { c.perp = str(j, "perp"); }

void put(json& j, const Produce& c) {
  j["account"] = c.account;
  j["capacity"] = c.capacity;
  j["cost_per_ch"] = c.cost_per_ch;
  j["shutdown"] = c.shutdown;
  j["buyer"] = c.buyer;
  j["utility"] = c.utility;
}
void get(const json& j, Produce& c) {
  c.account = str(j, "account");
  c.capacity = dec(j, "capacity");
  c.cost_per_ch = opt_dec(j, "cost_per_ch").value_or(Decimal());
  c.shutdown = get_or<bool>(j, "shutdown", false);
  c.buyer = str(j, "buyer");
  c.utility = str(j, "utility");
}

void put(json&, const DistributeYield&) {}
void get(const json&, DistributeYield&) {}

void put(json& j, const SetProfile& c) { j["account"] = c.account; j["profile"] = c.profile; }
void get(const json& j, SetProfile& c) {
  c.account = str(j, "account");
  c.profile = get_required<SystemProfile>(j, "profile");
}

void put(json& j, const PerformanceBurn& c) { j["account"] = c.account; j["missed"] = c.missed; }
void get(const json& j, PerformanceBurn& c) {
  c.account = str(j, "account");
  c.missed = get_required<std::int64_t>(j, "missed");
}

void put(json& j, const Flatten& c) {
  j["account"] = c.account;
  if (c.instrument) j["instrument"] = *c.instrument;
}
void get(const json& j, Flatten& c) {
  c.account = str(j, "account");
  c.instrument = get_optional<std::string>(j, "instrument");
}

void put(json& j, const QuoteOptions& c) { j["underlying"] = c.underlying; }
void get(const json& j, QuoteOptions& c) { c.underlying = str(j, "underlying"); }

void put(json& j, const QuoteMarket& c) {
  j["account"] = c.account;
  j["instrument"] = c.instrument;
  j["half_spread"] = c.half_spread;
  j["quantity"] = c.quantity;
}
void get(const json& j, QuoteMarket& c) {
  c.account = str(j, "account");
  c.instrument = str(j, "instrument");
  c.half_spread = dec(j, "half_spread");
  c.quantity = get_required<std::int64_t>(j, "quantity");
}

template <std::size_t... I>
CommandBody body_from_json(const std::string& op, const json& j, std::index_sequence<I...>) {
  CommandBody body;
  bool found = false;
  const auto try_one = [&]<std::size_t K>(std::integral_constant<std::size_t, K>) {
    using T = std::variant_alternative_t<K, CommandBody>;
    if (found || op != CommandName<T>::value) return;
    T value;
    get(j, value);
    body = std::move(value);
    found = true;
  };
  (try_one(std::integral_constant<std::size_t, I>{}), ...);
  if (!found) throw Error(ErrorCode::Parse, "unknown command '" + op + "'");
  return body;
}

}  // namespace

std::string command_name(const CommandBody& body) {
  return std::visit([](const auto& c) { return std::string(CommandName<std::decay_t<decltype(c)>>::value); }, body);
}

json command_to_json(const Command& c) {
  json j{{"time", c.time}, {"op", command_name(c.body)}};
  std::visit([&](const auto& v) { put(j, v); }, c.body);
  return j;
}

Command command_from_json(const json& j) {
  Command c;
  c.time = get_required<SimTime>(j, "time");
  c.body = body_from_json(get_required<std::string>(j, "op"), j,
                          std::make_index_sequence<std::variant_size_v<CommandBody>>{});
  return c;
}

}  // namespace gcx
