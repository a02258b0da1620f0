#include <functional>

#include "gcx/error.hpp"
#include "gcx/sim.hpp"

namespace gcx {
namespace {

constexpr SimTime kFutureExpiry = 30 * kDay;
constexpr SimTime kOptionExpiry = 28 * kDay;
const Decimal kF0{10};
constexpr double kOptionVol = 0.6;

InstrumentSpec spot_spec() {
  InstrumentSpec s;
  s.id = "CH-SPOT";
  s.kind = InstrumentKind::spot;
  return s;
}

InstrumentSpec future_spec(const InstrumentId& id, SimTime expiry) {
  InstrumentSpec s;
  s.id = id;
  s.kind = InstrumentKind::future;
  s.contract_size = Decimal(10);
  s.expiry = expiry;
  return s;
}

InstrumentSpec option_spec(InstrumentKind kind, Decimal strike) {
  InstrumentSpec s;
  s.kind = kind;
  s.id = std::string(kind == InstrumentKind::call_option ? "CH-F30-C" : "CH-F30-P") + strike.str();
  s.contract_size = Decimal(10);
  s.expiry = kOptionExpiry;
  s.strike = strike;
  s.underlying = "CH-F30";
  return s;
}

SystemProfile profile(const std::string& provider, std::int64_t tflops) {
  SystemProfile p;
  p.provider_id = provider;
  p.measured_performance = Decimal(tflops) * Decimal(1'000'000'000'000LL);
  p.uptime_pct = Decimal::parse("99.95");
  return p;
}

AccountSetup account(const AccountId& id, AccountRole role, std::optional<AccountId> guarantor, Decimal stable) {
  AccountSetup a;
  a.id = id;
  a.role = role;
  a.guarantor = std::move(guarantor);
  a.stable = stable;
  return a;
}

// Spot, the 30-day future, guarantor G1 with the insurance fund, a spot
// market and a utility.
Scenario base(const std::string& name, const std::string& description) {
  Scenario s;
  s.name = name;
  s.description = description;
  s.seed = 1;
  Genesis& g = s.genesis;
  g.instruments = {spot_spec(), future_spec("CH-F30", kFutureExpiry)};
  g.marks = {{"CH-SPOT", kF0}, {"CH-F30", kF0}};
  g.spot_instrument = "CH-SPOT";
  g.token_issue = Decimal(1'000'000);

  AccountSetup g1 = account("G1", AccountRole::guarantor, std::nullopt, Decimal(110'000));
  g1.tokens = Decimal(20'000);
  g1.staked = Decimal(5'000);
  g1.fund_tokens = Decimal(10'000);
  g1.fund_stable = Decimal(10'000);
  g.accounts.push_back(g1);
  g.accounts.push_back(account("spot_market", AccountRole::external, std::nullopt, Decimal(1'000'000)));
  g.accounts.push_back(account("utility", AccountRole::external, std::nullopt, Decimal()));
  return s;
}

AccountSetup producer(const AccountId& id, Decimal stable) {
  AccountSetup a = account(id, AccountRole::hedger, "G1", stable);
  a.tokens = Decimal(2'000);
  a.staked = Decimal(2'000);
  a.profile = profile(id + "-dc", 10);
  return a;
}

AccountSetup market_maker() {
  AccountSetup a = account("mm", AccountRole::market_maker, "G1", Decimal(50'000));
  a.tokens = Decimal(2'000);
  a.staked = Decimal(2'000);
  a.profile = profile("mm-dc", 10);
  return a;
}

void add_options(Scenario& s, std::initializer_list<std::pair<InstrumentKind, Decimal>> list) {
  for (const auto& [kind, strike] : list) {
    auto spec = option_spec(kind, strike);
    s.genesis.vols[spec.id] = kOptionVol;
    s.genesis.instruments.push_back(spec);
  }
}

void act(Scenario& s, SimTime t, CommandBody body) { s.actions.push_back(ScenarioAction{Command{t, std::move(body)}}); }

void expect(Scenario& s, const std::string& name, const std::string& metric, const std::string& op, json value) {
  s.assertions.push_back(Assertion{name, metric, op, std::move(value)});
}

void common_checks(Scenario& s) {
  expect(s, "value conserved", "conservation.holds", "eq", true);
  expect(s, "token supply identity", "supply.identity_holds", "eq", true);
  expect(s, "no supply violations", "supply.violations", "eq", 0);
  expect(s, "put-call parity on every quote", "parity.violations", "eq", 0);
}

PricePath gbm(std::vector<InstrumentId> targets, double vol) {
  PricePath p;
  p.kind = PathKind::gbm;
  p.targets = std::move(targets);
  p.vol = vol;
  p.step = kDay;
  return p;
}

PricePath explicit_path(std::vector<InstrumentId> targets, std::vector<std::pair<SimTime, Decimal>> points) {
  PricePath p;
  p.kind = PathKind::explicit_points;
  p.targets = std::move(targets);
  p.points = std::move(points);
  return p;
}

QuotePair model_quote(Decimal strike) {
  return quote_pair(kF0, strike, kOptionVol, years_between(0, kOptionExpiry), Decimal::parse("0.01"));
}

Scenario alice_futures_hedge() {
  Scenario s = base("alice_futures_hedge", "Consumer locks in 100 CH at the 30-day futures price and takes delivery.");
  s.genesis.accounts.push_back(account("alice", AccountRole::hedger, "G1", Decimal(20'000)));
  s.genesis.accounts.push_back(producer("bob", Decimal(20'000)));
  s.paths = {gbm({"CH-SPOT", "CH-F30"}, 0.8)};
  act(s, 0, PlaceOrder{"bob", "CH-F30", Side::sell, kF0, 10, TimeInForce::resting});
  act(s, 0, PlaceOrder{"alice", "CH-F30", Side::buy, kF0, 10, TimeInForce::resting});
  expect(s, "alice pays the futures price per CH", "accounts.alice.effective_cost_per_ch", "eq", "10");
  expect(s, "bob earns the futures price per CH", "accounts.bob.effective_revenue_per_ch", "eq", "10");
  expect(s, "alice received 100 CH", "accounts.alice.ch_received", "eq", "100");
  expect(s, "one delivery", "obligation_counts.delivered", "eq", 1);
  common_checks(s);
  return s;
}

Scenario alice_put_floor() {
  Scenario s = base("alice_put_floor",
                    "Consumer holds futures plus puts; when prices fall the puts unwind the futures and the loss "
                    "stops at the premium.");
  const Decimal k{10};
  add_options(s, {{InstrumentKind::call_option, k}, {InstrumentKind::put_option, k}});
  s.genesis.accounts.push_back(account("alice", AccountRole::hedger, "G1", Decimal(20'000)));
  s.genesis.accounts.push_back(producer("bob", Decimal(20'000)));
  s.genesis.accounts.push_back(market_maker());
  s.paths = {explicit_path({"CH-SPOT", "CH-F30"}, {{0, kF0}, {10 * kDay, Decimal(8)}, {20 * kDay, Decimal(6)}})};
  act(s, 0, PlaceOrder{"bob", "CH-F30", Side::sell, kF0, 10, TimeInForce::resting});
  act(s, 0, PlaceOrder{"alice", "CH-F30", Side::buy, kF0, 10, TimeInForce::resting});
  act(s, 0, OtcTrade{"alice", "mm", "CH-F30-P10", std::nullopt, 10});
  const Decimal premium = model_quote(k).put * Decimal(100);
  expect(s, "alice loses exactly the put premium", "accounts.alice.cash_pnl", "eq", (-premium).str());
  expect(s, "alice ends flat", "accounts.alice.ch_received", "eq", "0");
  expect(s, "mm takes the delivery", "accounts.mm.ch_received", "eq", "100");
  common_checks(s);
  return s;
}

Scenario alice_straddle() {
  Scenario s = base("alice_straddle",
                    "Consumer buys a call and a put at the money; prices rise, the call is exercised into a long "
                    "future and she takes delivery at the strike.");
  const Decimal k{10};
  add_options(s, {{InstrumentKind::call_option, k}, {InstrumentKind::put_option, k}});
  s.genesis.accounts.push_back(account("alice", AccountRole::hedger, "G1", Decimal(20'000)));
  s.genesis.accounts.push_back(market_maker());
  s.paths = {explicit_path({"CH-SPOT", "CH-F30"}, {{0, kF0}, {10 * kDay, Decimal(12)}, {20 * kDay, Decimal(14)}})};
  act(s, 0, OtcTrade{"alice", "mm", "CH-F30-C10", std::nullopt, 10});
  act(s, 0, OtcTrade{"alice", "mm", "CH-F30-P10", std::nullopt, 10});
  const auto q = model_quote(k);
  expect(s, "alice pays strike plus both premiums per CH", "accounts.alice.effective_cost_per_ch", "eq",
         (k + q.call + q.put).str());
  expect(s, "alice received 100 CH", "accounts.alice.ch_received", "eq", "100");
  common_checks(s);
  return s;
}

Scenario bob_producer_hedge() {
  Scenario s = base("bob_producer_hedge", "Producer sells 100 CH forward and delivers at expiry.");
  s.genesis.accounts.push_back(producer("bob", Decimal(20'000)));
  s.genesis.accounts.push_back(market_maker());
  s.seed = 7;
  s.paths = {gbm({"CH-SPOT", "CH-F30"}, 0.8)};
  act(s, 0, PlaceOrder{"mm", "CH-F30", Side::buy, kF0, 10, TimeInForce::resting});
  act(s, 0, PlaceOrder{"bob", "CH-F30", Side::sell, std::nullopt, 10, TimeInForce::immediate_or_cancel});
  expect(s, "bob earns the futures price per CH", "accounts.bob.effective_revenue_per_ch", "eq", "10");
  expect(s, "bob delivered 100 CH", "accounts.bob.ch_delivered", "eq", "100");
  expect(s, "one delivery", "obligation_counts.delivered", "eq", 1);
  common_checks(s);
  return s;
}

Scenario bob_put_protection() {
  Scenario s = base("bob_put_protection",
                    "Producer buys puts instead of selling futures; prices fall and the exercised puts let him deliver "
                    "at the strike.");
  const Decimal k{9};
  const Decimal cost{2};
  add_options(s, {{InstrumentKind::call_option, k}, {InstrumentKind::put_option, k}});
  s.genesis.accounts.push_back(producer("bob", Decimal(20'000)));
  s.genesis.accounts.push_back(market_maker());
  s.paths = {explicit_path({"CH-SPOT", "CH-F30"}, {{0, kF0}, {10 * kDay, Decimal(8)}, {20 * kDay, Decimal(6)}})};
  act(s, 0, OtcTrade{"bob", "mm", "CH-F30-P9", std::nullopt, 10});
  act(s, kFutureExpiry + 2 * kHour, Produce{"bob", Decimal(100), cost, false, "spot_market", "utility"});
  const Decimal premium = model_quote(k).put;
  expect(s, "bob nets strike minus premium minus power per CH", "accounts.bob.effective_revenue_per_ch", "eq",
         (k - premium - cost).str());
  expect(s, "bob delivered 100 CH", "accounts.bob.ch_delivered", "eq", "100");
  common_checks(s);
  return s;
}

Scenario carol_covered_calls() {
  Scenario s = base("carol_covered_calls",
                    "Datacenter sells calls against her production; prices rise above the strike and she delivers at "
                    "the strike.");
  const Decimal k{11};
  add_options(s, {{InstrumentKind::call_option, k}, {InstrumentKind::put_option, k}});
  s.genesis.accounts.push_back(account("alice", AccountRole::hedger, "G1", Decimal(20'000)));
  s.genesis.accounts.push_back(producer("carol", Decimal(20'000)));
  s.paths = {explicit_path({"CH-SPOT", "CH-F30"}, {{0, kF0}, {10 * kDay, Decimal(12)}})};
  act(s, 0, OtcTrade{"alice", "carol", "CH-F30-C11", std::nullopt, 10});
  act(s, kFutureExpiry + 2 * kHour, Produce{"carol", Decimal(100), Decimal(3), false, "spot_market", "utility"});
  const Decimal premium = model_quote(k).call * Decimal(100);
  // premium + min(S_T, K) * production - power
  const Decimal pnl = premium + std::min(Decimal(12), k) * Decimal(100) - Decimal(300);
  expect(s, "carol covered-call payoff", "accounts.carol.cash_pnl", "eq", pnl.str());
  common_checks(s);
  return s;
}

Scenario carol_short_strangle_with_shutdown() {
  Scenario s = base("carol_short_strangle_with_shutdown",
                    "Datacenter sells a call and a put; prices crash below the put strike and below her power cost, "
                    "so she takes delivery through the put and shuts production down.");
  const Decimal kc{12};
  const Decimal kp{8};
  const Decimal cost{5};
  add_options(s, {{InstrumentKind::call_option, kc},
                  {InstrumentKind::put_option, kc},
                  {InstrumentKind::call_option, kp},
                  {InstrumentKind::put_option, kp}});
  s.genesis.accounts.push_back(account("alice", AccountRole::hedger, "G1", Decimal(20'000)));
  s.genesis.accounts.push_back(producer("bob", Decimal(20'000)));
  s.genesis.accounts.push_back(producer("carol", Decimal(20'000)));
  s.paths = {explicit_path({"CH-SPOT", "CH-F30"}, {{0, kF0}, {10 * kDay, Decimal(6)}, {20 * kDay, Decimal(4)}})};
  act(s, 0, OtcTrade{"alice", "carol", "CH-F30-C12", std::nullopt, 10});
  act(s, 0, OtcTrade{"bob", "carol", "CH-F30-P8", std::nullopt, 10});
  act(s, kFutureExpiry + 2 * kHour, Produce{"carol", Decimal(100), cost, true, "spot_market", "utility"});
  const Decimal premiums = (model_quote(kc).call + model_quote(kp).put) * Decimal(100);
  const Decimal s_t{4};
  // Options leg plus production floored at zero by the shutdown.
  const Decimal pnl = premiums - std::max(kp - s_t, Decimal()) * Decimal(100) -
                      std::max(s_t - kc, Decimal()) * Decimal(100) + std::max(s_t - cost, Decimal()) * Decimal(100);
  expect(s, "carol strangle payoff with shutdown", "accounts.carol.value_pnl", "eq", pnl.str());
  expect(s, "carol produced nothing", "accounts.carol.ch_produced", "eq", "0");
  common_checks(s);
  return s;
}

Scenario bulk_vs_spot() {
  Scenario s = base("bulk_vs_spot",
                    "A trading firm buys bulk forward from a cloud provider and tops up in the spot market at "
                    "off-peak prices, with a perpetual leg.");
  s.genesis.config.tokens.fee_bps = Decimal(5);
  s.genesis.config.tokens.burn_bps = Decimal(2'000);
  InstrumentSpec perp;
  perp.id = "CH-PERP";
  perp.kind = InstrumentKind::perpetual;
  perp.funding_interval = 8 * kHour;
  s.genesis.instruments.push_back(perp);
  s.genesis.marks["CH-PERP"] = kF0;
  AccountSetup aws = producer("aws", Decimal(100'000));
  aws.profile = profile("aws-region", 100);
  aws.tokens = Decimal(5'000);
  aws.staked = Decimal(5'000);
  s.genesis.accounts.push_back(aws);
  AccountSetup citadel = account("citadel", AccountRole::trader, "G1", Decimal(100'000));
  citadel.tokens = Decimal(2'000);
  citadel.staked = Decimal(1'500);
  s.genesis.accounts.push_back(citadel);

  // Peak 14 / off-peak 8 every other day; the future drifts from 10 to 11.
  std::vector<std::pair<SimTime, Decimal>> spot;
  for (SimTime d = 0; d <= 30; ++d) spot.push_back({d * kDay, d % 2 == 0 ? Decimal(14) : Decimal(8)});
  spot.front().second = kF0;
  s.paths = {explicit_path({"CH-SPOT"}, spot),
             explicit_path({"CH-F30"}, {{0, kF0}, {15 * kDay, Decimal::parse("10.5")}, {30 * kDay, Decimal(11)}}),
             explicit_path({"CH-PERP"}, {{0, kF0}, {10 * kDay, Decimal::parse("10.4")}, {20 * kDay, Decimal(11)}})};
  act(s, 0, PlaceOrder{"aws", "CH-F30", Side::sell, kF0, 30, TimeInForce::resting});
  act(s, 0, PlaceOrder{"citadel", "CH-F30", Side::buy, kF0, 30, TimeInForce::resting});
  act(s, 0, OtcTrade{"citadel", "aws", "CH-PERP", std::nullopt, 5});
  // Off-peak days are odd; buy 20 CH a day at the spot mark.
  s.actions.push_back(ScenarioAction{Command{kDay + kHour, OtcTrade{"citadel", "aws", "CH-SPOT", std::nullopt, 20}},
                                     2 * kDay, 14});
  act(s, kFutureExpiry + 3 * kHour, Flatten{"citadel", "CH-PERP"});
  act(s, kFutureExpiry + 3 * kHour, Flatten{"aws", "CH-PERP"});
  act(s, kFutureExpiry + 4 * kHour, DistributeYield{});
  expect(s, "bulk CH delivered", "accounts.citadel.ch_received", "eq", "580");
  expect(s, "one delivery", "obligation_counts.delivered", "eq", 1);
  common_checks(s);
  return s;
}

Scenario default_and_waterfall() {
  Scenario s = base("default_and_waterfall",
                    "A short submits a wrong proof of delivery; the buyer is compensated from the slashed stake and "
                    "the default waterfall. A second short is liquidated on a price spike.");
  Genesis& g = s.genesis;
  // Small insurance fund so the waterfall reaches the haircut layer.
  g.accounts[0].fund_stable = Decimal(300);
  AccountSetup g2 = account("G2", AccountRole::guarantor, std::nullopt, Decimal(50));
  g2.tokens = Decimal(110);
  g2.staked = Decimal(10);
  g2.fund_tokens = Decimal(100);
  g.accounts.push_back(g2);
  AccountSetup dave = account("dave", AccountRole::hedger, "G2", Decimal(600));
  dave.tokens = Decimal(20);
  dave.staked = Decimal(20);
  dave.profile = profile("dave-dc", 10);
  g.accounts.push_back(dave);
  g.accounts.push_back(account("alice", AccountRole::hedger, "G1", Decimal(20'000)));
  g.accounts.push_back(account("eve", AccountRole::trader, "G1", Decimal(150)));
  g.accounts.push_back(market_maker());
  s.behaviors["dave"] = DeliveryBehavior::wrong_digest;
  s.paths = {explicit_path({"CH-SPOT", "CH-F30"},
                           {{0, kF0}, {5 * kDay, Decimal(14)}, {10 * kDay, kF0}})};
  act(s, 0, PlaceOrder{"dave", "CH-F30", Side::sell, kF0, 10, TimeInForce::resting});
  act(s, 0, PlaceOrder{"alice", "CH-F30", Side::buy, kF0, 10, TimeInForce::resting});
  act(s, 0, PlaceOrder{"mm", "CH-F30", Side::buy, kF0, 5, TimeInForce::resting});
  act(s, 0, PlaceOrder{"eve", "CH-F30", Side::sell, std::nullopt, 5, TimeInForce::immediate_or_cancel});
  act(s, 0, PlaceOrder{"mm", "CH-F30", Side::sell, Decimal(15), 5, TimeInForce::resting});
  expect(s, "one compensated obligation", "obligation_counts.compensated", "eq", 1);
  expect(s, "waterfall layers sum to shortfall", "waterfalls_sum_to_shortfall", "eq", true);
  expect(s, "eve liquidated", "liquidations.0.account", "eq", "eve");
  expect(s, "dave slashed", "slashes.0.account", "eq", "dave");
  common_checks(s);
  return s;
}

const std::vector<std::pair<std::string, std::function<Scenario()>>>& registry() {
  static const std::vector<std::pair<std::string, std::function<Scenario()>>> r{
      {"alice_futures_hedge", alice_futures_hedge},
      {"alice_put_floor", alice_put_floor},
      {"alice_straddle", alice_straddle},
      {"bob_producer_hedge", bob_producer_hedge},
      {"bob_put_protection", bob_put_protection},
      {"carol_covered_calls", carol_covered_calls},
      {"carol_short_strangle_with_shutdown", carol_short_strangle_with_shutdown},
      {"bulk_vs_spot", bulk_vs_spot},
      {"default_and_waterfall", default_and_waterfall},
  };
  return r;
}

}  // namespace

std::vector<std::string> scenario_names() {
  std::vector<std::string> names;
  for (const auto& [n, f] : registry()) names.push_back(n);
  return names;
}

Scenario library_scenario(const std::string& name) {
  for (const auto& [n, f] : registry())
    if (n == name) {
      Scenario s = f();
      validate_scenario(s);
      return s;
    }
  throw Error(ErrorCode::ScenarioInvalid, "no built-in scenario named '" + name + "'");
}

}  // namespace gcx
