#include <gtest/gtest.h>

#include <random>

#include "gcx/exchange.hpp"
#include "oracles.hpp"

using namespace gcx;
using namespace gcx::literals;

namespace {

constexpr SimTime kExpiry = 10 * kDay;

SystemProfile producer_profile(const std::string& id) {
  return {id, Decimal(10'000'000'000'000LL), std::nullopt, "99.95"_d, {}, {}, {}};
}

AccountSetup customer(const std::string& id, Decimal stable, AccountRole role = AccountRole::trader) {
  AccountSetup a;
  a.id = id;
  a.role = role;
  a.guarantor = "G";
  a.stable = stable;
  return a;
}

Genesis base(Decimal mark = Decimal(10)) {
  Genesis g;
  InstrumentSpec spot;
  spot.id = "SPOT";
  spot.kind = InstrumentKind::spot;
  InstrumentSpec fut;
  fut.id = "F";
  fut.kind = InstrumentKind::future;
  fut.expiry = kExpiry;
  g.instruments = {spot, fut};
  g.marks = {{"SPOT", mark}, {"F", mark}};
  g.spot_instrument = "SPOT";
  g.token_issue = Decimal(1'000'000);
  AccountSetup gua;
  gua.id = "G";
  gua.role = AccountRole::guarantor;
  gua.stable = Decimal(1000);
  gua.tokens = Decimal(1000);
  gua.staked = Decimal(100);
  gua.fund_tokens = Decimal(500);
  gua.fund_stable = Decimal(500);
  g.accounts.push_back(gua);
  return g;
}

std::vector<json> apply(Exchange& ex, SimTime t, CommandBody body) { return ex.apply(Command{t, std::move(body)}); }

const json* find_type(const std::vector<json>& out, const std::string& type) {
  for (const auto& r : out)
    if (r.value("type", "") == type) return &r;
  return nullptr;
}

}  // namespace

TEST(Gate, ZeroCollateralRejectedWithShortfallEqualToMargin) {
  auto g = base(Decimal(100));
  g.accounts.push_back(customer("z", Decimal(0)));
  Exchange ex(g);
  const auto out = apply(ex, 0, PlaceOrder{"z", "F", Side::buy, Decimal(100), 1, TimeInForce::resting});
  const json* r = find_type(out, "rejected");
  ASSERT_TRUE(r);
  EXPECT_EQ((*r)["code"], "GateRejected");
  EXPECT_EQ(Decimal::parse((*r)["shortfall"].get<std::string>()), Decimal(15));
  EXPECT_TRUE(ex.book().open_orders("z").empty());
}

TEST(Gate, BoundaryIsInclusive) {
  auto g = base(Decimal(100));
  g.accounts.push_back(customer("b", Decimal(15)));
  g.accounts.push_back(customer("c", "14.999999"_d));
  Exchange ex(g);
  // Margin from the grid oracle: one long contract at mark 100.
  std::vector<RiskPosition> p{{"F", 1}};
  ASSERT_EQ(oracle::grid_margin(p, ex.market(), ex.config().margin), Decimal(15));
  auto out = apply(ex, 0, PlaceOrder{"b", "F", Side::buy, Decimal(100), 1, TimeInForce::resting});
  EXPECT_FALSE(find_type(out, "rejected"));
  EXPECT_EQ(ex.book().open_orders("b").size(), 1u);
  out = apply(ex, 0, PlaceOrder{"c", "F", Side::buy, Decimal(100), 1, TimeInForce::resting});
  EXPECT_TRUE(find_type(out, "rejected"));
}

TEST(Gate, RequiresGuarantorAndInsuranceStake) {
  auto g = base(Decimal(100));
  AccountSetup loose;
  loose.id = "loose";
  loose.stable = Decimal(1000);
  g.accounts.push_back(loose);
  g.accounts[0].fund_tokens = Decimal(0);
  g.accounts.push_back(customer("rich", Decimal(100000)));
  Exchange ex(g);
  auto out = apply(ex, 0, PlaceOrder{"loose", "F", Side::buy, Decimal(100), 1, TimeInForce::resting});
  ASSERT_TRUE(find_type(out, "rejected"));
  EXPECT_EQ((*find_type(out, "rejected"))["code"], "NoGuarantor");
  out = apply(ex, 0, PlaceOrder{"rich", "F", Side::buy, Decimal(100), 1, TimeInForce::resting});
  ASSERT_TRUE(find_type(out, "rejected"));
  EXPECT_NE((*find_type(out, "rejected"))["reason"].get<std::string>().find("insurance stake"), std::string::npos);
}

TEST(Settlement, DeliveredObligationMovesCashAndCompute) {
  auto g = base();
  auto s = customer("short", Decimal(100), AccountRole::hedger);
  s.profile = producer_profile("short");
  g.accounts.push_back(s);
  g.accounts.push_back(customer("long", Decimal(100)));
  Exchange ex(g);
  apply(ex, 0, OtcTrade{"long", "short", "F", Decimal(10), 5});
  apply(ex, kExpiry, ExpireFuture{"F"});
  ASSERT_EQ(ex.obligations().size(), 1u);
  const auto& ob = ex.obligations().at(1);
  EXPECT_EQ(ob.quantity, Decimal(5));
  EXPECT_EQ(ob.status, ObligationStatus::capacity_verified);
  const Decimal long_before = ex.account("long").stable_balance;
  const Decimal short_before = ex.account("short").stable_balance;
  apply(ex, kExpiry + kHour, SubmitDelivery{1, ex.task(1).expected_digest});
  EXPECT_EQ(ex.account("long").stable_balance - long_before, Decimal(-50));
  EXPECT_EQ(ex.account("short").stable_balance - short_before, Decimal(50));
  EXPECT_EQ(ex.account("long").ch_received, Decimal(5));
  EXPECT_EQ(ex.obligations().at(1).status, ObligationStatus::delivered);
  EXPECT_EQ(ex.reputation().at("short").score, 100);
  EXPECT_EQ(ex.value_total(), ex.initial_value_total());
}

TEST(Settlement, FailedDeliverySlashesThenDrawsWaterfall) {
  auto g = base();
  auto s = customer("short", Decimal(100), AccountRole::hedger);
  s.profile = producer_profile("short");
  s.tokens = Decimal(40);
  s.staked = Decimal(40);
  g.accounts.push_back(s);
  g.accounts.push_back(customer("long", Decimal(100)));
  Exchange ex(g);
  apply(ex, 0, OtcTrade{"long", "short", "F", Decimal(10), 6});
  apply(ex, kExpiry, ExpireFuture{"F"});
  const Decimal long_before = ex.account("long").stable_balance;
  const Decimal short_before = ex.account("short").stable_balance;
  const auto wrong = apply(ex, kExpiry + kHour, SubmitDelivery{1, "0000000000000000"});
  EXPECT_EQ(ex.obligations().at(1).status, ObligationStatus::failed);
  apply(ex, kExpiry + kDay, DeliveryDeadline{1});
  const auto& ob = ex.obligations().at(1);
  EXPECT_EQ(ob.status, ObligationStatus::compensated);
  ASSERT_EQ(ex.slashes().size(), 1u);
  EXPECT_EQ(ex.slashes()[0].slashed, Decimal(40));
  EXPECT_EQ(ex.slashes()[0].burned, Decimal(20));
  ASSERT_EQ(ex.waterfalls().size(), 1u);
  const auto& w = ex.waterfalls()[0];
  EXPECT_EQ(w.shortfall, Decimal(20));
  EXPECT_EQ(w.drawn[0], Decimal(20));
  EXPECT_EQ(w.total_drawn(), Decimal(20));
  EXPECT_EQ(ex.account("long").stable_balance - long_before, Decimal(60));
  EXPECT_EQ(ex.account("short").stable_balance - short_before, Decimal(-20));
  EXPECT_EQ(ex.reputation().at("short").score, 90);
  EXPECT_EQ(ex.value_total(), ex.initial_value_total());
  EXPECT_TRUE(ex.tokens().check().identity_holds);
}

TEST(Settlement, LateDeliveryFails) {
  auto g = base();
  auto s = customer("short", Decimal(100), AccountRole::hedger);
  s.profile = producer_profile("short");
  g.accounts.push_back(s);
  g.accounts.push_back(customer("long", Decimal(100)));
  Exchange ex(g);
  apply(ex, 0, OtcTrade{"long", "short", "F", Decimal(10), 1});
  apply(ex, kExpiry, ExpireFuture{"F"});
  apply(ex, kExpiry + 2 * kDay, SubmitDelivery{1, ex.task(1).expected_digest});
  EXPECT_EQ(ex.obligations().at(1).status, ObligationStatus::failed);
  EXPECT_EQ(ex.obligations().at(1).failure_reason, "late");
}

TEST(Liquidation, SolventAccountWithLiquidBook) {
  auto g = base();
  g.accounts.push_back(customer("noprof", Decimal(100)));
  g.accounts.push_back(customer("mm", Decimal(1000), AccountRole::market_maker));
  Exchange ex(g);
  apply(ex, 0, OtcTrade{"mm", "noprof", "F", Decimal(10), 2});
  apply(ex, 0, PlaceOrder{"mm", "F", Side::buy, Decimal(10), 2, TimeInForce::resting});
  apply(ex, kExpiry - kDay, CheckCapacity{"F"});
  EXPECT_EQ(ex.account("noprof").position("F"), 0);
  EXPECT_TRUE(ex.waterfalls().empty());
  ASSERT_EQ(ex.liquidations().size(), 1u);
  EXPECT_EQ(ex.value_total(), ex.initial_value_total());
}

TEST(Liquidation, InsolventAccountInvokesWaterfall) {
  auto g = base(Decimal(100));
  g.accounts.push_back(customer("x", Decimal(150)));
  g.accounts.push_back(customer("mm", Decimal(10000), AccountRole::market_maker));
  Exchange ex(g);
  apply(ex, 0, OtcTrade{"x", "mm", "F", Decimal(100), 10});
  apply(ex, kDay, SetMark{"F", Decimal(83)});
  ASSERT_EQ(ex.waterfalls().size(), 1u);
  const auto& w = ex.waterfalls()[0];
  EXPECT_EQ(w.shortfall, Decimal(20));
  EXPECT_EQ(w.total_drawn(), Decimal(20));
  EXPECT_EQ(w.drawn[static_cast<std::size_t>(WaterfallLayer::pool_collateral)], Decimal(20));
  EXPECT_EQ(ex.account("x").position("F"), 0);
  EXPECT_EQ(ex.account("G").position("F"), 10);
  EXPECT_TRUE(ex.account("x").stable_balance.is_zero());
  EXPECT_EQ(ex.value_total(), ex.initial_value_total());
}

TEST(Liquidation, FlatAccountIsNoOp) {
  auto g = base();
  g.accounts.push_back(customer("flat", Decimal(100)));
  Exchange ex(g);
  const auto before = ex.state_hash();
  apply(ex, 0, Flatten{"flat", std::nullopt});
  apply(ex, 0, CheckCapacity{"F"});
  EXPECT_TRUE(ex.liquidations().empty());
  EXPECT_TRUE(ex.waterfalls().empty());
  EXPECT_EQ(ex.state_hash(), before);
}

TEST(Convergence, FuturesPnlTelescopesToSpotMinusEntry) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    auto g = base();
    g.accounts.push_back(customer("l", Decimal(100000)));
    g.accounts.push_back(customer("s", Decimal(100000)));
    Exchange ex(g);
    const std::int64_t q = 1 + static_cast<std::int64_t>(rng() % 20);
    const Decimal entry = Decimal(10);
    apply(ex, 0, OtcTrade{"l", "s", "F", entry, q});
    SimTime t = 0;
    for (int k = 0; k < 8; ++k) {
      t += kDay;
      apply(ex, t, SetMark{"F", Decimal::from_raw(static_cast<int128>(8'000'000 + rng() % 4'000'000)) .round_to("0.01"_d)});
    }
    const Decimal spot = Decimal::from_raw(static_cast<int128>(8'000'000 + rng() % 4'000'000)).round_to("0.01"_d);
    apply(ex, kExpiry - kHour, SetMark{"SPOT", spot});
    apply(ex, kExpiry, ExpireFuture{"F"});
    ASSERT_EQ(ex.account("l").stable_balance - Decimal(100000), (spot - entry) * Decimal(q));
    ASSERT_EQ(ex.account("s").stable_balance - Decimal(100000), (entry - spot) * Decimal(q));
  }
}

TEST(Conservation, RandomCommandsKeepValueAndSupply) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = base();
    g.config.tokens.fee_bps = Decimal(5);
    g.config.tokens.burn_bps = Decimal(2000);
    const std::vector<std::string> ids{"a", "b", "c", "d"};
    for (const auto& id : ids) {
      auto c = customer(id, Decimal(static_cast<std::int64_t>(20 + rng() % 400)));
      c.tokens = Decimal(50);
      c.staked = Decimal(10);
      g.accounts.push_back(c);
    }
    Exchange ex(g);
    SimTime t = 0;
    for (int k = 0; k < 300; ++k) {
      t += kHour;
      const auto& who = ids[rng() % ids.size()];
      const auto& other = ids[rng() % ids.size()];
      const Decimal px = Decimal::from_raw(static_cast<int128>(7'000'000 + (rng() % 600) * 10'000));
      switch (rng() % 6) {
        case 0: apply(ex, t, SetMark{"F", px}); break;
        case 1: apply(ex, t, OtcTrade{who, other, "F", px, 1 + static_cast<std::int64_t>(rng() % 5)}); break;
        case 2:
          apply(ex, t, PlaceOrder{who, "F", rng() % 2 ? Side::buy : Side::sell, px, 1 + static_cast<std::int64_t>(rng() % 5),
                                  TimeInForce::resting});
          break;
        case 3: apply(ex, t, PlaceOrder{who, "F", rng() % 2 ? Side::buy : Side::sell, std::nullopt, 1, TimeInForce::immediate_or_cancel}); break;
        case 4: apply(ex, t, Flatten{who, std::nullopt}); break;
        case 5: apply(ex, t, TransferTokens{who, other, Decimal(1)}); break;
      }
      ASSERT_EQ(ex.value_total(), ex.initial_value_total()) << "trial " << trial << " step " << k;
      ASSERT_EQ(ex.supply_violations(), 0u);
      const auto top = ex.book().best_bid_ask("F");
      if (top.bid && top.ask) {
        ASSERT_LT(top.bid->price, top.ask->price);
      }
    }
    for (const auto& w : ex.waterfalls()) {
      // Segregation: a later layer is drawn only after every earlier one is exhausted.
      for (std::size_t i = 1; i < kWaterfallLayers; ++i)
        if (w.drawn[i].is_positive()) {
          ASSERT_EQ(w.drawn[i - 1], w.available[i - 1]);
        }
      ASSERT_EQ(w.total_drawn(), w.shortfall);
    }
  }
}

TEST(Options, PremiumInCashAndParityQuotes) {
  auto g = base(Decimal(10));
  InstrumentSpec c;
  c.id = "C10";
  c.kind = InstrumentKind::call_option;
  c.strike = Decimal(10);
  c.underlying = "F";
  c.expiry = kExpiry - kDay;
  InstrumentSpec p = c;
  p.id = "P10";
  p.kind = InstrumentKind::put_option;
  g.instruments.push_back(c);
  g.instruments.push_back(p);
  g.vols = {{"C10", 0.6}, {"P10", 0.6}};
  g.accounts.push_back(customer("buyer", Decimal(1000)));
  auto w = customer("writer", Decimal(1000), AccountRole::hedger);
  w.profile = producer_profile("writer");
  g.accounts.push_back(w);
  Exchange ex(g);
  const Decimal prem = ex.option_quote("C10");
  apply(ex, 0, OtcTrade{"buyer", "writer", "C10", std::nullopt, 3});
  EXPECT_EQ(ex.account("buyer").stable_balance, Decimal(1000) - prem * Decimal(3));
  EXPECT_EQ(ex.account("writer").stable_balance, Decimal(1000) + prem * Decimal(3));
  apply(ex, kDay, QuoteOptions{"F"});
  ASSERT_EQ(ex.quotes().size(), 1u);
  EXPECT_TRUE(ex.quotes()[0].parity_holds);
  EXPECT_EQ(ex.quotes()[0].call - ex.quotes()[0].put, ex.quotes()[0].future_price - ex.quotes()[0].strike);
  apply(ex, kDay * 2, SetMark{"F", Decimal(12)});
  apply(ex, kExpiry - kDay, ExpireOption{"C10"});
  EXPECT_EQ(ex.account("buyer").position("C10"), 0);
  EXPECT_EQ(ex.account("buyer").position("F"), 3);
  EXPECT_EQ(ex.account("writer").position("F"), -3);
  EXPECT_EQ(ex.value_total(), ex.initial_value_total());
}

TEST(Perp, FundingNetsToZeroInsideExchange) {
  auto g = base(Decimal(100));
  InstrumentSpec perp;
  perp.id = "PERP";
  perp.kind = InstrumentKind::perpetual;
  perp.funding_interval = 8 * kHour;
  g.instruments.push_back(perp);
  g.marks["PERP"] = Decimal(100);
  g.accounts.push_back(customer("l", Decimal(1000)));
  g.accounts.push_back(customer("s", Decimal(1000)));
  Exchange ex(g);
  apply(ex, 0, OtcTrade{"l", "s", "PERP", Decimal(100), 3});
  apply(ex, kHour, SetMark{"PERP", Decimal(101)});
  const Decimal l0 = ex.account("l").stable_balance;
  apply(ex, 8 * kHour, PerpFunding{"PERP"});
  EXPECT_EQ(ex.account("l").stable_balance - l0, Decimal(-3));
  EXPECT_EQ(ex.value_total(), ex.initial_value_total());
}

TEST(Tokens, UnstakeLockedByOpenObligation) {
  auto g = base();
  auto s = customer("short", Decimal(100), AccountRole::hedger);
  s.profile = producer_profile("short");
  s.tokens = Decimal(10);
  s.staked = Decimal(10);
  g.accounts.push_back(s);
  g.accounts.push_back(customer("long", Decimal(100)));
  Exchange ex(g);
  apply(ex, 0, OtcTrade{"long", "short", "F", Decimal(10), 5});
  apply(ex, kExpiry, ExpireFuture{"F"});
  const auto out = apply(ex, kExpiry, UnstakeTokens{"short", Decimal(1)});
  ASSERT_TRUE(find_type(out, "rejected"));
  EXPECT_EQ((*find_type(out, "rejected"))["code"], "LockedByObligations");
  apply(ex, kExpiry + kHour, SubmitDelivery{1, ex.task(1).expected_digest});
  const auto ok = apply(ex, kExpiry + kHour, UnstakeTokens{"short", Decimal(1)});
  EXPECT_FALSE(find_type(ok, "rejected"));
}

TEST(Genesis, RejectsBadSetup) {
  auto g = base();
  g.accounts.push_back(customer("dup", Decimal(1)));
  g.accounts.push_back(customer("dup", Decimal(1)));
  EXPECT_THROW(Exchange{g}, Error);
  auto h = base();
  auto c = customer("x", Decimal(1));
  c.guarantor = "nobody";
  h.accounts.push_back(c);
  EXPECT_THROW(Exchange{h}, Error);
}

TEST(Exchange, ClockNeverRunsBackwards) {
  Exchange ex(base());
  apply(ex, 100, SetMark{"F", Decimal(11)});
  EXPECT_THROW(apply(ex, 50, SetMark{"F", Decimal(12)}), Error);
}
