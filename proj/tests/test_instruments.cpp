#include <gtest/gtest.h>

#include <random>

#include "gcx/error.hpp"
#include "gcx/instruments.hpp"
#include "oracles.hpp"

using namespace gcx;
using namespace gcx::literals;

namespace {

InstrumentSpec future_spec() {
  InstrumentSpec s;
  s.id = "F";
  s.kind = InstrumentKind::future;
  s.expiry = 30 * kDay;
  return s;
}

InstrumentSpec option_spec(InstrumentKind kind, Decimal strike) {
  InstrumentSpec s;
  s.id = kind == InstrumentKind::call_option ? "C" : "P";
  s.kind = kind;
  s.expiry = 20 * kDay;
  s.strike = strike;
  s.underlying = "F";
  return s;
}

Position long_pos(const std::string& inst, std::int64_t q) {
  Position p;
  p.account_id = "a";
  p.instrument_id = inst;
  p.net_quantity = q;
  return p;
}

}  // namespace

TEST(Validate, EveryKindHasExactlyOneNamedViolation) {
  EXPECT_FALSE(validate(future_spec()));
  auto s = future_spec();
  s.expiry.reset();
  EXPECT_EQ(validate(s), InstrumentViolation::MissingExpiry);
  s = future_spec();
  s.strike = Decimal(10);
  EXPECT_EQ(validate(s), InstrumentViolation::UnexpectedStrike);
  s = future_spec();
  s.id.clear();
  s.contract_size = Decimal(0);
  EXPECT_EQ(validate(s), InstrumentViolation::EmptyId);  // first in check order
  auto o = option_spec(InstrumentKind::call_option, "10.005"_d);
  EXPECT_EQ(validate(o), InstrumentViolation::StrikeOffTick);
  o = option_spec(InstrumentKind::put_option, Decimal(10));
  o.underlying.reset();
  EXPECT_EQ(validate(o), InstrumentViolation::MissingUnderlying);
  InstrumentSpec perp;
  perp.id = "PERP";
  perp.kind = InstrumentKind::perpetual;
  EXPECT_EQ(validate(perp), InstrumentViolation::MissingFundingInterval);
  perp.funding_interval = 8 * kHour;
  EXPECT_FALSE(validate(perp));
}

TEST(Validate, RandomSpecsAreTotal) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20000; ++i) {
    InstrumentSpec s;
    s.id = rng() % 10 ? "I" : "";
    s.kind = static_cast<InstrumentKind>(rng() % 5);
    s.contract_size = Decimal(static_cast<int>(rng() % 3) - 1);
    s.tick_size = Decimal::parse(rng() % 5 ? "0.01" : "0");
    if (rng() % 2) s.expiry = static_cast<SimTime>(rng() % 100);
    if (rng() % 2) s.strike = Decimal::parse(rng() % 3 ? "10" : "10.001");
    if (rng() % 2) s.underlying = "F";
    if (rng() % 2) s.funding_interval = kHour;
    // Either valid or a single named violation; never throws.
    const auto v = validate(s);
    if (v) {
      EXPECT_FALSE(to_string(*v).empty());
    }
  }
}

TEST(Exercise, CallsAndPuts) {
  const auto call = option_spec(InstrumentKind::call_option, Decimal(10));
  const auto r = exercise_option(call, long_pos("C", 2), 2, kDay);
  EXPECT_EQ(r.option_delta, -2);
  EXPECT_EQ(r.future_delta, 2);
  EXPECT_EQ(r.underlying, "F");
  EXPECT_EQ(r.entry_price, Decimal(10));
  const auto zero = exercise_option(call, long_pos("C", 2), 0, kDay);
  EXPECT_EQ(zero.option_delta, 0);
  EXPECT_EQ(zero.future_delta, 0);
  const auto put = option_spec(InstrumentKind::put_option, Decimal(10));
  const auto rp = exercise_option(put, long_pos("P", 1), 1, kDay);
  EXPECT_EQ(rp.future_delta, -1);
  EXPECT_EQ(rp.entry_price, Decimal(10));
}

TEST(Exercise, Errors) {
  const auto call = option_spec(InstrumentKind::call_option, Decimal(10));
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Parse;
  };
  EXPECT_EQ(code([&] { exercise_option(future_spec(), long_pos("F", 1), 1, 0); }), ErrorCode::NotAnOption);
  EXPECT_EQ(code([&] { exercise_option(call, long_pos("C", -1), 1, 0); }), ErrorCode::NotLong);
  EXPECT_EQ(code([&] { exercise_option(call, long_pos("C", 1), 1, 21 * kDay); }), ErrorCode::Expired);
}

TEST(Exercise, PreservesExposureInTheMoney) {
  // At expiry the option is worth its intrinsic value; after exercise the
  // holder owns the future at the strike. A one-tick move must change both
  // holdings by the same amount while the option stays in the money.
  const Decimal tick = "0.01"_d;
  for (const auto kind : {InstrumentKind::call_option, InstrumentKind::put_option}) {
    const auto opt = option_spec(kind, Decimal(10));
    for (const char* f : {"10.5", "12", "7", "9.2"}) {
      const Decimal F = Decimal::parse(f);
      const bool call = kind == InstrumentKind::call_option;
      auto intrinsic = [&](Decimal x) { return call ? std::max(x - Decimal(10), Decimal()) : std::max(Decimal(10) - x, Decimal()); };
      if (intrinsic(F) <= tick) continue;
      const std::int64_t q = 3;
      const auto ex = exercise_option(opt, long_pos(opt.id, q), q, opt.expiry.value());
      for (const Decimal move : {tick, -tick}) {
        const Decimal before = Decimal(q) * (intrinsic(F + move) - intrinsic(F));
        const Decimal after = Decimal(ex.future_delta) * (F + move - ex.entry_price) -
                              Decimal(ex.future_delta) * (F - ex.entry_price);
        EXPECT_EQ(before, after) << f;
      }
    }
  }
}

TEST(PerpFunding, Examples) {
  InstrumentSpec perp;
  perp.id = "PERP";
  perp.kind = InstrumentKind::perpetual;
  perp.funding_interval = 8 * kHour;
  std::vector<Position> ps{long_pos("PERP", 3)};
  auto t = perp_funding(perp, Decimal(100), Decimal(100), ps);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].amount, Decimal(0));
  t = perp_funding(perp, Decimal(101), Decimal(100), ps);
  EXPECT_EQ(t[0].amount, Decimal(-3));
}

TEST(PerpFunding, TransfersNetToZero) {
  InstrumentSpec perp;
  perp.id = "PERP";
  perp.kind = InstrumentKind::perpetual;
  perp.funding_interval = 8 * kHour;
  perp.contract_size = "2.5"_d;
  std::mt19937_64 rng(21);
  for (int i = 0; i < 5000; ++i) {
    std::vector<Position> ps;
    std::int64_t net = 0;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int k = 0; k < n; ++k) {
      const auto q = static_cast<std::int64_t>(rng() % 21) - 10;
      ps.push_back(long_pos("PERP", q));
      ps.back().account_id = "a" + std::to_string(k);
      net += q;
    }
    ps.push_back(long_pos("PERP", -net));
    ps.back().account_id = "z";
    const Decimal mark = Decimal::from_raw(static_cast<int128>(90'000'000 + rng() % 20'000'000));
    const Decimal index = Decimal::from_raw(static_cast<int128>(90'000'000 + rng() % 20'000'000));
    Decimal sum;
    for (const auto& t : perp_funding(perp, mark, index, ps, "0.37"_d)) sum += t.amount;
    ASSERT_TRUE(sum.is_zero());
  }
}

TEST(Black76, AtmMatchesIndependentCdf) {
  const double call = black76_premium(100, 100, 0.2, 1, OptionType::call);
  const double put = black76_premium(100, 100, 0.2, 1, OptionType::put);
  const double expect = 100 * (2 * oracle::normal_cdf(0.1) - 1);
  EXPECT_NEAR(expect, 7.9656, 1e-3);
  EXPECT_NEAR(call, expect, 1e-3);
  EXPECT_NEAR(put, expect, 1e-3);
  EXPECT_NEAR(normal_cdf(0.1), oracle::normal_cdf(0.1), 1e-9);
}

TEST(Black76, DegenerateInputs) {
  EXPECT_EQ(black76_premium(100, 100, 0.0, 1, OptionType::call), 0.0);
  EXPECT_EQ(black76_premium(100, 100, 0.2, 0, OptionType::put), 0.0);
  EXPECT_EQ(black76_premium(110, 100, 0.0, 1, OptionType::call), 10.0);
  EXPECT_THROW(black76_premium(-1, 100, 0.2, 1, OptionType::call), Error);
}

TEST(Black76, MonotoneInVolAndForward) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const double F = 1 + 199 * U(rng), K = 1 + 199 * U(rng), v = 2 * U(rng), T = 3 * U(rng);
    const double dv = U(rng) * 0.5, dF = U(rng) * 5;
    for (auto type : {OptionType::call, OptionType::put})
      ASSERT_GE(black76_premium(F, K, v + dv, T, type) + 1e-12, black76_premium(F, K, v, T, type));
    ASSERT_GE(black76_premium(F + dF, K, v, T, OptionType::call) + 1e-12, black76_premium(F, K, v, T, OptionType::call));
  }
}

TEST(Black76, ParityInFloatingPoint) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const double F = 1 + 199 * U(rng), K = 1 + 199 * U(rng), v = 2 * U(rng), T = 3 * U(rng);
    const double c = black76_premium(F, K, v, T, OptionType::call);
    const double p = black76_premium(F, K, v, T, OptionType::put);
    ASSERT_NEAR(c - p, F - K, 1e-9 * std::max(F, K));
  }
}

TEST(QuotePair, ParityIsExactOnTheTick) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const Decimal tick = "0.01"_d;
  for (int i = 0; i < 20000; ++i) {
    const Decimal F = Decimal::from_raw(static_cast<int128>(rng() % 40'000) * 10'000 + 10'000);
    const Decimal K = Decimal::from_raw(static_cast<int128>(rng() % 40'000) * 10'000 + 10'000);
    const auto q = quote_pair(F, K, 2 * U(rng), U(rng), tick);
    ASSERT_EQ(q.call - q.put, F - K);
    ASSERT_TRUE(q.call.is_multiple_of(tick));
    ASSERT_TRUE(q.put.is_multiple_of(tick));
    ASSERT_FALSE(q.call.is_negative());
    ASSERT_FALSE(q.put.is_negative());
  }
}

TEST(PositionFill, RealizesOnReduceAndReopensOnFlip) {
  Position p;
  p.apply_fill(4, Decimal(10), Decimal(1));
  p.apply_fill(4, Decimal(12), Decimal(1));
  EXPECT_EQ(p.entry_price, Decimal(11));
  p.apply_fill(-6, Decimal(13), Decimal(1));
  EXPECT_EQ(p.realized_pnl, Decimal(12));
  EXPECT_EQ(p.net_quantity, 2);
  p.apply_fill(-5, Decimal(9), Decimal(1));
  EXPECT_EQ(p.net_quantity, -3);
  EXPECT_EQ(p.entry_price, Decimal(9));
  EXPECT_EQ(p.realized_pnl, Decimal(8));
}
