#include <gtest/gtest.h>

#include "gcx/error.hpp"
#include "gcx/matching.hpp"
#include "oracles.hpp"

using namespace gcx;
using namespace gcx::literals;

namespace {

OrderRequest req(const std::string& acct, Side side, std::optional<Decimal> px, std::int64_t q,
                 TimeInForce tif = TimeInForce::resting) {
  return {acct, "X", side, px, q, tif};
}

MatchingEngine make() {
  MatchingEngine e;
  e.list_instrument("X", "0.1"_d);
  return e;
}

}  // namespace

TEST(Matching, RestsIntoEmptyBook) {
  auto e = make();
  const auto r = e.submit(req("a", Side::buy, "5"_d, 3), 0);
  EXPECT_TRUE(r.trades.empty());
  EXPECT_EQ(r.resting, 3);
  const auto top = e.best_bid_ask("X");
  ASSERT_TRUE(top.bid);
  EXPECT_EQ(top.bid->price, "5"_d);
  EXPECT_FALSE(top.ask);
}

TEST(Matching, MarketBuyAgainstSingleAsk) {
  auto e = make();
  e.submit(req("m", Side::sell, "5.0"_d, 10), 0);
  const auto r = e.submit(req("t", Side::buy, std::nullopt, 4), 1);
  ASSERT_EQ(r.trades.size(), 1u);
  EXPECT_EQ(r.trades[0].quantity, 4);
  EXPECT_EQ(r.trades[0].price, "5.0"_d);
  EXPECT_EQ(e.best_bid_ask("X").ask->quantity, 6);
}

TEST(Matching, WalksLevelsThenRests) {
  auto e = make();
  e.submit(req("m1", Side::sell, "4.9"_d, 3), 0);
  e.submit(req("m2", Side::sell, "5.0"_d, 5), 1);
  const auto r = e.submit(req("t", Side::buy, "5.0"_d, 10), 2);
  ASSERT_EQ(r.trades.size(), 2u);
  EXPECT_EQ(r.trades[0].price, "4.9"_d);
  EXPECT_EQ(r.trades[0].quantity, 3);
  EXPECT_EQ(r.trades[1].price, "5.0"_d);
  EXPECT_EQ(r.trades[1].quantity, 5);
  EXPECT_EQ(r.resting, 2);
  const auto top = e.best_bid_ask("X");
  ASSERT_TRUE(top.bid);
  EXPECT_EQ(*top.bid, (BookLevel{"5.0"_d, 2}));
  EXPECT_FALSE(top.ask);
}

TEST(Matching, TimePriorityWithinLevel) {
  auto e = make();
  const auto first = e.submit(req("m1", Side::sell, "5"_d, 2), 0).order_id;
  e.submit(req("m2", Side::sell, "5"_d, 2), 1);
  const auto r = e.submit(req("t", Side::buy, "5"_d, 3), 2);
  ASSERT_EQ(r.trades.size(), 2u);
  EXPECT_EQ(r.trades[0].maker_order_id, first);
  EXPECT_EQ(r.trades[0].quantity, 2);
  EXPECT_EQ(r.trades[1].quantity, 1);
}

TEST(Matching, Cancel) {
  auto e = make();
  const auto id = e.submit(req("m", Side::sell, "5"_d, 7), 0).order_id;
  EXPECT_EQ(e.cancel(id), 7);
  EXPECT_EQ(e.cancel(id), 0);
  const auto id2 = e.submit(req("m", Side::sell, "5"_d, 2), 1).order_id;
  e.submit(req("t", Side::buy, "5"_d, 2), 2);
  EXPECT_EQ(e.cancel(id2), 0);
  try {
    e.cancel(999);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::UnknownOrder);
  }
}

TEST(Matching, ImmediateOrCancelNeverRests) {
  auto e = make();
  e.submit(req("m", Side::sell, "5"_d, 2), 0);
  const auto r = e.submit(req("t", Side::buy, "5"_d, 5, TimeInForce::immediate_or_cancel), 1);
  EXPECT_EQ(r.filled, 2);
  EXPECT_EQ(r.cancelled, 3);
  EXPECT_EQ(r.resting, 0);
  EXPECT_FALSE(e.best_bid_ask("X").bid);
}

TEST(Matching, ValidationErrors) {
  auto e = make();
  auto code = [&](const OrderRequest& r) {
    try {
      e.submit(r, 0);
    } catch (const Error& err) {
      return err.code();
    }
    return ErrorCode::Parse;
  };
  EXPECT_EQ(code(req("a", Side::buy, "5.05"_d, 1)), ErrorCode::BadTick);
  EXPECT_EQ(code(req("a", Side::buy, "5"_d, 0)), ErrorCode::InvalidArgument);
  auto r = req("a", Side::buy, "5"_d, 1);
  r.instrument_id = "nope";
  EXPECT_EQ(code(r), ErrorCode::UnknownInstrument);
}

TEST(Matching, PreviewDoesNotMutate) {
  auto e = make();
  e.submit(req("m", Side::sell, "5"_d, 2), 0);
  e.submit(req("m", Side::sell, "5.1"_d, 2), 1);
  const auto fills = e.preview(req("t", Side::buy, std::nullopt, 3));
  ASSERT_EQ(fills.size(), 2u);
  EXPECT_EQ(fills[1].price, "5.1"_d);
  EXPECT_EQ(fills[1].quantity, 1);
  EXPECT_EQ(e.depth("X", Side::sell).size(), 2u);
  EXPECT_EQ(e.best_bid_ask("X").ask->quantity, 2);
}

TEST(Matching, InterleavedSequenceMatchesOracle) {
  const auto r = oracle::run_match_trial(12345, 50);
  EXPECT_TRUE(r.equal) << r.detail;
}

TEST(Matching, RandomSequencesMatchNaiveMatcher) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto r = oracle::run_match_trial(seed);
    ASSERT_TRUE(r.equal) << "seed " << seed << ": " << r.detail;
    ASSERT_TRUE(r.no_cross) << seed;
    ASSERT_TRUE(r.conserved) << seed;
    ASSERT_TRUE(r.price_improvement) << seed;
  }
}

TEST(Matching, DeterministicTradeLog) {
  auto run = [] {
    auto e = make();
    std::mt19937_64 rng(77);
    std::vector<Trade> log;
    for (int i = 0; i < 300; ++i) {
      auto r = e.submit(req("a" + std::to_string(rng() % 3), rng() % 2 ? Side::buy : Side::sell,
                            Decimal(5) + "0.1"_d * Decimal(static_cast<int>(rng() % 4)), 1 + rng() % 5),
                        i);
      log.insert(log.end(), r.trades.begin(), r.trades.end());
    }
    return log;
  };
  EXPECT_EQ(run(), run());
}
