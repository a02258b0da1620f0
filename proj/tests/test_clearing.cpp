#include <gtest/gtest.h>

#include <random>

#include "gcx/clearing.hpp"
#include "gcx/error.hpp"
#include "oracles.hpp"

using namespace gcx;
using namespace gcx::literals;

namespace {

ReferenceSystem ref_1tf() { return {"REF", Decimal(1'000'000'000'000LL), Decimal(2'500'000'000LL), "HPL", 1}; }

SystemProfile profile(Decimal tflops, Decimal uptime) {
  return {"p", tflops * Decimal(1'000'000'000'000LL), std::nullopt, uptime, {}, {}, {}};
}

DeliveryObligation verified(SimTime deadline) {
  DeliveryObligation o;
  o.obligation_id = 1;
  o.quantity = Decimal(5);
  o.deadline = deadline;
  o.transition(ObligationStatus::capacity_verified);
  return o;
}

}  // namespace

TEST(ObligationStateMachine, AllowedTransitions) {
  using S = ObligationStatus;
  const std::vector<S> all{S::pending, S::capacity_verified, S::delivered, S::failed, S::compensated};
  int allowed = 0;
  for (auto a : all)
    for (auto b : all) allowed += is_allowed_transition(a, b);
  EXPECT_EQ(allowed, 5);
  EXPECT_TRUE(is_allowed_transition(S::pending, S::capacity_verified));
  EXPECT_TRUE(is_allowed_transition(S::capacity_verified, S::delivered));
  EXPECT_TRUE(is_allowed_transition(S::capacity_verified, S::failed));
  EXPECT_TRUE(is_allowed_transition(S::failed, S::compensated));
  EXPECT_TRUE(is_allowed_transition(S::pending, S::failed));
  DeliveryObligation o;
  EXPECT_THROW(o.transition(S::delivered), Error);
  o.transition(S::capacity_verified);
  EXPECT_THROW(o.transition(S::capacity_verified), Error);
  o.transition(S::failed);
  o.transition(S::compensated);
  EXPECT_TRUE(o.terminal());
  EXPECT_EQ(o.history.size(), 4u);
}

TEST(MatchExpiry, Examples) {
  EXPECT_TRUE(match_expiry({}, {}).empty());
  auto one = match_expiry({{"s", std::nullopt, 5}}, {{"l", std::nullopt, 5}});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].quantity, 5);
  const auto m = match_expiry({{"s7", std::nullopt, 7}, {"s3", std::nullopt, 3}},
                              {{"l6", std::nullopt, 6}, {"l4", std::nullopt, 4}});
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[0].short_account, "s7");
  EXPECT_EQ(m[0].long_account, "l6");
  EXPECT_EQ(m[0].quantity, 6);
  EXPECT_EQ(m[1].short_account, "s7");
  EXPECT_EQ(m[1].long_account, "l4");
  EXPECT_EQ(m[1].quantity, 1);
  EXPECT_EQ(m[2].short_account, "s3");
  EXPECT_EQ(m[2].long_account, "l4");
  EXPECT_EQ(m[2].quantity, 3);
}

TEST(MatchExpiry, ConservesOpenInterest) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 2000; ++i) {
    std::vector<OpenInterest> s, l;
    std::map<std::string, std::int64_t> want;
    std::int64_t total = 0;
    for (int k = 0; k < 1 + static_cast<int>(rng() % 5); ++k) {
      const auto q = 1 + static_cast<std::int64_t>(rng() % 9);
      s.push_back({"s" + std::to_string(k), "g" + std::to_string(rng() % 2), q});
      want[s.back().account_id] = q;
      total += q;
    }
    std::int64_t left = total;
    for (int k = 0; left > 0; ++k) {
      const auto q = k == 4 ? left : std::min<std::int64_t>(left, 1 + static_cast<std::int64_t>(rng() % 9));
      l.push_back({"l" + std::to_string(k), "g" + std::to_string(rng() % 2), q});
      want[l.back().account_id] = q;
      left -= q;
    }
    std::map<std::string, std::int64_t> got;
    for (const auto& m : match_expiry(s, l)) {
      ASSERT_GT(m.quantity, 0);
      got[m.short_account] += m.quantity;
      got[m.long_account] += m.quantity;
    }
    ASSERT_EQ(got, want);
  }
}

TEST(VerifyCapacity, Boundaries) {
  const auto ref = ref_1tf();
  const GradeTriple floor = GradeTriple::parse("D2Z");
  // 10 TFLOPS over 24 h = 240 CH.
  EXPECT_EQ(verify_capacity(Decimal(240), floor, profile(Decimal(10), "99.95"_d), ref, Decimal(24)),
            CapacityResult::capacity_verified);
  EXPECT_EQ(verify_capacity("240.000001"_d, floor, profile(Decimal(10), "99.95"_d), ref, Decimal(24)),
            CapacityResult::liquidate_short);
  EXPECT_EQ(verify_capacity(Decimal(1), floor, profile(Decimal(10), Decimal(90)), ref, Decimal(24)),
            CapacityResult::liquidate_short);
  EXPECT_EQ(verify_capacity(Decimal(0), floor, std::nullopt, ref, Decimal(24)), CapacityResult::capacity_verified);
  EXPECT_EQ(verify_capacity(Decimal(1), floor, std::nullopt, ref, Decimal(24)), CapacityResult::liquidate_short);
}

TEST(VerifyDelivery, DigestAndClock) {
  const auto task = make_task(1, 42, 256);
  EXPECT_EQ(task.expected_digest, compute_digest(42, 256));
  EXPECT_NE(compute_digest(42, 256), compute_digest(43, 256));
  const auto ob = verified(100);
  EXPECT_EQ(verify_delivery(ob, task, task.expected_digest, 50), DeliveryOutcome::accepted);
  EXPECT_EQ(verify_delivery(ob, task, task.expected_digest, 100), DeliveryOutcome::accepted);
  EXPECT_EQ(verify_delivery(ob, task, "0000000000000000", 50), DeliveryOutcome::challenged_failed);
  EXPECT_EQ(verify_delivery(ob, task, task.expected_digest, 101), DeliveryOutcome::challenged_failed);
  DeliveryObligation pending;
  EXPECT_THROW(verify_delivery(pending, task, task.expected_digest, 0), Error);
}

TEST(Waterfall, Examples) {
  const std::array<Decimal, 5> caps{Decimal(30), Decimal(20), Decimal(25), Decimal(10), Decimal(100)};
  const auto d = plan_waterfall(Decimal(100), caps);
  const std::array<Decimal, 6> want{Decimal(30), Decimal(20), Decimal(25), Decimal(10), Decimal(15), Decimal(0)};
  EXPECT_EQ(d, want);
  const auto first = plan_waterfall(Decimal(12), caps);
  EXPECT_EQ(first[0], Decimal(12));
  for (std::size_t i = 1; i < 6; ++i) EXPECT_TRUE(first[i].is_zero());
  const auto over = plan_waterfall(Decimal(192), caps);
  EXPECT_EQ(over[5], Decimal(7));
}

TEST(Waterfall, MatchesGreedyOracleAndSums) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20000; ++i) {
    std::array<Decimal, 5> caps;
    std::vector<Decimal> cv;
    for (auto& c : caps) {
      c = Decimal::from_raw(static_cast<int128>(rng() % 100'000'000));
      cv.push_back(c);
    }
    const Decimal s = Decimal::from_raw(static_cast<int128>(rng() % 600'000'000));
    const auto got = plan_waterfall(s, caps);
    const auto want = oracle::waterfall(s, cv);
    Decimal sum;
    for (std::size_t k = 0; k < 6; ++k) {
      ASSERT_EQ(got[k], want[k]);
      sum += got[k];
    }
    ASSERT_EQ(sum, s);
    // A later layer is touched only once every earlier layer is exhausted.
    for (std::size_t k = 1; k < 6; ++k)
      if (got[k].is_positive()) {
        ASSERT_EQ(got[k - 1], caps[k - 1]);
      }
  }
}
