#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "gcx/error.hpp"
#include "gcx/sim.hpp"

using namespace gcx;
using namespace gcx::literals;

namespace {

std::string join_log(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

Decimal dec(const json& j) { return Decimal::parse(j.is_string() ? j.get<std::string>() : j.dump()); }

ErrorCode replay_code(const std::string& text) {
  try {
    replay_text(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Parse;
}

// Replaces the shutdown flag on every Produce action.
Scenario with_shutdown(Scenario s, bool shutdown) {
  for (auto& a : s.actions)
    if (auto* p = std::get_if<Produce>(&a.command.body)) p->shutdown = shutdown;
  return s;
}

}  // namespace

TEST(SimClock, OrdersByTimeThenInsertion) {
  SimClock c;
  c.schedule(10, SetTokenMark{Decimal(1)});
  c.schedule(5, SetTokenMark{Decimal(2)});
  c.schedule(10, SetTokenMark{Decimal(3)});
  EXPECT_EQ(std::get<SetTokenMark>(c.pop().body).price, Decimal(2));
  EXPECT_EQ(std::get<SetTokenMark>(c.pop().body).price, Decimal(1));
  EXPECT_EQ(std::get<SetTokenMark>(c.pop().body).price, Decimal(3));
  EXPECT_TRUE(c.empty());
  EXPECT_THROW(c.schedule(9, SetTokenMark{Decimal(1)}), Error);
}

TEST(GbmPath, DeterministicAndOnTick) {
  const auto a = gbm_path(7, 0.0, 0.8, kDay, 0, 30 * kDay, Decimal(10), "0.01"_d);
  const auto b = gbm_path(7, 0.0, 0.8, kDay, 0, 30 * kDay, Decimal(10), "0.01"_d);
  const auto c = gbm_path(8, 0.0, 0.8, kDay, 0, 30 * kDay, Decimal(10), "0.01"_d);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  ASSERT_EQ(a.size(), 31u);
  EXPECT_EQ(a.front().second, Decimal(10));
  for (const auto& [t, p] : a) {
    EXPECT_TRUE(p.is_multiple_of("0.01"_d));
    EXPECT_GE(p, "0.01"_d);
  }
}

TEST(Scenario, InvalidInputsAreRejected) {
  auto code = [](const json& j) {
    try {
      parse_scenario(j);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Parse;
  };
  EXPECT_EQ(code(json{{"schema_version", 99}}), ErrorCode::ScenarioInvalid);
  EXPECT_EQ(code(json{{"price_paths", json::array({json{{"kind", "gbm"}, {"targets", {"nope"}}}})}}),
            ErrorCode::ScenarioInvalid);
  EXPECT_EQ(code(json{{"actions", json::array({json{{"time", 0}, {"op", "bogus"}}})}}), ErrorCode::ScenarioInvalid);
  EXPECT_EQ(code(json::array()), ErrorCode::ScenarioInvalid);
}

TEST(Scenario, EmptyScenarioHasNoEvents) {
  const auto r = run(parse_scenario(json{{"schema_version", 1}}));
  EXPECT_EQ(r.report["events"], 0);
  EXPECT_TRUE(r.report["accounts"].contains("exchange"));
  EXPECT_TRUE(r.passed);
}

TEST(Scenario, RoundTripsThroughJson) {
  for (const auto& name : scenario_names()) {
    const auto s = library_scenario(name);
    json j = s;
    const auto back = parse_scenario(j);
    json k = back;
    ASSERT_EQ(j.dump(), k.dump()) << name;
  }
}

TEST(Scenario, FailingAssertionMarksRunFailed) {
  auto s = library_scenario("alice_futures_hedge");
  s.assertions.push_back(Assertion{"impossible", "accounts.alice.ch_received", "eq", "101"});
  const auto r = run(s);
  EXPECT_FALSE(r.passed);
  EXPECT_FALSE(r.report["passed"].get<bool>());
}

TEST(Library, AllScenariosPassTheirAssertions) {
  for (const auto& name : scenario_names()) {
    const auto r = run(library_scenario(name));
    EXPECT_TRUE(r.passed) << name << "\n" << r.report["assertions"].dump(2);
    EXPECT_EQ(r.report["rejections"], 0) << name;
  }
}

TEST(Library, ObligationsFollowTheStateMachineAndTerminate) {
  using S = ObligationStatus;
  for (const auto& name : scenario_names()) {
    const auto r = run(library_scenario(name));
    for (const auto& [id, ob] : r.exchange->obligations()) {
      ASSERT_EQ(ob.history.front(), S::pending);
      for (std::size_t i = 1; i < ob.history.size(); ++i)
        ASSERT_TRUE(is_allowed_transition(ob.history[i - 1], ob.history[i])) << name << " #" << id;
      ASSERT_TRUE(ob.status == S::delivered || ob.status == S::compensated) << name << " #" << id;
    }
  }
}

TEST(Library, ConservationAndParityInEveryReport) {
  for (const auto& name : scenario_names()) {
    const auto r = run(library_scenario(name));
    const auto& ex = *r.exchange;
    EXPECT_EQ(ex.value_total(), ex.initial_value_total()) << name;
    EXPECT_EQ(ex.supply_violations(), 0u) << name;
    EXPECT_GT(ex.supply_checks(), 0u) << name;
    for (const auto& q : ex.quotes()) ASSERT_EQ(q.call - q.put, q.future_price - q.strike) << name;
  }
}

TEST(Hedge, AliceCostIsEntryPriceOnEveryPath) {
  const auto s = library_scenario("alice_futures_hedge");
  std::set<std::string> spots;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto r = run(s, seed);
    const auto& alice = r.exchange->account("alice");
    // Telescoping: variation margin (S_T - F0) * 100 plus the delivery
    // payment S_T * 100 is F0 * 100 whatever the path.
    const Decimal spent = alice.initial_stable - alice.stable_balance;
    ASSERT_EQ(alice.ch_received, Decimal(100)) << seed;
    ASSERT_EQ(spent, Decimal(1000)) << seed;
    ASSERT_EQ(dec(r.report["accounts"]["alice"]["effective_cost_per_ch"]), Decimal(10)) << seed;
    ASSERT_EQ(dec(r.report["accounts"]["bob"]["effective_revenue_per_ch"]), Decimal(10)) << seed;
    spots.insert(r.report["spot"].dump());
  }
  // The paths really differ.
  EXPECT_GT(spots.size(), 50u);
}

TEST(Hedge, BobRevenueIsSoldPriceOnEveryPath) {
  const auto s = library_scenario("bob_producer_hedge");
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto r = run(s, seed);
    const auto& bob = r.exchange->account("bob");
    ASSERT_EQ(bob.stable_balance - bob.initial_stable, Decimal(1000)) << seed;
    ASSERT_EQ(bob.ch_delivered, Decimal(100)) << seed;
  }
}

TEST(Payoff, CoveredCallMatchesClosedForm) {
  const auto r = run(library_scenario("carol_covered_calls"));
  const auto q = quote_pair(Decimal(10), Decimal(11), 0.6, years_between(0, 28 * kDay), "0.01"_d);
  const Decimal s_t(12), k(11), production(100), power(300);
  const Decimal expect = q.call * Decimal(100) + std::min(s_t, k) * production - power;
  EXPECT_EQ(dec(r.report["accounts"]["carol"]["cash_pnl"]), expect);
}

TEST(Payoff, ShutdownFloorsStrangleLoss) {
  const auto base = library_scenario("carol_short_strangle_with_shutdown");
  const auto on = run(with_shutdown(base, true));
  const auto off = run(with_shutdown(base, false));
  const Decimal pnl_on = dec(on.report["accounts"]["carol"]["value_pnl"]);
  const Decimal pnl_off = dec(off.report["accounts"]["carol"]["value_pnl"]);
  // Without shutdown she also pays (cost - S) on 100 CH: (5 - 4) * 100.
  EXPECT_EQ(pnl_on - pnl_off, Decimal(100));
  const auto qc = quote_pair(Decimal(10), Decimal(12), 0.6, years_between(0, 28 * kDay), "0.01"_d);
  const auto qp = quote_pair(Decimal(10), Decimal(8), 0.6, years_between(0, 28 * kDay), "0.01"_d);
  const Decimal short_put_only = qp.put * Decimal(100) - (Decimal(8) - Decimal(4)) * Decimal(100);
  EXPECT_EQ(pnl_on, short_put_only + qc.call * Decimal(100));
  EXPECT_GE(pnl_on, pnl_off);
}

TEST(DefaultWaterfall, CompensatedAndLayersSum) {
  const auto r = run(library_scenario("default_and_waterfall"));
  const auto& ex = *r.exchange;
  ASSERT_EQ(ex.obligations().size(), 1u);
  EXPECT_EQ(ex.obligations().begin()->second.status, ObligationStatus::compensated);
  bool saw_delivery_failure = false;
  for (const auto& w : ex.waterfalls()) {
    EXPECT_EQ(w.total_drawn(), w.shortfall);
    for (std::size_t i = 1; i < kWaterfallLayers; ++i)
      if (w.drawn[i].is_positive()) {
        EXPECT_EQ(w.drawn[i - 1], w.available[i - 1]);
      }
    if (w.cause == "delivery_failure") saw_delivery_failure = true;
  }
  EXPECT_TRUE(saw_delivery_failure);
  EXPECT_EQ(ex.value_total(), ex.initial_value_total());
}

TEST(Replay, RunTwiceAndReplayMatch) {
  for (const auto& name : scenario_names()) {
    const auto a = run(library_scenario(name));
    const auto b = run(library_scenario(name));
    ASSERT_EQ(a.report.dump(), b.report.dump()) << name;
    ASSERT_EQ(a.log, b.log) << name;
    const auto rep = replay_text(join_log(a.log));
    EXPECT_EQ(rep.state_hash, a.exchange->state_hash()) << name;
    EXPECT_EQ(rep.state_hash, a.report["state_hash"]) << name;
  }
}

TEST(Replay, EmptyLogIsInitialState) {
  const auto r = replay_text("");
  EXPECT_EQ(r.events, 0u);
  EXPECT_EQ(r.state_hash, Exchange(Genesis{}).state_hash());
}

TEST(Replay, DamagedLogsAreRejected) {
  const auto a = run(library_scenario("alice_futures_hedge"));
  auto lines = a.log;
  auto truncated = lines;
  truncated.pop_back();
  EXPECT_EQ(replay_code(join_log(truncated)), ErrorCode::CorruptLog);
  auto gap = lines;
  gap.erase(gap.begin() + 2);
  EXPECT_EQ(replay_code(join_log(gap)), ErrorCode::CorruptLog);
  EXPECT_EQ(replay_code(join_log(lines) + "{}\n"), ErrorCode::CorruptLog);
  EXPECT_EQ(replay_code("not json\n"), ErrorCode::CorruptLog);
  auto header = json::parse(lines.front());
  header["version"] = 999;
  auto wrong = lines;
  wrong.front() = header.dump();
  EXPECT_EQ(replay_code(join_log(wrong)), ErrorCode::VersionMismatch);
  std::size_t idx = 1;
  while (json::parse(lines[idx])["outputs"].empty()) ++idx;
  auto tampered = json::parse(lines[idx]);
  tampered["outputs"] = json::array();
  auto t = lines;
  t[idx] = tampered.dump();
  EXPECT_EQ(replay_code(join_log(t)), ErrorCode::CorruptLog);
}

TEST(Report, MetricLookupAndAssertions) {
  const json rep = json::parse(R"({"a": {"b": [1, {"c": "2.50"}]}, "t": true})");
  EXPECT_EQ(lookup_metric(rep, "a.b.0"), 1);
  EXPECT_EQ(lookup_metric(rep, "a.b.1.c"), "2.50");
  EXPECT_TRUE(lookup_metric(rep, "a.x").is_null());
  EXPECT_TRUE(evaluate_assertion({"", "", "eq", "2.5"}, "2.50"));
  EXPECT_TRUE(evaluate_assertion({"", "", "lt", 3}, "2.5"));
  EXPECT_FALSE(evaluate_assertion({"", "", "ge", 3}, "2.5"));
  EXPECT_TRUE(evaluate_assertion({"", "", "eq", true}, true));
  EXPECT_TRUE(evaluate_assertion({"", "", "ne", "x"}, "y"));
}

TEST(Report, CsvHasOneRowPerAccount) {
  const auto r = run(library_scenario("alice_futures_hedge"));
  const auto csv = report_csv(r.report);
  const auto rows = std::count(csv.begin(), csv.end(), '\n');
  EXPECT_EQ(static_cast<std::size_t>(rows), r.report["accounts"].size() + 1);
}
