// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.
// Usage: acceptance <gcx cli binary> <tests/data dir>

#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "gcx/clearing.hpp"
#include "gcx/compute_units.hpp"
#include "gcx/error.hpp"
#include "gcx/instruments.hpp"
#include "gcx/risk.hpp"
#include "gcx/sim.hpp"
#include "oracles.hpp"

using namespace gcx;
using namespace gcx::literals;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::string g_cli;
std::string g_data;

std::string capture(const std::string& cmd) {
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return out;
  std::array<char, 512> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) out += buf.data();
  pclose(p);
  return out;
}

Decimal dec(const json& j) { return Decimal::parse(j.is_string() ? j.get<std::string>() : j.dump()); }

std::string join_log(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

ReferenceSystem ref_1tf() { return {"REF", Decimal(1'000'000'000'000LL), Decimal(2'500'000'000LL), "HPL", 1}; }

Outcome training_flops_text() {
  Outcome o;
  TrainingJobSpec job{1'000'000'000'000ULL, 1'000'000, 256, 10, std::nullopt};
  o.require(training_flops(job) == Flops(39'062'500'000'000'000ULL), "library total");
  const auto text = capture(g_cli + " estimate-flops " + g_data + "/training_job.json");
  o.require(text.find("3.90625e16 FLOPs (≈ 39 PFLOPs)") != std::string::npos, "cli printed: " + text);
  return o;
}

Outcome ch_anchors() {
  Outcome o;
  const auto ref = ref_1tf();
  o.require(compute_hours(Decimal(2'000'000'000'000LL), ref, Decimal(1)).value() == Decimal(2), "2 TFLOPS");
  o.require(compute_hours(Decimal(500'000'000'000LL), ref, Decimal(1)).value() == "0.5"_d, "0.5 TFLOPS");
  return o;
}

Outcome grading_bands() {
  Outcome o;
  const std::array<const char*, 4> uptimes{"99.95", "99.5", "97", "90"};
  for (std::size_t i = 0; i < uptimes.size(); ++i)
    o.require(static_cast<int>(reliability_grade(Decimal::parse(uptimes[i]))) == static_cast<int>(i) + 1, uptimes[i]);
  const ReliabilityBands b;
  std::mt19937_64 rng(99);
  for (int i = 0; i < 1'000'000 && o.ok; ++i) {
    const Decimal u = Decimal::from_raw(static_cast<int128>(rng() % 100'000'001));
    const std::array<bool, 4> in{u > b.excellent_above, u >= b.good_from && u <= b.excellent_above,
                                 u >= b.fair_from && u < b.good_from, u < b.fair_from};
    int count = 0, band = 0;
    for (int k = 0; k < 4; ++k)
      if (in[k]) {
        ++count;
        band = k + 1;
      }
    o.require(count == 1, "gap or overlap at " + u.str());
    o.require(static_cast<int>(reliability_grade(u)) == band, "grade disagrees with band at " + u.str());
  }
  return o;
}

Outcome matching_oracle() {
  Outcome o;
  for (std::uint64_t seed = 1; seed <= 1000 && o.ok; ++seed) {
    const auto t = oracle::run_match_trial(seed, 200, 5);
    o.require(t.equal, "seed " + std::to_string(seed) + ": " + t.detail);
    o.require(t.no_cross, "crossed book, seed " + std::to_string(seed));
    o.require(t.conserved, "quantity not conserved, seed " + std::to_string(seed));
  }
  return o;
}

MarketSnapshot margin_market() {
  MarketSnapshot m;
  InstrumentSpec f;
  f.id = "F";
  f.kind = InstrumentKind::future;
  f.expiry = 60 * kDay;
  m.instruments["F"] = f;
  InstrumentSpec g = f;
  g.id = "G";
  g.contract_size = Decimal(10);
  m.instruments["G"] = g;
  for (const char* k : {"90", "100", "110"})
    for (auto kind : {InstrumentKind::call_option, InstrumentKind::put_option}) {
      InstrumentSpec opt;
      opt.kind = kind;
      opt.id = std::string(kind == InstrumentKind::call_option ? "C" : "P") + k;
      opt.strike = Decimal::parse(k);
      opt.underlying = "F";
      opt.expiry = 30 * kDay;
      m.instruments[opt.id] = opt;
      m.vols[opt.id] = 0.4;
    }
  m.marks = {{"F", Decimal(100)}, {"G", "12.5"_d}};
  return m;
}

Outcome margin_grid() {
  Outcome o;
  const auto m = margin_market();
  const std::vector<std::string> ids{"F", "G", "C90", "C100", "C110", "P90", "P100", "P110"};
  std::mt19937_64 rng(500);
  for (int i = 0; i < 500 && o.ok; ++i) {
    std::vector<RiskPosition> p;
    const int n = 1 + static_cast<int>(rng() % 4);
    for (int k = 0; k < n; ++k) p.push_back({ids[rng() % ids.size()], static_cast<std::int64_t>(rng() % 11) - 5});
    MarginParams params;
    params.scan_steps = 3 + 2 * static_cast<int>(rng() % 4);
    params.price_scan_pct = Decimal::from_raw(static_cast<int128>(50'000 + (rng() % 26) * 10'000));
    o.require(initial_margin(p, m, params) == oracle::grid_margin(p, m, params), "portfolio " + std::to_string(i));
  }
  const std::vector<RiskPosition> fut{{"F", 1}}, put{{"P100", 1}}, pair{{"F", 1}, {"P100", 1}};
  const Decimal both = initial_margin(pair, m, {});
  o.require(both < initial_margin(fut, m, {}), "hedged pair not below the naked future");
  o.require(both <= initial_margin(fut, m, {}) + initial_margin(put, m, {}), "hedged pair not subadditive");
  return o;
}

Outcome default_waterfall() {
  Outcome o;
  const auto r = run(library_scenario("default_and_waterfall"));
  const auto& ex = *r.exchange;
  o.require(!ex.obligations().empty(), "no obligation");
  for (const auto& [id, ob] : ex.obligations())
    o.require(ob.status == ObligationStatus::compensated, "obligation " + std::to_string(id) + " not compensated");
  bool delivery_failure = false;
  for (const auto& w : ex.waterfalls()) {
    o.require(w.total_drawn() == w.shortfall, "draws do not sum to the shortfall for " + w.defaulter);
    std::vector<Decimal> cv;
    for (std::size_t k = 0; k + 1 < kWaterfallLayers; ++k) cv.push_back(w.available[k]);
    const auto want = oracle::waterfall(w.shortfall, cv);
    for (std::size_t k = 0; k < kWaterfallLayers; ++k)
      o.require(w.drawn[k] == want[k], "layer order broken for " + w.defaulter);
    if (w.cause == "delivery_failure") delivery_failure = true;
  }
  o.require(delivery_failure, "no delivery-failure waterfall");
  o.require(ex.value_total() == ex.initial_value_total(),
            "value " + ex.value_total().str() + " != " + ex.initial_value_total().str());
  return o;
}

Outcome hedge_invariance() {
  Outcome o;
  const auto alice = library_scenario("alice_futures_hedge");
  std::set<std::string> spots;
  for (std::uint64_t seed = 1; seed <= 100 && o.ok; ++seed) {
    const auto r = run(alice, seed);
    const auto& acc = r.report["accounts"];
    o.require(dec(acc["alice"]["effective_cost_per_ch"]) == Decimal(10), "alice cost, seed " + std::to_string(seed));
    o.require(dec(acc["bob"]["effective_revenue_per_ch"]) == Decimal(10), "bob revenue, seed " + std::to_string(seed));
    spots.insert(r.report["spot"].dump());
  }
  o.require(spots.size() > 50, "paths do not vary with the seed");
  return o;
}

Outcome option_identities() {
  Outcome o;
  std::size_t quotes = 0;
  for (const auto& name : scenario_names()) {
    const auto r = run(library_scenario(name));
    for (const auto& q : r.exchange->quotes()) {
      ++quotes;
      o.require(q.call - q.put == q.future_price - q.strike, "parity broken in " + name);
    }
  }
  o.require(quotes > 0, "no quotes in the library");
  const double call = black76_premium(100, 100, 0.2, 1, OptionType::call);
  const double ref = 100 * (2 * oracle::normal_cdf(0.1) - 1);
  o.require(std::abs(call - ref) <= 1e-3 && std::abs(ref - 7.9656) <= 1e-3, "ATM call " + std::to_string(call));
  return o;
}

Outcome supply_identity() {
  Outcome o;
  for (const auto& name : scenario_names()) {
    const auto r = run(library_scenario(name));
    const auto& ex = *r.exchange;
    const auto c = ex.tokens().check();
    o.require(c.cumulative_issued == c.total_supply + c.cumulative_burned, "identity in " + name);
    o.require(c.identity_holds && c.within_cap, "final check in " + name);
    o.require(ex.supply_checks() == r.log.size() - 2, "not checked per event in " + name);
    o.require(ex.supply_violations() == 0, "violation during " + name);
  }
  return o;
}

Outcome determinism() {
  Outcome o;
  for (const auto& name : scenario_names()) {
    const auto a = run(library_scenario(name));
    const auto b = run(library_scenario(name));
    o.require(a.report.dump(2) == b.report.dump(2), "reports differ for " + name);
    o.require(join_log(a.log) == join_log(b.log), "logs differ for " + name);
    const auto rep = replay_text(join_log(a.log));
    o.require(rep.state_hash == a.exchange->state_hash(), "replay hash differs for " + name);
  }
  return o;
}

struct Criterion {
  int number;
  const char* name;
  double budget_s;  // 0 means no runtime bound
  std::function<Outcome()> body;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <gcx cli> <data dir>\n";
    return 2;
  }
  g_cli = argv[1];
  g_data = argv[2];
  const std::vector<Criterion> all{
      {1, "training FLOPs estimate", 1, training_flops_text},
      {2, "compute hour anchors", 0, ch_anchors},
      {3, "reliability grade bands", 5, grading_bands},
      {4, "matching oracle equivalence", 30, matching_oracle},
      {5, "margin grid brute force", 30, margin_grid},
      {6, "default waterfall and conservation", 5, default_waterfall},
      {7, "hedge invariance", 30, hedge_invariance},
      {8, "option identities", 0, option_identities},
      {9, "token supply identity", 0, supply_identity},
      {10, "determinism and replay", 60, determinism},
  };
  int failures = 0;
  for (const auto& c : all) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out.ok = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs >= c.budget_s) out.require(false, "over the " + std::to_string(c.budget_s) + " s budget");
    std::ostringstream line;
    line.precision(3);
    line << (out.ok ? "PASS " : "FAIL ") << c.number << ' ' << c.name << " (" << std::fixed << secs << " s)";
    if (!out.ok) line << ": " << out.detail;
    std::cout << line.str() << std::endl;
    failures += !out.ok;
  }
  return failures == 0 ? 0 : 1;
}
