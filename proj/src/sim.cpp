#include "gcx/sim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <random>
#include <set>
#include <sstream>

#include "gcx/error.hpp"

namespace gcx {

// ---------------------------------------------------------------- clock

std::uint64_t SimClock::schedule(SimTime time, CommandBody body) {
  if (time < now_)
    throw Error(ErrorCode::InvalidArgument,
                "cannot schedule at " + std::to_string(time) + " before " + std::to_string(now_));
  const auto seq = next_seq_++;
  queue_.push(Entry{time, seq, std::move(body)});
  return seq;
}

Command SimClock::pop() {
  if (queue_.empty()) throw Error(ErrorCode::BadState, "clock has no pending events");
  Entry e = queue_.top();
  queue_.pop();
  now_ = e.time;
  return Command{e.time, std::move(e.body)};
}

// ---------------------------------------------------------------- price paths

std::vector<std::pair<SimTime, Decimal>> gbm_path(std::uint64_t seed, double drift, double vol, SimTime step,
                                                  SimTime start, SimTime end, Decimal initial, Decimal tick) {
  if (step <= 0) throw Error(ErrorCode::InvalidArgument, "gbm step must be positive");
  if (vol < 0.0) throw Error(ErrorCode::InvalidArgument, "gbm vol must be >= 0");
  if (!tick.is_positive()) throw Error(ErrorCode::InvalidArgument, "gbm tick must be positive");
  std::mt19937_64 rng(seed);
  // Uniform in (0, 1] from the top 53 bits, so that libstdc++ distribution
  // internals never enter the path.
  const auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53; };
  const double dt = static_cast<double>(step) / static_cast<double>(kYear);
  const double mu = (drift - 0.5 * vol * vol) * dt;
  const double sigma = vol * std::sqrt(dt);
  std::vector<std::pair<SimTime, Decimal>> out;
  double level = initial.to_double();
  out.push_back({start, std::max(initial.round_to(tick), tick)});
  bool spare_ready = false;
  double spare = 0.0;
  for (SimTime t = start + step; t <= end; t += step) {
    double z;
    if (spare_ready) {
      z = spare;
      spare_ready = false;
    } else {
      const double r = std::sqrt(-2.0 * std::log(uniform()));
      const double theta = 2.0 * M_PI * uniform();
      z = r * std::cos(theta);
      spare = r * std::sin(theta);
      spare_ready = true;
    }
    level *= std::exp(mu + sigma * z);
    out.push_back({t, std::max(Decimal::from_double(level).round_to(tick), tick)});
  }
  return out;
}

std::string_view to_string(DeliveryBehavior b) {
  switch (b) {
    case DeliveryBehavior::honest: return "honest";
    case DeliveryBehavior::wrong_digest: return "wrong_digest";
    case DeliveryBehavior::late: return "late";
    case DeliveryBehavior::no_show: return "no_show";
  }
  return "honest";
}

DeliveryBehavior parse_delivery_behavior(std::string_view text) {
  for (auto b : {DeliveryBehavior::honest, DeliveryBehavior::wrong_digest, DeliveryBehavior::late,
                 DeliveryBehavior::no_show})
    if (to_string(b) == text) return b;
  throw Error(ErrorCode::Parse, "unknown delivery behavior '" + std::string(text) + "'");
}

// ---------------------------------------------------------------- scenario json

void to_json(json& j, const PricePath& p) {
  j = json{{"targets", p.targets}};
  if (p.kind == PathKind::gbm) {
    j["kind"] = "gbm";
    if (p.seed) j["seed"] = *p.seed;
    j["drift"] = p.drift;
    j["vol"] = p.vol;
    j["step"] = p.step;
    j["start"] = p.start;
    if (p.end) j["end"] = *p.end;
    if (p.initial) j["initial"] = *p.initial;
  } else {
    j["kind"] = "explicit";
    json pts = json::array();
    for (const auto& [t, v] : p.points) pts.push_back(json::array({t, v}));
    j["points"] = pts;
  }
}

void from_json(const json& j, PricePath& p) {
  p.targets = get_required<std::vector<std::string>>(j, "targets");
  const auto kind = get_or<std::string>(j, "kind", "gbm");
  if (kind == "gbm") {
    p.kind = PathKind::gbm;
    p.seed = get_optional<std::uint64_t>(j, "seed");
    p.drift = get_or<double>(j, "drift", 0.0);
    p.vol = get_or<double>(j, "vol", 0.0);
    p.step = get_or<SimTime>(j, "step", kDay);
    p.start = get_or<SimTime>(j, "start", 0);
    p.end = get_optional<SimTime>(j, "end");
    p.initial = get_optional<Decimal>(j, "initial");
  } else if (kind == "explicit") {
    p.kind = PathKind::explicit_points;
    for (const auto& pt : get_required<json>(j, "points")) {
      if (!pt.is_array() || pt.size() != 2) throw Error(ErrorCode::Parse, "path point must be [time, price]");
      p.points.push_back({pt.at(0).get<SimTime>(), decimal_from_json(pt.at(1))});
    }
  } else {
    throw Error(ErrorCode::Parse, "unknown path kind '" + kind + "'");
  }
}

void to_json(json& j, const Scenario& s) {
  json actions = json::array();
  for (const auto& a : s.actions) {
    json c = command_to_json(a.command);
    if (a.every > 0) c["repeat"] = json{{"every", a.every}, {"count", a.count}};
    actions.push_back(std::move(c));
  }
  json assertions = json::array();
  for (const auto& a : s.assertions)
    assertions.push_back(json{{"name", a.name}, {"metric", a.metric}, {"op", a.op}, {"value", a.value}});
  json behaviors = json::object();
  for (const auto& [id, b] : s.behaviors) behaviors[id] = std::string(to_string(b));
  j = json{{"schema_version", s.schema_version},
           {"name", s.name},
           {"description", s.description},
           {"seed", s.seed},
           {"genesis", s.genesis},
           {"price_paths", s.paths},
           {"auto_lifecycle", s.auto_lifecycle},
           {"quote_interval", s.quote_interval},
           {"behaviors", behaviors},
           {"actions", actions},
           {"assertions", assertions}};
  if (s.horizon) j["horizon"] = *s.horizon;
}

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ScenarioInvalid, what); }

const InstrumentSpec* find_instrument(const Genesis& g, const InstrumentId& id) {
  for (const auto& s : g.instruments)
    if (s.id == id) return &s;
  return nullptr;
}

bool has_account(const Genesis& g, const AccountId& id) {
  if (id == g.config.tokens.treasury) return true;
  return std::any_of(g.accounts.begin(), g.accounts.end(), [&](const auto& a) { return a.id == id; });
}

// Account and instrument names referenced by a command.
struct Refs {
  std::vector<AccountId> accounts;
  std::vector<InstrumentId> instruments;
};

Refs refs_of(const CommandBody& body) {
  Refs r;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SetMark>) r.instruments = {c.instrument};
        else if constexpr (std::is_same_v<T, PlaceOrder>) {
          r.accounts = {c.account};
          r.instruments = {c.instrument};
        } else if constexpr (std::is_same_v<T, CancelOrder>) r.accounts = {c.account};
        else if constexpr (std::is_same_v<T, OtcTrade>) {
          r.accounts = {c.buyer, c.seller};
          r.instruments = {c.instrument};
        } else if constexpr (std::is_same_v<T, StakeTokens> || std::is_same_v<T, UnstakeTokens> ||
                             std::is_same_v<T, FundContribution> || std::is_same_v<T, SetProfile> ||
                             std::is_same_v<T, PerformanceBurn>)
          r.accounts = {c.account};
        else if constexpr (std::is_same_v<T, TransferTokens>) r.accounts = {c.from, c.to};
        else if constexpr (std::is_same_v<T, ExerciseOption>) {
          r.accounts = {c.account};
          r.instruments = {c.option};
        } else if constexpr (std::is_same_v<T, CheckCapacity> || std::is_same_v<T, ExpireFuture>)
          r.instruments = {c.future};
        else if constexpr (std::is_same_v<T, ExpireOption>) r.instruments = {c.option};
        else if constexpr (std::is_same_v<T, PerpFunding>) r.instruments = {c.perp};
        else if constexpr (std::is_same_v<T, Produce>) r.accounts = {c.account, c.buyer, c.utility};
        else if constexpr (std::is_same_v<T, Flatten>) {
          r.accounts = {c.account};
          if (c.instrument) r.instruments = {*c.instrument};
        } else if constexpr (std::is_same_v<T, QuoteOptions>) r.instruments = {c.underlying};
        else if constexpr (std::is_same_v<T, QuoteMarket>) {
          r.accounts = {c.account};
          r.instruments = {c.instrument};
        }
      },
      body);
  return r;
}

}  // namespace

void validate_scenario(const Scenario& s) {
  if (s.schema_version != kScenarioSchemaVersion)
    invalid("schema_version " + std::to_string(s.schema_version) + " is not supported (expected " +
            std::to_string(kScenarioSchemaVersion) + ")");
  const Genesis& g = s.genesis;
  std::set<std::string> ids;
  for (const auto& i : g.instruments)
    if (!ids.insert(i.id).second) invalid("duplicate instrument '" + i.id + "'");
  for (const auto& i : g.instruments) {
    if (i.underlying && !find_instrument(g, *i.underlying))
      invalid("instrument '" + i.id + "' names unknown underlying '" + *i.underlying + "'");
  }
  if (!g.spot_instrument.empty() && !find_instrument(g, g.spot_instrument))
    invalid("spot_instrument '" + g.spot_instrument + "' is not listed");
  for (const auto& [id, m] : g.marks)
    if (!find_instrument(g, id)) invalid("mark for unknown instrument '" + id + "'");
  for (const auto& [id, v] : g.vols)
    if (!find_instrument(g, id)) invalid("vol for unknown instrument '" + id + "'");
  for (const auto& a : g.accounts)
    if (a.guarantor && !has_account(g, *a.guarantor))
      invalid("account '" + a.id + "' names unknown guarantor '" + *a.guarantor + "'");
  for (std::size_t i = 0; i < s.paths.size(); ++i) {
    const auto& p = s.paths[i];
    if (p.targets.empty()) invalid("price path " + std::to_string(i) + " has no targets");
    for (const auto& t : p.targets) {
      const auto* spec = find_instrument(g, t);
      if (!spec) invalid("price path " + std::to_string(i) + " targets unknown instrument '" + t + "'");
      if (spec->is_option()) invalid("price path " + std::to_string(i) + " targets option '" + t + "'");
    }
    if (p.kind == PathKind::explicit_points) {
      if (p.points.empty()) invalid("explicit price path " + std::to_string(i) + " has no points");
      for (const auto& [t, v] : p.points) {
        if (v.is_negative()) invalid("explicit price path " + std::to_string(i) + " has a negative price");
        if (t < 0) invalid("explicit price path " + std::to_string(i) + " has a negative time");
      }
    } else {
      if (p.step <= 0) invalid("price path " + std::to_string(i) + " needs a positive step");
      if (p.vol < 0.0) invalid("price path " + std::to_string(i) + " has a negative vol");
      if (!p.initial && !g.marks.contains(p.targets.front()))
        invalid("price path " + std::to_string(i) + " has no initial price and '" + p.targets.front() +
                "' has no mark");
    }
  }
  for (const auto& [id, b] : s.behaviors)
    if (!has_account(g, id)) invalid("behavior for unknown account '" + id + "'");
  for (std::size_t i = 0; i < s.actions.size(); ++i) {
    const auto& a = s.actions[i];
    const std::string where = "action " + std::to_string(i) + " (" + command_name(a.command.body) + ")";
    if (a.command.time < 0) invalid(where + " has a negative time");
    if (a.every < 0 || a.count < 1) invalid(where + " has a bad repeat");
    const auto r = refs_of(a.command.body);
    for (const auto& acc : r.accounts)
      if (!has_account(g, acc)) invalid(where + " names unknown account '" + acc + "'");
    for (const auto& ins : r.instruments)
      if (!find_instrument(g, ins)) invalid(where + " names unknown instrument '" + ins + "'");
  }
  static const std::set<std::string> ops{"eq", "ne", "lt", "le", "gt", "ge"};
  for (const auto& a : s.assertions) {
    if (a.name.empty() || a.metric.empty()) invalid("assertion needs a name and a metric");
    if (!ops.contains(a.op)) invalid("assertion '" + a.name + "' has unknown op '" + a.op + "'");
  }
}

Scenario parse_scenario(const json& j) {
  Scenario s;
  try {
    if (!j.is_object()) invalid("scenario must be a JSON object");
    s.schema_version = get_required<int>(j, "schema_version");
    if (s.schema_version != kScenarioSchemaVersion)
      invalid("schema_version " + std::to_string(s.schema_version) + " is not supported");
    s.name = get_or<std::string>(j, "name", "");
    s.description = get_or<std::string>(j, "description", "");
    s.seed = get_or<std::uint64_t>(j, "seed", 0);
    s.horizon = get_optional<SimTime>(j, "horizon");
    s.genesis = get_or<json>(j, "genesis", json::object()).get<Genesis>();
    s.paths = get_or<std::vector<PricePath>>(j, "price_paths", {});
    s.auto_lifecycle = get_or<bool>(j, "auto_lifecycle", true);
    s.quote_interval = get_or<SimTime>(j, "quote_interval", kDay);
    const json behaviors = get_or<json>(j, "behaviors", json::object());
    for (const auto& [id, b] : behaviors.items())
      s.behaviors[id] = parse_delivery_behavior(b.get<std::string>());
    for (const auto& a : get_or<json>(j, "actions", json::array())) {
      ScenarioAction act;
      act.command = command_from_json(a);
      if (a.contains("repeat")) {
        act.every = get_required<SimTime>(a.at("repeat"), "every");
        act.count = get_required<int>(a.at("repeat"), "count");
      }
      s.actions.push_back(std::move(act));
    }
    for (const auto& a : get_or<json>(j, "assertions", json::array())) {
      s.assertions.push_back(Assertion{get_required<std::string>(a, "name"), get_required<std::string>(a, "metric"),
                                       get_or<std::string>(a, "op", "eq"), get_or<json>(a, "value", json())});
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ScenarioInvalid) throw;
    invalid(e.what());
  } catch (const nlohmann::json::exception& e) {
    invalid(e.what());
  }
  validate_scenario(s);
  return s;
}

// ---------------------------------------------------------------- report

json lookup_metric(const json& report, const std::string& metric) {
  const json* node = &report;
  std::size_t pos = 0;
  while (pos <= metric.size()) {
    const auto dot = metric.find('.', pos);
    const std::string key = metric.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (node->is_object()) {
      auto it = node->find(key);
      if (it == node->end()) return json();
      node = &*it;
    } else if (node->is_array()) {
      if (key.empty() || !std::all_of(key.begin(), key.end(), ::isdigit)) return json();
      const auto idx = std::stoul(key);
      if (idx >= node->size()) return json();
      node = &(*node)[idx];
    } else {
      return json();
    }
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  return *node;
}

namespace {

std::optional<Decimal> as_decimal(const json& v) {
  try {
    if (v.is_number() || v.is_string()) return decimal_from_json(v);
  } catch (const Error&) {
  }
  return std::nullopt;
}

}  // namespace

bool evaluate_assertion(const Assertion& a, const json& actual) {
  const auto x = as_decimal(actual);
  const auto y = as_decimal(a.value);
  if (x && y) {
    if (a.op == "eq") return *x == *y;
    if (a.op == "ne") return *x != *y;
    if (a.op == "lt") return *x < *y;
    if (a.op == "le") return *x <= *y;
    if (a.op == "gt") return *x > *y;
    if (a.op == "ge") return *x >= *y;
    return false;
  }
  if (a.op == "eq") return actual == a.value;
  if (a.op == "ne") return actual != a.value;
  return false;
}

json build_report(const Scenario& scenario, std::uint64_t seed, const Exchange& ex, std::size_t events,
                  std::size_t rejections) {
  const bool has_spot = !ex.genesis().spot_instrument.empty() && ex.market().marks.contains(ex.genesis().spot_instrument);
  const Decimal spot = has_spot ? ex.spot() : Decimal();
  json accounts = json::object();
  for (const auto& [id, a] : ex.accounts()) {
    const Decimal cash_pnl = a.stable_balance - a.initial_stable;
    const Decimal net_ch = a.ch_received + a.ch_produced - a.ch_delivered;
    json positions = json::object();
    for (const auto& [instr, p] : a.positions) positions[instr] = p.net_quantity;
    json e{{"role", std::string(to_string(a.role))},
           {"stable_initial", a.initial_stable},
           {"stable_final", a.stable_balance},
           {"cash_pnl", cash_pnl},
           {"equity", ex.equity(id)},
           {"value_pnl", cash_pnl + net_ch * spot + (ex.equity(id) - a.stable_balance)},
           {"ch_received", a.ch_received},
           {"ch_delivered", a.ch_delivered},
           {"ch_produced", a.ch_produced},
           {"power_cost", a.power_cost},
           {"positions", positions},
           {"reputation", ex.reputation().at(id).score}};
    e["effective_cost_per_ch"] = a.ch_received.is_positive() ? json(-cash_pnl / a.ch_received) : json(nullptr);
    e["effective_revenue_per_ch"] = a.ch_delivered.is_positive() ? json(cash_pnl / a.ch_delivered) : json(nullptr);
    if (ex.tokens().has(id)) {
      const auto& h = ex.tokens().holding(id);
      e["tokens"] = json{{"balance", h.balance}, {"staked", h.staked}, {"locked", h.locked}};
    }
    accounts[id] = std::move(e);
  }

  json obligations = json::array();
  json by_status = json::object();
  for (auto s : {ObligationStatus::pending, ObligationStatus::capacity_verified, ObligationStatus::delivered,
                 ObligationStatus::failed, ObligationStatus::compensated})
    by_status[std::string(to_string(s))] = 0;
  for (const auto& [id, ob] : ex.obligations()) {
    obligations.push_back(record_of(ob));
    by_status[std::string(to_string(ob.status))] = by_status[std::string(to_string(ob.status))].get<int>() + 1;
  }

  json waterfalls = json::array();
  bool waterfalls_sum = true;
  for (const auto& w : ex.waterfalls()) {
    waterfalls.push_back(record_of(w));
    if (w.total_drawn() != w.shortfall) waterfalls_sum = false;
  }
  json slashes = json::array();
  for (const auto& s : ex.slashes()) slashes.push_back(record_of(s));

  json quotes = json::array();
  std::size_t parity_violations = 0;
  for (const auto& q : ex.quotes()) {
    quotes.push_back(record_of(q));
    if (!q.parity_holds) ++parity_violations;
  }

  const auto check = ex.tokens().check();
  json assertions = json::array();
  bool passed = true;
  json report{{"report_version", kReportVersion},
              {"scenario", scenario.name},
              {"seed", seed},
              {"events", events},
              {"final_time", ex.now()},
              {"trades", ex.trade_count()},
              {"rejections", rejections},
              {"spot", has_spot ? json(spot) : json(nullptr)},
              {"marks", ex.market().marks},
              {"accounts", accounts},
              {"margin_calls", ex.margin_calls()},
              {"liquidations", ex.liquidations()},
              {"obligations", obligations},
              {"obligation_counts", by_status},
              {"waterfalls", waterfalls},
              {"waterfalls_sum_to_shortfall", waterfalls_sum},
              {"slashes", slashes},
              {"quotes", quotes},
              {"parity", {{"quotes", ex.quotes().size()}, {"violations", parity_violations}}},
              {"conservation",
               {{"initial", ex.initial_value_total()},
                {"final", ex.value_total()},
                {"write_offs", ex.write_offs()},
                {"insurance_fund", ex.tokens().fund().stable_balance},
                {"fee_pool", ex.tokens().fee_pool()},
                {"holds", ex.initial_value_total() == ex.value_total()}}},
              {"supply",
               {{"issued", check.cumulative_issued},
                {"supply", check.total_supply},
                {"burned", check.cumulative_burned},
                {"cap", ex.config().tokens.supply_cap},
                {"identity_holds", check.identity_holds},
                {"within_cap", check.within_cap},
                {"checks", ex.supply_checks()},
                {"violations", ex.supply_violations()}}},
              {"state_hash", ex.state_hash()}};
  for (const auto& a : scenario.assertions) {
    const json actual = lookup_metric(report, a.metric);
    const bool ok = evaluate_assertion(a, actual);
    passed = passed && ok;
    assertions.push_back(
        json{{"name", a.name}, {"metric", a.metric}, {"op", a.op}, {"expected", a.value}, {"actual", actual}, {"passed", ok}});
  }
  report["assertions"] = assertions;
  report["passed"] = passed;
  return report;
}

std::string report_csv(const json& report) {
  std::ostringstream os;
  static const char* columns[] = {"role",          "stable_initial", "stable_final", "cash_pnl",
                                  "value_pnl",     "ch_received",    "ch_delivered", "ch_produced",
                                  "power_cost",    "effective_cost_per_ch", "effective_revenue_per_ch", "reputation"};
  os << "account";
  for (const char* c : columns) os << ',' << c;
  os << '\n';
  for (const auto& [id, a] : report.at("accounts").items()) {
    os << id;
    for (const char* c : columns) {
      const json& v = a.at(c);
      os << ',';
      if (v.is_string()) os << v.get<std::string>();
      else if (!v.is_null()) os << v.dump();
    }
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------- run

namespace {

SimTime default_horizon(const Scenario& s) {
  SimTime h = 0;
  for (const auto& i : s.genesis.instruments)
    if (i.expiry) h = std::max(h, *i.expiry + s.genesis.config.delivery_window + 2 * kHour);
  for (const auto& a : s.actions) h = std::max(h, a.command.time + a.every * (a.count - 1));
  for (const auto& p : s.paths) {
    for (const auto& [t, v] : p.points) h = std::max(h, t);
    if (p.end) h = std::max(h, *p.end);
  }
  return h;
}

void schedule_paths(const Scenario& s, std::uint64_t seed, bool override_seeds, SimTime horizon, SimClock& clock) {
  std::map<InstrumentId, const InstrumentSpec*> specs;
  for (const auto& i : s.genesis.instruments) specs[i.id] = &i;
  SimTime last_expiry = 0;
  for (const auto& i : s.genesis.instruments)
    if (i.expiry) last_expiry = std::max(last_expiry, *i.expiry);
  for (std::size_t idx = 0; idx < s.paths.size(); ++idx) {
    const auto& p = s.paths[idx];
    std::vector<std::pair<SimTime, Decimal>> points;
    if (p.kind == PathKind::explicit_points) {
      points = p.points;
      std::stable_sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    } else {
      const std::uint64_t path_seed = (!override_seeds && p.seed) ? *p.seed : seed + idx;
      const Decimal initial = p.initial ? *p.initial : s.genesis.marks.at(p.targets.front());
      const SimTime end = p.end ? *p.end : (last_expiry > 0 ? last_expiry : horizon);
      points = gbm_path(path_seed, p.drift, p.vol, p.step, p.start, end, initial,
                        specs.at(p.targets.front())->tick_size);
    }
    for (const auto& [t, price] : points)
      for (const auto& target : p.targets) {
        const auto* spec = specs.at(target);
        if (spec->expiry && t > *spec->expiry) continue;
        clock.schedule(t, SetMark{target, price});
      }
  }
}

void schedule_lifecycle(const Scenario& s, SimTime horizon, SimClock& clock) {
  const auto& cfg = s.genesis.config;
  std::vector<const InstrumentSpec*> options, futures, perps;
  for (const auto& i : s.genesis.instruments) {
    if (i.is_option()) options.push_back(&i);
    else if (i.kind == InstrumentKind::future) futures.push_back(&i);
    else if (i.kind == InstrumentKind::perpetual) perps.push_back(&i);
  }
  if (s.quote_interval > 0) {
    std::map<InstrumentId, SimTime> last_expiry;
    for (const auto* o : options) last_expiry[*o->underlying] = std::max(last_expiry[*o->underlying], *o->expiry);
    for (const auto& [u, until] : last_expiry)
      for (SimTime t = 0; t < until; t += s.quote_interval) clock.schedule(t, QuoteOptions{u});
  }
  std::vector<std::pair<SimTime, CommandBody>> events;
  for (const auto* o : options) events.push_back({*o->expiry, ExpireOption{o->id}});
  for (const auto* f : futures) {
    if (*f->expiry - cfg.verification_lead >= 0) events.push_back({*f->expiry - cfg.verification_lead, CheckCapacity{f->id}});
    events.push_back({*f->expiry, ExpireFuture{f->id}});
  }
  for (const auto* p : perps) {
    const SimTime every = p->funding_interval.value_or(8 * kHour);
    for (SimTime t = every; t <= horizon; t += every) events.push_back({t, PerpFunding{p->id}});
  }
  std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [t, body] : events) clock.schedule(t, std::move(body));
}

void schedule_deliveries(const Scenario& s, const Exchange& ex, ObligationId id, SimClock& clock) {
  const auto& ob = ex.obligations().at(id);
  if (ob.status == ObligationStatus::capacity_verified) {
    auto it = s.behaviors.find(ob.short_account);
    const auto behavior = it == s.behaviors.end() ? DeliveryBehavior::honest : it->second;
    const auto& task = ex.task(id);
    const SimTime soon = std::min(ob.created + kHour, ob.deadline);
    switch (behavior) {
      case DeliveryBehavior::honest:
        clock.schedule(soon, SubmitDelivery{id, compute_digest(task.seed, task.iterations)});
        break;
      case DeliveryBehavior::wrong_digest:
        clock.schedule(soon, SubmitDelivery{id, std::string(16, '0')});
        break;
      case DeliveryBehavior::late:
        clock.schedule(ob.deadline + kHour, SubmitDelivery{id, compute_digest(task.seed, task.iterations)});
        break;
      case DeliveryBehavior::no_show:
        break;
    }
  }
  clock.schedule(ob.deadline, DeliveryDeadline{id});
}

}  // namespace

RunResult run(const Scenario& scenario, std::optional<std::uint64_t> seed_override) {
  validate_scenario(scenario);
  const std::uint64_t seed = seed_override.value_or(scenario.seed);
  RunResult result;
  result.exchange = std::make_unique<Exchange>(scenario.genesis);
  Exchange& ex = *result.exchange;

  const SimTime horizon = scenario.horizon.value_or(default_horizon(scenario));
  SimClock clock;
  schedule_paths(scenario, seed, seed_override.has_value(), horizon, clock);
  if (scenario.auto_lifecycle) schedule_lifecycle(scenario, horizon, clock);
  for (const auto& a : scenario.actions)
    for (int k = 0; k < a.count; ++k) clock.schedule(a.command.time + a.every * k, a.command.body);

  result.log.push_back(
      json{{"type", "header"}, {"version", kEngineVersion}, {"scenario", scenario.name}, {"seed", seed},
           {"genesis", scenario.genesis}}
          .dump());
  std::size_t events = 0;
  std::size_t rejections = 0;
  std::set<ObligationId> seen;
  while (!clock.empty()) {
    const Command cmd = clock.pop();
    const auto outputs = ex.apply(cmd);
    for (const auto& r : outputs)
      if (r.value("type", "") == "rejected") ++rejections;
    result.log.push_back(json{{"type", "event"}, {"seq", events}, {"command", command_to_json(cmd)}, {"outputs", outputs}}
                             .dump());
    ++events;
    for (const auto& [id, ob] : ex.obligations())
      if (seen.insert(id).second) schedule_deliveries(scenario, ex, id, clock);
  }
  result.log.push_back(json{{"type", "end"}, {"events", events}, {"state_hash", ex.state_hash()}}.dump());
  result.report = build_report(scenario, seed, ex, events, rejections);
  result.passed = result.report.at("passed").get<bool>();
  return result;
}

// ---------------------------------------------------------------- replay

namespace {

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorCode::CorruptLog, what); }

}  // namespace

ReplayResult replay(std::istream& in) {
  ReplayResult r;
  std::string line;
  std::size_t lineno = 0;
  bool ended = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (ended) corrupt("line " + std::to_string(lineno) + ": data after end record");
    json j;
    try {
      j = json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      corrupt("line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string type = j.is_object() ? j.value("type", "") : "";
    if (!r.exchange) {
      if (type != "header") corrupt("line " + std::to_string(lineno) + ": expected header record");
      if (!j.contains("version") || !j.at("version").is_number_integer()) corrupt("header has no version");
      if (j.at("version").get<int>() != kEngineVersion)
        throw Error(ErrorCode::VersionMismatch, "log version " + std::to_string(j.at("version").get<int>()) +
                                                    ", engine version " + std::to_string(kEngineVersion));
      try {
        r.exchange = std::make_unique<Exchange>(j.at("genesis").get<Genesis>());
      } catch (const Error& e) {
        corrupt(std::string("header genesis: ") + e.what());
      } catch (const nlohmann::json::exception& e) {
        corrupt(std::string("header genesis: ") + e.what());
      }
      r.header = std::move(j);
      continue;
    }
    if (type == "event") {
      std::vector<json> outputs;
      try {
        if (j.at("seq").get<std::size_t>() != r.events) corrupt("line " + std::to_string(lineno) + ": sequence gap");
        outputs = r.exchange->apply(command_from_json(j.at("command")));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::CorruptLog) throw;
        corrupt("line " + std::to_string(lineno) + ": " + e.what());
      } catch (const nlohmann::json::exception& e) {
        corrupt("line " + std::to_string(lineno) + ": " + e.what());
      }
      if (json(outputs) != j.value("outputs", json::array()))
        corrupt("line " + std::to_string(lineno) + ": outputs differ from the recorded ones");
      ++r.events;
    } else if (type == "end") {
      if (j.value("events", std::size_t{0}) != r.events) corrupt("end record event count mismatch");
      if (j.value("state_hash", "") != r.exchange->state_hash()) corrupt("end record state hash mismatch");
      ended = true;
    } else {
      corrupt("line " + std::to_string(lineno) + ": unknown record type '" + type + "'");
    }
  }
  if (!r.exchange) {
    r.exchange = std::make_unique<Exchange>(Genesis{});
  } else if (!ended) {
    corrupt("log has no end record (truncated)");
  }
  r.state_hash = r.exchange->state_hash();
  return r;
}

ReplayResult replay_text(const std::string& text) {
  std::istringstream in(text);
  return replay(in);
}

json summarize(const ReplayResult& r) {
  const Exchange& ex = *r.exchange;
  json by_status = json::object();
  for (const auto& [id, ob] : ex.obligations()) {
    const std::string s(to_string(ob.status));
    by_status[s] = by_status.value(s, 0) + 1;
  }
  json waterfalls = json::array();
  for (const auto& w : ex.waterfalls()) waterfalls.push_back(record_of(w));
  const auto check = ex.tokens().check();
  return json{{"events", r.events},
              {"scenario", r.header.is_object() ? r.header.value("scenario", "") : ""},
              {"trades", ex.trade_count()},
              {"obligations", by_status},
              {"waterfalls", waterfalls},
              {"supply",
               {{"issued", check.cumulative_issued},
                {"supply", check.total_supply},
                {"burned", check.cumulative_burned},
                {"identity_holds", check.identity_holds}}},
              {"conservation", {{"initial", ex.initial_value_total()}, {"final", ex.value_total()}}},
              {"state_hash", r.state_hash}};
}

}  // namespace gcx
