#pragma once

// Discrete-event driver: scenarios, price paths, the event clock, reports
// and the append-only event log.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "gcx/exchange.hpp"

namespace gcx {

inline constexpr int kScenarioSchemaVersion = 1;
inline constexpr int kReportVersion = 1;

/// Commands ordered by (time, insertion sequence).
class SimClock {
 public:
  std::uint64_t schedule(SimTime time, CommandBody body);
  bool empty() const { return queue_.empty(); }
  std::size_t pending() const { return queue_.size(); }
  /// Throws InvalidArgument when asked to schedule into the past.
  Command pop();
  SimTime now() const { return now_; }

 private:
  struct Entry {
    SimTime time;
    std::uint64_t seq;
    CommandBody body;
    bool operator>(const Entry& o) const { return time != o.time ? time > o.time : seq > o.seq; }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue_;
  std::uint64_t next_seq_ = 0;
  SimTime now_ = 0;
};

enum class PathKind { gbm, explicit_points };

struct PricePath {
  PathKind kind = PathKind::gbm;
  std::vector<InstrumentId> targets;
  // gbm
  std::optional<std::uint64_t> seed;
  double drift = 0.0;  // per year
  double vol = 0.0;    // per sqrt(year)
  SimTime step = kDay;
  SimTime start = 0;
  std::optional<SimTime> end;
  std::optional<Decimal> initial;  // defaults to the first target's mark
  // explicit
  std::vector<std::pair<SimTime, Decimal>> points;
};

/// Points of a GBM path from `start` to `end` inclusive, one per step, rounded
/// to `tick` and never below one tick. The first point is `initial`.
std::vector<std::pair<SimTime, Decimal>> gbm_path(std::uint64_t seed, double drift, double vol, SimTime step,
                                                  SimTime start, SimTime end, Decimal initial, Decimal tick);

enum class DeliveryBehavior { honest, wrong_digest, late, no_show };

std::string_view to_string(DeliveryBehavior b);
DeliveryBehavior parse_delivery_behavior(std::string_view text);

struct ScenarioAction {
  Command command;
  SimTime every = 0;  // repeat interval, 0 for a single shot
  int count = 1;
};

/// Named check on the report: the metric is a dotted path into the report
/// JSON, compared with eq, ne, lt, le, gt or ge.
struct Assertion {
  std::string name;
  std::string metric;
  std::string op;
  json value;
};

struct Scenario {
  int schema_version = kScenarioSchemaVersion;
  std::string name;
  std::string description;
  std::uint64_t seed = 0;
  std::optional<SimTime> horizon;
  Genesis genesis;
  std::vector<PricePath> paths;
  bool auto_lifecycle = true;
  SimTime quote_interval = kDay;  // 0 disables periodic option quotes
  std::map<AccountId, DeliveryBehavior> behaviors;
  std::vector<ScenarioAction> actions;
  std::vector<Assertion> assertions;
};

void to_json(json& j, const PricePath& p);
void from_json(const json& j, PricePath& p);
void to_json(json& j, const Scenario& s);

/// Parses and validates; every failure is ScenarioInvalid naming the first
/// bad reference.
Scenario parse_scenario(const json& j);
void validate_scenario(const Scenario& s);

struct RunResult {
  json report;
  std::vector<std::string> log;  // one JSON document per line
  std::unique_ptr<Exchange> exchange;
  bool passed = true;
};

/// Runs a scenario to completion. `seed_override` replaces the scenario seed
/// and every per-path seed.
RunResult run(const Scenario& scenario, std::optional<std::uint64_t> seed_override = std::nullopt);

/// Report assembled from an exchange's final state.
json build_report(const Scenario& scenario, std::uint64_t seed, const Exchange& ex, std::size_t events,
                  std::size_t rejections);

/// Resolves a dotted path in a JSON document; null when absent.
json lookup_metric(const json& report, const std::string& metric);
bool evaluate_assertion(const Assertion& a, const json& actual);

/// Per-account table: one header row and one row per account.
std::string report_csv(const json& report);

struct ReplayResult {
  std::unique_ptr<Exchange> exchange;
  std::size_t events = 0;
  std::string state_hash;
  json header;
};

/// Rebuilds the engine from a log. Missing end record, unparsable lines or
/// outputs that differ from the recorded ones raise CorruptLog; a log from
/// another engine version raises VersionMismatch. An empty log gives the
/// initial state of an empty exchange.
ReplayResult replay(std::istream& in);
ReplayResult replay_text(const std::string& text);

/// Human-readable digest of a replayed log.
json summarize(const ReplayResult& r);

/// Built-in scenarios, by name.
std::vector<std::string> scenario_names();
Scenario library_scenario(const std::string& name);

}  // namespace gcx
