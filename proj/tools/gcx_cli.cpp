// gcx: estimators, grading, margin, scenario runs, replay and reports.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gcx/compute_units.hpp"
#include "gcx/error.hpp"
#include "gcx/exchange.hpp"
#include "gcx/json_io.hpp"
#include "gcx/risk.hpp"
#include "gcx/sim.hpp"

namespace fs = std::filesystem;
using gcx::json;

namespace {

constexpr int kCliSchemaVersion = 1;
constexpr int kExitOk = 0;
constexpr int kExitAssertion = 1;
constexpr int kExitInvalid = 2;

struct CliConfig {
  std::string config_path;
  gcx::ReferenceSystem reference = gcx::ExchangeConfig{}.reference;
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;
  int verbosity = 0;
};

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

void load_config(CliConfig& cfg) {
  if (cfg.config_path.empty()) {
    if (const char* env = std::getenv("GCX_CONFIG")) cfg.config_path = env;
  }
  if (cfg.config_path.empty()) return;
  const json j = read_json(cfg.config_path);
  if (j.contains("reference")) cfg.reference = j.at("reference").get<gcx::ReferenceSystem>();
  cfg.reference.validate();
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  if (!cfg.seed && j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("verbosity")) cfg.verbosity = j.at("verbosity").get<int>();
}

void emit(bool as_json, const std::string& command, json body, const std::string& text) {
  if (as_json) {
    body["schema_version"] = kCliSchemaVersion;
    body["command"] = command;
    std::cout << body.dump(2) << '\n';
  } else {
    std::cout << text;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
}

gcx::Scenario load_scenario(const std::string& source) {
  constexpr std::string_view builtin = "builtin:";
  if (source.rfind(builtin, 0) == 0) return gcx::library_scenario(source.substr(builtin.size()));
  return gcx::parse_scenario(read_json(source));
}

// ---------------------------------------------------------------- estimate-flops

int cmd_estimate_flops(const CliConfig& cfg, const std::string& path, std::optional<double> deadline, bool as_json) {
  const json j = read_json(path);
  gcx::TrainingJobSpec job;
  json layers = json::array();
  std::ostringstream text;
  const auto mode = gcx::parse_flops_mode(gcx::get_or<std::string>(j, "mode", "standard"));
  gcx::Flops layer_total = 0;
  std::size_t idx = 0;
  for (const auto& l : gcx::get_or<json>(j, "layers", json::array())) {
    gcx::ConvLayerSpec spec;
    spec.input_height = gcx::get_or<std::uint64_t>(l, "input_height", 1);
    spec.input_width = gcx::get_or<std::uint64_t>(l, "input_width", 1);
    spec.input_channels = gcx::get_required<std::uint64_t>(l, "input_channels");
    spec.output_channels = gcx::get_required<std::uint64_t>(l, "output_channels");
    spec.kernel_height = gcx::get_required<std::uint64_t>(l, "kernel_height");
    spec.kernel_width = gcx::get_required<std::uint64_t>(l, "kernel_width");
    spec.output_height = gcx::get_required<std::uint64_t>(l, "output_height");
    spec.output_width = gcx::get_required<std::uint64_t>(l, "output_width");
    const auto f = gcx::conv_layer_flops(spec, mode);
    layer_total += f;
    const std::string name = gcx::get_or<std::string>(l, "name", "layer" + std::to_string(idx));
    layers.push_back(json{{"name", name}, {"flops", gcx::format_flops_scientific(f)}});
    ++idx;
  }
  if (j.contains("model_flops")) job.model_flops_per_forward = gcx::flops_from_json(j.at("model_flops"));
  else if (!layers.empty()) job.model_flops_per_forward = layer_total;
  else throw InputError(path + ": needs model_flops or a non-empty layers list");
  job.dataset_samples = static_cast<std::uint64_t>(gcx::flops_from_json(gcx::get_required<json>(j, "samples")));
  job.batch_size = gcx::get_or<std::uint64_t>(j, "batch_size", 1);
  job.epochs = gcx::get_required<std::uint64_t>(j, "epochs");
  if (deadline) job.deadline_hours = gcx::Decimal::from_double(*deadline);
  else if (j.contains("deadline_hours")) job.deadline_hours = gcx::decimal_from_json(j.at("deadline_hours"));

  const gcx::Flops total = gcx::training_flops(job);
  const std::string sci = gcx::format_flops_scientific(total);
  const std::string si = gcx::format_flops_si(total);
  text << sci << " FLOPs (≈ " << si << ")\n";
  text << "  per forward pass: " << gcx::format_flops_scientific(job.model_flops_per_forward) << " FLOPs\n";
  for (const auto& l : layers) text << "  " << l["name"].get<std::string>() << ": " << l["flops"].get<std::string>() << " FLOPs\n";
  json body{{"total_flops", sci}, {"total_si", si}, {"forward_flops", gcx::format_flops_scientific(job.model_flops_per_forward)},
            {"layers", layers}};
  if (job.deadline_hours) {
    const auto rate = gcx::required_rate(job, cfg.reference);
    text << "  deadline " << job.deadline_hours->str() << " h: " << rate.flops_per_second.str() << " FLOPS, "
         << rate.compute_hours.str() << " CH at " << cfg.reference.id << '\n';
    body["deadline_hours"] = *job.deadline_hours;
    body["required_flops_per_second"] = rate.flops_per_second;
    body["compute_hours"] = rate.compute_hours.value();
    body["reference"] = cfg.reference.id;
  }
  emit(as_json, "estimate-flops", body, text.str());
  return kExitOk;
}

// ---------------------------------------------------------------- compute-hours, grade

int cmd_compute_hours(const CliConfig& cfg, const std::string& performance, const std::string& hours, bool as_json) {
  const gcx::Flops flops = gcx::parse_flops(performance);
  const gcx::Decimal perf = gcx::Decimal::from_raw(static_cast<gcx::int128>(flops) * gcx::Decimal::kScale);
  const gcx::Decimal h = gcx::Decimal::parse(hours);
  const auto ch = gcx::compute_hours(perf, cfg.reference, h);
  std::ostringstream text;
  text << ch.str() << " CH (" << perf.str() << " FLOPS for " << h.str() << " h against " << cfg.reference.id << ")\n";
  emit(as_json, "compute-hours",
       json{{"compute_hours", ch.value()}, {"performance", perf}, {"hours", h}, {"reference", cfg.reference.id}},
       text.str());
  return kExitOk;
}

int cmd_grade(const CliConfig& cfg, const std::string& path, bool as_json) {
  const auto profile = read_json(path).get<gcx::SystemProfile>();
  const auto result = gcx::grade(profile, cfg.reference);
  std::ostringstream text;
  text << result.grade.str() << '\n';
  if (result.energy_defaulted) text << "  energy defaulted to Z: no power measurement\n";
  emit(as_json, "grade",
       json{{"grade", result.grade.str()},
            {"performance", std::string(1, result.grade.str()[0])},
            {"reliability", static_cast<int>(result.grade.reliability)},
            {"energy_defaulted", result.energy_defaulted}},
       text.str());
  return kExitOk;
}

// ---------------------------------------------------------------- margin, list-instruments

int cmd_margin(const std::string& path, bool as_json) {
  const json j = read_json(path);
  gcx::MarketSnapshot market;
  for (const auto& s : gcx::get_required<std::vector<gcx::InstrumentSpec>>(j, "instruments")) {
    if (auto v = gcx::validate(s)) throw gcx::Error(gcx::ErrorCode::InvalidInstrument, s.id + ": " + std::string(gcx::to_string(*v)));
    market.instruments.emplace(s.id, s);
  }
  const json marks = gcx::get_or<json>(j, "marks", json::object());
  for (const auto& [k, v] : marks.items()) market.marks[k] = gcx::decimal_from_json(v);
  market.vols = gcx::get_or<std::map<std::string, double>>(j, "vols", {});
  market.now = gcx::get_or<gcx::SimTime>(j, "now", 0);
  const auto params = gcx::get_or<json>(j, "margin", json::object()).get<gcx::MarginParams>();
  std::vector<gcx::RiskPosition> portfolio;
  for (const auto& p : gcx::get_required<json>(j, "positions"))
    portfolio.push_back({gcx::get_required<std::string>(p, "instrument"), gcx::get_required<std::int64_t>(p, "quantity")});
  const auto im = gcx::initial_margin(portfolio, market, params);
  const auto mm = gcx::maintenance_margin(im, params);
  json body{{"initial_margin", im}, {"maintenance_margin", mm}};
  std::ostringstream text;
  text << "initial margin " << im.str() << "\nmaintenance margin " << mm.str() << '\n';
  if (j.contains("equity")) {
    const auto eq = gcx::decimal_from_json(j.at("equity"));
    const auto status = gcx::margin_check(eq, im, mm);
    body["equity"] = eq;
    body["status"] = std::string(gcx::to_string(status));
    text << "status " << gcx::to_string(status) << '\n';
  }
  emit(as_json, "margin", body, text.str());
  return kExitOk;
}

int cmd_list_instruments(const std::string& source, bool as_json) {
  std::vector<gcx::InstrumentSpec> instruments;
  if (source.empty()) {
    for (const auto& name : gcx::scenario_names())
      for (const auto& s : gcx::library_scenario(name).genesis.instruments)
        if (std::none_of(instruments.begin(), instruments.end(), [&](const auto& x) { return x.id == s.id; }))
          instruments.push_back(s);
  } else {
    instruments = load_scenario(source).genesis.instruments;
  }
  std::ostringstream text;
  for (const auto& s : instruments) {
    text << s.id << "  " << gcx::to_string(s.kind) << "  size " << s.contract_size.str() << "  tick "
         << s.tick_size.str();
    if (s.expiry) text << "  expiry " << *s.expiry;
    if (s.strike) text << "  strike " << s.strike->str();
    if (s.underlying) text << "  on " << *s.underlying;
    text << "  floor " << s.grade_floor.str() << '\n';
  }
  emit(as_json, "list-instruments", json{{"instruments", instruments}}, text.str());
  return kExitOk;
}

// ---------------------------------------------------------------- run, replay, report, ledger

int cmd_run(const CliConfig& cfg, const std::string& source, bool csv, bool as_json) {
  const gcx::Scenario scenario = load_scenario(source);
  const auto result = gcx::run(scenario, cfg.seed);
  fs::create_directories(cfg.output_dir);
  const std::string stem = scenario.name.empty() ? "scenario" : scenario.name;
  const fs::path report_path = fs::path(cfg.output_dir) / (stem + ".report.json");
  const fs::path log_path = fs::path(cfg.output_dir) / (stem + ".events.jsonl");
  write_text(report_path, result.report.dump(2) + "\n");
  std::string log;
  for (const auto& line : result.log) log += line + "\n";
  write_text(log_path, log);
  if (csv) write_text(fs::path(cfg.output_dir) / (stem + ".accounts.csv"), gcx::report_csv(result.report));

  std::ostringstream text;
  text << stem << ": " << result.report.at("events").get<std::size_t>() << " events, "
       << result.report.at("trades").get<std::size_t>() << " trades\n";
  for (const auto& a : result.report.at("assertions"))
    text << "  [" << (a.at("passed").get<bool>() ? "PASS" : "FAIL") << "] " << a.at("name").get<std::string>()
         << " (" << a.at("metric").get<std::string>() << " = " << a.at("actual").dump() << ")\n";
  text << "report " << report_path.string() << "\nlog " << log_path.string() << '\n';
  emit(as_json, "run",
       json{{"scenario", stem}, {"passed", result.passed}, {"report_path", report_path.string()},
            {"log_path", log_path.string()}, {"assertions", result.report.at("assertions")},
            {"state_hash", result.report.at("state_hash")}},
       text.str());
  return result.passed ? kExitOk : kExitAssertion;
}

gcx::ReplayResult replay_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return gcx::replay(in);
}

int cmd_replay(const std::string& path, bool as_json) {
  const auto r = replay_file(path);
  std::ostringstream text;
  text << "replayed " << r.events << " events\nstate hash " << r.state_hash << '\n';
  emit(as_json, "replay", json{{"events", r.events}, {"state_hash", r.state_hash}, {"state", r.exchange->state_json()}},
       text.str());
  return kExitOk;
}

int cmd_report(const std::string& path, bool as_json) {
  const auto r = replay_file(path);
  const json s = gcx::summarize(r);
  std::ostringstream text;
  text << r.events << " events\n";
  if (r.events > 0) {
    text << "trades " << s.at("trades").get<std::size_t>() << '\n';
    text << "obligations";
    if (s.at("obligations").empty()) text << " none";
    for (const auto& [status, n] : s.at("obligations").items()) text << ' ' << status << '=' << n.get<int>();
    text << '\n';
    for (const auto& w : s.at("waterfalls")) {
      text << "waterfall " << w.at("defaulter").get<std::string>() << " (" << w.at("cause").get<std::string>()
           << ") shortfall " << w.at("shortfall").get<std::string>() << ':';
      for (std::size_t i = 0; i < gcx::kWaterfallLayers; ++i) {
        const std::string layer(gcx::to_string(static_cast<gcx::WaterfallLayer>(i)));
        text << ' ' << layer << '=' << w.at("drawn").at(layer).get<std::string>();
      }
      text << '\n';
    }
    const auto& sup = s.at("supply");
    text << "supply issued " << sup.at("issued").get<std::string>() << " = supply "
         << sup.at("supply").get<std::string>() << " + burned " << sup.at("burned").get<std::string>() << ": "
         << (sup.at("identity_holds").get<bool>() ? "holds" : "VIOLATED") << '\n';
  }
  emit(as_json, "report", s, text.str());
  return kExitOk;
}

int cmd_ledger(const std::string& path, bool as_json) {
  const auto r = replay_file(path);
  const auto& tokens = r.exchange->tokens();
  json holdings = json::object();
  std::ostringstream text;
  for (const auto& [id, h] : tokens.holdings()) {
    holdings[id] = json{{"balance", h.balance}, {"staked", h.staked}, {"locked", h.locked}};
    text << id << "  balance " << h.balance.str() << "  staked " << h.staked.str() << "  locked " << h.locked.str()
         << '\n';
  }
  const auto check = tokens.check();
  text << "fund stable " << tokens.fund().stable_balance.str() << "  tokens " << tokens.fund().token_balance.str()
       << "\nfee pool " << tokens.fee_pool().str() << "\nissued " << check.cumulative_issued.str() << "  supply "
       << check.total_supply.str() << "  burned " << check.cumulative_burned.str() << "  identity "
       << (check.identity_holds ? "holds" : "VIOLATED") << '\n';
  emit(as_json, "ledger",
       json{{"holdings", holdings},
            {"fund", {{"stable", tokens.fund().stable_balance}, {"tokens", tokens.fund().token_balance}}},
            {"fee_pool", tokens.fee_pool()},
            {"issued", check.cumulative_issued},
            {"supply", check.total_supply},
            {"burned", check.cumulative_burned},
            {"identity_holds", check.identity_holds}},
       text.str());
  return kExitOk;
}

int cmd_scenarios(const std::string& out_dir, bool as_json) {
  json names = gcx::scenario_names();
  std::ostringstream text;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    for (const auto& n : gcx::scenario_names()) {
      write_text(fs::path(out_dir) / (n + ".json"), json(gcx::library_scenario(n)).dump(2) + "\n");
      text << (fs::path(out_dir) / (n + ".json")).string() << '\n';
    }
  } else {
    for (const auto& n : gcx::scenario_names()) text << n << '\n';
  }
  emit(as_json, "scenarios", json{{"scenarios", names}, {"exported_to", out_dir}}, text.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gcx: compute-hour exchange toolkit"};
  app.require_subcommand(1);
  CliConfig cfg;
  bool as_json = false;
  std::uint64_t seed = 0;
  app.add_option("--config", cfg.config_path, "Config file (JSON); defaults to $GCX_CONFIG");
  app.add_option("--out", cfg.output_dir, "Output directory");
  auto* seed_opt = app.add_option("--seed", seed, "Seed override for scenario runs");
  app.add_flag("-v,--verbose", cfg.verbosity, "Verbosity");

  const auto json_flag = [&](CLI::App* sub) { sub->add_flag("--json", as_json, "Machine-readable output"); };

  std::string path;
  std::optional<double> deadline;
  auto* est = app.add_subcommand("estimate-flops", "Training FLOPs from a model spec file");
  est->add_option("model", path, "Model spec JSON")->required();
  est->add_option("--deadline-hours", deadline, "Deadline for the required rate and CH");
  json_flag(est);

  std::string performance, hours = "1";
  auto* ch = app.add_subcommand("compute-hours", "Compute hours for a system against the reference");
  ch->add_option("--performance", performance, "Sustained FLOPS, e.g. 2e12")->required();
  ch->add_option("--hours", hours, "Operational hours");
  json_flag(ch);

  auto* grade = app.add_subcommand("grade", "Grade a system profile");
  grade->add_option("profile", path, "System profile JSON")->required();
  json_flag(grade);

  auto* margin = app.add_subcommand("margin", "Portfolio margin from a portfolio file");
  margin->add_option("portfolio", path, "Portfolio JSON")->required();
  json_flag(margin);

  std::string source;
  auto* list = app.add_subcommand("list-instruments", "List instruments of a scenario or the built-ins");
  list->add_option("scenario", source, "Scenario JSON or builtin:<name>");
  json_flag(list);

  bool csv = false;
  auto* run = app.add_subcommand("run", "Run a scenario; exit 1 if an assertion fails");
  run->add_option("scenario", source, "Scenario JSON or builtin:<name>")->required();
  run->add_flag("--csv", csv, "Also write a per-account CSV table");
  json_flag(run);

  auto* replay = app.add_subcommand("replay", "Rebuild state from an event log");
  replay->add_option("log", path, "Event log (JSONL)")->required();
  json_flag(replay);

  auto* report = app.add_subcommand("report", "Summarize an event log");
  report->add_option("log", path, "Event log (JSONL)")->required();
  json_flag(report);

  auto* ledger = app.add_subcommand("ledger", "Token ledger state after replaying a log");
  ledger->add_option("log", path, "Event log (JSONL)")->required();
  json_flag(ledger);

  std::string export_dir;
  auto* scenarios = app.add_subcommand("scenarios", "List built-in scenarios or export them as JSON");
  scenarios->add_option("--export", export_dir, "Directory to write scenario files to");
  json_flag(scenarios);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*seed_opt) cfg.seed = seed;
    load_config(cfg);
    if (*est) return cmd_estimate_flops(cfg, path, deadline, as_json);
    if (*ch) return cmd_compute_hours(cfg, performance, hours, as_json);
    if (*grade) return cmd_grade(cfg, path, as_json);
    if (*margin) return cmd_margin(path, as_json);
    if (*list) return cmd_list_instruments(source, as_json);
    if (*run) return cmd_run(cfg, source, csv, as_json);
    if (*replay) return cmd_replay(path, as_json);
    if (*report) return cmd_report(path, as_json);
    if (*ledger) return cmd_ledger(path, as_json);
    if (*scenarios) return cmd_scenarios(export_dir, as_json);
  } catch (const gcx::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}
