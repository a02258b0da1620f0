#include "gcx/json_io.hpp"

#include <cstdio>

#include "gcx/error.hpp"

namespace gcx {

Decimal decimal_from_json(const json& j) {
  if (j.is_string()) return Decimal::parse(j.get<std::string>());
  if (j.is_number_integer()) return Decimal(j.get<std::int64_t>());
  if (j.is_number_unsigned()) return Decimal(j.get<std::uint64_t>());
  if (j.is_number_float()) return Decimal::parse(j.dump());
  throw Error(ErrorCode::Parse, "expected a decimal, got " + j.dump());
}

Flops flops_from_json(const json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<Flops>(j.get<std::int64_t>());
  if (j.is_string()) return parse_flops(j.get<std::string>());
  if (j.is_number_float()) return parse_flops(j.dump());
  throw Error(ErrorCode::Parse, "expected a FLOPs count, got " + j.dump());
}

void to_json(json& j, const Decimal& d) { j = d.str(); }
void from_json(const json& j, Decimal& d) { d = decimal_from_json(j); }

void to_json(json& j, const GradeTriple& g) { j = g.str(); }
void from_json(const json& j, GradeTriple& g) { g = GradeTriple::parse(j.get<std::string>()); }

void to_json(json& j, const ReferenceSystem& r) {
  j = json{{"id", r.id},
           {"reference_performance", r.reference_performance},
           {"reference_efficiency", r.reference_efficiency},
           {"benchmark_suite", r.benchmark_suite},
           {"version", r.version}};
}

void from_json(const json& j, ReferenceSystem& r) {
  r.id = get_or<std::string>(j, "id", "reference");
  r.reference_performance = decimal_from_json(j.at("reference_performance"));
  r.reference_efficiency = decimal_from_json(j.at("reference_efficiency"));
  r.benchmark_suite = get_or<std::string>(j, "benchmark_suite", "");
  r.version = get_or<std::int64_t>(j, "version", 1);
}

namespace {

void put_optional(json& j, const char* key, const std::optional<Decimal>& v) {
  if (v) j[key] = *v;
}

std::optional<Decimal> optional_decimal(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return decimal_from_json(j.at(key));
}

}  // namespace

void to_json(json& j, const SystemProfile& p) {
  j = json{{"provider_id", p.provider_id}, {"measured_performance", p.measured_performance}, {"uptime_pct", p.uptime_pct}};
  put_optional(j, "measured_power", p.measured_power);
  put_optional(j, "mtbf_hours", p.mtbf_hours);
  put_optional(j, "mttr_hours", p.mttr_hours);
  put_optional(j, "utilization_pct", p.utilization_pct);
}

void from_json(const json& j, SystemProfile& p) {
  p.provider_id = get_or<std::string>(j, "provider_id", "");
  p.measured_performance = decimal_from_json(j.at("measured_performance"));
  p.uptime_pct = decimal_from_json(j.at("uptime_pct"));
  p.measured_power = optional_decimal(j, "measured_power");
  p.mtbf_hours = optional_decimal(j, "mtbf_hours");
  p.mttr_hours = optional_decimal(j, "mttr_hours");
  p.utilization_pct = optional_decimal(j, "utilization_pct");
}

void to_json(json& j, const InstrumentSpec& s) {
  j = json{{"id", s.id},
           {"kind", std::string(to_string(s.kind))},
           {"contract_size", s.contract_size},
           {"grade_floor", s.grade_floor},
           {"tick_size", s.tick_size}};
  if (s.expiry) j["expiry"] = *s.expiry;
  if (s.strike) j["strike"] = *s.strike;
  if (s.underlying) j["underlying"] = *s.underlying;
  if (s.funding_interval) j["funding_interval"] = *s.funding_interval;
}

void from_json(const json& j, InstrumentSpec& s) {
  s.id = get_required<std::string>(j, "id");
  s.kind = parse_instrument_kind(get_required<std::string>(j, "kind"));
  if (j.contains("contract_size")) s.contract_size = decimal_from_json(j.at("contract_size"));
  if (j.contains("grade_floor")) s.grade_floor = GradeTriple::parse(j.at("grade_floor").get<std::string>());
  if (j.contains("tick_size")) s.tick_size = decimal_from_json(j.at("tick_size"));
  s.expiry = get_optional<SimTime>(j, "expiry");
  s.strike = optional_decimal(j, "strike");
  s.underlying = get_optional<std::string>(j, "underlying");
  s.funding_interval = get_optional<SimTime>(j, "funding_interval");
}

void to_json(json& j, const Position& p) {
  j = json{{"instrument", p.instrument_id},
           {"net_quantity", p.net_quantity},
           {"entry_price", p.entry_price},
           {"realized_pnl", p.realized_pnl}};
}

void to_json(json& j, const MarginParams& m) {
  j = json{{"price_scan_pct", m.price_scan_pct},
           {"scan_steps", m.scan_steps},
           {"vol_scan_pct", m.vol_scan_pct},
           {"maintenance_fraction", m.maintenance_fraction}};
}

void from_json(const json& j, MarginParams& m) {
  if (j.contains("price_scan_pct")) m.price_scan_pct = decimal_from_json(j.at("price_scan_pct"));
  m.scan_steps = get_or<int>(j, "scan_steps", m.scan_steps);
  if (j.contains("vol_scan_pct")) m.vol_scan_pct = decimal_from_json(j.at("vol_scan_pct"));
  if (j.contains("maintenance_fraction")) m.maintenance_fraction = decimal_from_json(j.at("maintenance_fraction"));
  m.validate();
}

void to_json(json& j, const TokenConfig& c) {
  j = json{{"supply_cap", c.supply_cap},
           {"fee_bps", c.fee_bps},
           {"burn_bps", c.burn_bps},
           {"seat_threshold", c.seat_threshold},
           {"seat_discount", c.seat_discount},
           {"slash_burn_fraction", c.slash_burn_fraction},
           {"perf_burn_rate", c.perf_burn_rate},
           {"yield_fraction", c.yield_fraction},
           {"reputation_yield_bonus", c.reputation_yield_bonus},
           {"treasury", c.treasury}};
}

void from_json(const json& j, TokenConfig& c) {
  const auto dec = [&](const char* key, Decimal& out) {
    if (j.contains(key)) out = decimal_from_json(j.at(key));
  };
  dec("supply_cap", c.supply_cap);
  dec("fee_bps", c.fee_bps);
  dec("burn_bps", c.burn_bps);
  dec("seat_threshold", c.seat_threshold);
  dec("seat_discount", c.seat_discount);
  dec("slash_burn_fraction", c.slash_burn_fraction);
  dec("perf_burn_rate", c.perf_burn_rate);
  dec("yield_fraction", c.yield_fraction);
  c.reputation_yield_bonus = get_or<bool>(j, "reputation_yield_bonus", c.reputation_yield_bonus);
  c.treasury = get_or<std::string>(j, "treasury", c.treasury);
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gcx
