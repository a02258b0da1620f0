#include "gcx/clearing.hpp"

#include <algorithm>
#include <cstdio>

#include "gcx/error.hpp"

namespace gcx {

std::string_view to_string(AccountRole role) {
  switch (role) {
    case AccountRole::hedger: return "hedger";
    case AccountRole::trader: return "trader";
    case AccountRole::market_maker: return "market_maker";
    case AccountRole::guarantor: return "guarantor";
    case AccountRole::exchange: return "exchange";
    case AccountRole::external: return "external";
  }
  return "unknown";
}

AccountRole parse_account_role(std::string_view text) {
  for (auto r : {AccountRole::hedger, AccountRole::trader, AccountRole::market_maker, AccountRole::guarantor,
                 AccountRole::exchange, AccountRole::external})
    if (to_string(r) == text) return r;
  throw Error(ErrorCode::Parse, "unknown account role '" + std::string(text) + "'");
}

std::int64_t Account::position(const InstrumentId& id) const {
  auto it = positions.find(id);
  return it == positions.end() ? 0 : it->second.net_quantity;
}

std::string_view to_string(ObligationStatus s) {
  switch (s) {
    case ObligationStatus::pending: return "pending";
    case ObligationStatus::capacity_verified: return "capacity_verified";
    case ObligationStatus::delivered: return "delivered";
    case ObligationStatus::failed: return "failed";
    case ObligationStatus::compensated: return "compensated";
  }
  return "unknown";
}

ObligationStatus parse_obligation_status(std::string_view text) {
  for (auto s : {ObligationStatus::pending, ObligationStatus::capacity_verified, ObligationStatus::delivered,
                 ObligationStatus::failed, ObligationStatus::compensated})
    if (to_string(s) == text) return s;
  throw Error(ErrorCode::Parse, "unknown obligation status '" + std::string(text) + "'");
}

bool is_allowed_transition(ObligationStatus from, ObligationStatus to) {
  using S = ObligationStatus;
  switch (from) {
    case S::pending: return to == S::capacity_verified || to == S::failed;
    case S::capacity_verified: return to == S::delivered || to == S::failed;
    case S::failed: return to == S::compensated;
    case S::delivered:
    case S::compensated: return false;
  }
  return false;
}

void DeliveryObligation::transition(ObligationStatus to) {
  if (!is_allowed_transition(status, to))
    throw Error(ErrorCode::BadState, "obligation " + std::to_string(obligation_id) + " cannot move from " +
                                         std::string(to_string(status)) + " to " + std::string(to_string(to)));
  status = to;
  history.push_back(to);
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string compute_digest(std::uint64_t seed, std::uint64_t iterations) {
  std::uint64_t state = seed;
  std::uint64_t acc = 0xcbf29ce484222325ULL;
  for (std::uint64_t i = 0; i < iterations; ++i) {
    acc ^= splitmix64(state);
    acc *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(acc));
  return buf;
}

ComputeTask make_task(std::uint64_t task_id, std::uint64_t seed, std::uint64_t iterations) {
  return {task_id, seed, iterations, compute_digest(seed, iterations)};
}

std::string_view to_string(DeliveryOutcome o) {
  return o == DeliveryOutcome::accepted ? "accepted" : "challenged_failed";
}

DeliveryOutcome verify_delivery(const DeliveryObligation& obligation, const ComputeTask& task,
                                std::string_view claimed_digest, SimTime submitted_at) {
  if (obligation.status != ObligationStatus::capacity_verified)
    throw Error(ErrorCode::BadState, "obligation " + std::to_string(obligation.obligation_id) + " is " +
                                         std::string(to_string(obligation.status)));
  if (submitted_at > obligation.deadline) return DeliveryOutcome::challenged_failed;
  const std::string recomputed = compute_digest(task.seed, task.iterations);
  return recomputed == claimed_digest ? DeliveryOutcome::accepted : DeliveryOutcome::challenged_failed;
}

std::string_view to_string(CapacityResult r) {
  return r == CapacityResult::capacity_verified ? "capacity_verified" : "liquidate_short";
}

CapacityResult verify_capacity(Decimal quantity, const GradeTriple& floor, const std::optional<SystemProfile>& profile,
                               const ReferenceSystem& ref, Decimal window_hours) {
  if (quantity.is_zero()) return CapacityResult::capacity_verified;
  if (!profile) return CapacityResult::liquidate_short;
  const ComputeHours available = compute_hours(*profile, ref, window_hours);
  if (available.value() < quantity) return CapacityResult::liquidate_short;
  if (!grade(*profile, ref).grade.meets(floor)) return CapacityResult::liquidate_short;
  return CapacityResult::capacity_verified;
}

namespace {

void sort_largest_first(std::vector<OpenInterest>& v) {
  std::sort(v.begin(), v.end(), [](const OpenInterest& a, const OpenInterest& b) {
    if (a.quantity != b.quantity) return a.quantity > b.quantity;
    return a.account_id < b.account_id;
  });
}

// Two-pointer greedy over largest-first lists; quantities are consumed in place.
void greedy_pair(std::vector<OpenInterest>& shorts, std::vector<OpenInterest>& longs, std::vector<ExpiryMatch>& out) {
  sort_largest_first(shorts);
  sort_largest_first(longs);
  std::size_t i = 0, j = 0;
  while (i < shorts.size() && j < longs.size()) {
    if (shorts[i].quantity == 0) { ++i; continue; }
    if (longs[j].quantity == 0) { ++j; continue; }
    const std::int64_t q = std::min(shorts[i].quantity, longs[j].quantity);
    out.push_back({shorts[i].account_id, longs[j].account_id, q});
    shorts[i].quantity -= q;
    longs[j].quantity -= q;
  }
}

}  // namespace

std::vector<ExpiryMatch> match_expiry(std::vector<OpenInterest> shorts, std::vector<OpenInterest> longs) {
  for (const auto* side : {&shorts, &longs})
    for (const auto& oi : *side)
      if (oi.quantity <= 0) throw Error(ErrorCode::InvalidArgument, "open interest must be positive");
  std::vector<ExpiryMatch> out;

  std::map<std::string, std::pair<std::vector<OpenInterest>, std::vector<OpenInterest>>> by_guarantor;
  for (const auto& s : shorts)
    if (s.guarantor_id) by_guarantor[*s.guarantor_id].first.push_back(s);
  for (const auto& l : longs)
    if (l.guarantor_id) by_guarantor[*l.guarantor_id].second.push_back(l);

  std::vector<OpenInterest> rest_shorts, rest_longs;
  for (auto& [g, sides] : by_guarantor) {
    greedy_pair(sides.first, sides.second, out);
    for (auto& s : sides.first)
      if (s.quantity > 0) rest_shorts.push_back(s);
    for (auto& l : sides.second)
      if (l.quantity > 0) rest_longs.push_back(l);
  }
  for (const auto& s : shorts)
    if (!s.guarantor_id) rest_shorts.push_back(s);
  for (const auto& l : longs)
    if (!l.guarantor_id) rest_longs.push_back(l);
  greedy_pair(rest_shorts, rest_longs, out);
  return out;
}

std::string_view to_string(WaterfallLayer layer) {
  switch (layer) {
    case WaterfallLayer::defaulter_collateral: return "defaulter_collateral";
    case WaterfallLayer::defaulter_stake: return "defaulter_stake";
    case WaterfallLayer::pool_collateral: return "pool_collateral";
    case WaterfallLayer::pool_stake: return "pool_stake";
    case WaterfallLayer::insurance_fund: return "insurance_fund";
    case WaterfallLayer::haircut: return "haircut";
  }
  return "unknown";
}

Decimal WaterfallRecord::total_drawn() const {
  Decimal t;
  for (auto d : drawn) t += d;
  return t;
}

std::array<Decimal, kWaterfallLayers> plan_waterfall(Decimal shortfall,
                                                     const std::array<Decimal, kWaterfallLayers - 1>& capacities) {
  if (shortfall.is_negative()) throw Error(ErrorCode::InvalidArgument, "shortfall must be >= 0");
  std::array<Decimal, kWaterfallLayers> draws{};
  Decimal remaining = shortfall;
  for (std::size_t i = 0; i < capacities.size(); ++i) {
    const Decimal take = std::min(remaining, std::max(capacities[i], Decimal()));
    draws[i] = take;
    remaining -= take;
  }
  draws[kWaterfallLayers - 1] = remaining;
  return draws;
}

}  // namespace gcx
