#pragma once

#include <cstdint>
#include <list>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gcx/decimal.hpp"
#include "gcx/instruments.hpp"
#include "gcx/types.hpp"

namespace gcx {

enum class TimeInForce { resting, immediate_or_cancel };

std::string_view to_string(TimeInForce tif);
TimeInForce parse_time_in_force(std::string_view text);

struct OrderRequest {
  AccountId account_id;
  InstrumentId instrument_id;
  Side side = Side::buy;
  std::optional<Decimal> price;  // absent: market order
  std::int64_t quantity = 0;
  TimeInForce time_in_force = TimeInForce::resting;
};

struct Order {
  OrderId order_id = 0;
  AccountId account_id;
  InstrumentId instrument_id;
  Side side = Side::buy;
  std::optional<Decimal> price;
  std::int64_t quantity = 0;  // open quantity
  TimeInForce time_in_force = TimeInForce::resting;
  std::uint64_t sequence = 0;
  SimTime timestamp = 0;
};

struct Trade {
  TradeId trade_id = 0;
  InstrumentId instrument_id;
  OrderId maker_order_id = 0;
  OrderId taker_order_id = 0;
  AccountId maker_account;
  AccountId taker_account;
  Side taker_side = Side::buy;
  Decimal price;
  std::int64_t quantity = 0;
  SimTime timestamp = 0;
  bool self_trade = false;

  friend bool operator==(const Trade&, const Trade&) = default;
};

struct SubmitResult {
  OrderId order_id = 0;
  std::vector<Trade> trades;
  std::int64_t filled = 0;
  std::int64_t resting = 0;    // quantity left on the book
  std::int64_t cancelled = 0;  // unfilled immediate-or-cancel remainder
};

/// Hypothetical fill used by pre-trade checks; the book is not touched.
struct PreviewFill {
  Decimal price;
  std::int64_t quantity = 0;
};

struct BookLevel {
  Decimal price;
  std::int64_t quantity = 0;
  friend bool operator==(const BookLevel&, const BookLevel&) = default;
};

struct TopOfBook {
  std::optional<BookLevel> bid;
  std::optional<BookLevel> ask;
};

/// Central limit order books, one per instrument, with price-time priority.
/// Single writer: every mutation happens on the engine thread.
class MatchingEngine {
 public:
  MatchingEngine() = default;
  // Resting-order locators hold list iterators into the books; copies would
  // alias the source, so the engine is move-only.
  MatchingEngine(const MatchingEngine&) = delete;
  MatchingEngine& operator=(const MatchingEngine&) = delete;
  MatchingEngine(MatchingEngine&&) noexcept = default;
  MatchingEngine& operator=(MatchingEngine&&) noexcept = default;

  void list_instrument(const InstrumentId& id, Decimal tick_size);
  bool is_listed(const InstrumentId& id) const { return books_.contains(id); }

  /// Matches the taker from the best opposite price outward, earliest
  /// sequence first within a level, at the maker's price. Any remainder rests
  /// (resting limit orders) or is cancelled (IOC and market orders).
  SubmitResult submit(const OrderRequest& request, SimTime now);

  /// Fills the request would receive right now, without mutating the book.
  std::vector<PreviewFill> preview(const OrderRequest& request) const;

  /// Removes the resting remainder. Returns 0 for orders already filled or
  /// cancelled; throws UnknownOrder for ids never issued.
  std::int64_t cancel(OrderId order_id);

  TopOfBook best_bid_ask(const InstrumentId& instrument) const;

  std::vector<Order> open_orders(const AccountId& account) const;
  std::vector<Order> open_orders_for_instrument(const InstrumentId& instrument) const;

  /// Cancels every resting order on the instrument, returning their ids.
  std::vector<OrderId> cancel_all(const InstrumentId& instrument);

  /// Aggregated depth, best first.
  std::vector<BookLevel> depth(const InstrumentId& instrument, Side side) const;

  OrderId next_order_id() const { return next_id_; }
  TradeId next_trade_id() const { return next_trade_id_; }

 private:
  using Level = std::list<Order>;
  struct Book {
    Decimal tick;
    std::map<Decimal, Level> bids;  // best = rbegin
    std::map<Decimal, Level> asks;  // best = begin
  };
  struct Locator {
    InstrumentId instrument;
    Side side;
    Decimal price;
    Level::iterator it;
  };

  Book& book_for(const InstrumentId& id);
  const Book& book_for(const InstrumentId& id) const;
  void validate(const OrderRequest& request, const Book& book) const;

  std::map<InstrumentId, Book> books_;
  std::unordered_map<OrderId, Locator> resting_;
  OrderId next_id_ = 1;  // order ids double as arrival sequence numbers
  TradeId next_trade_id_ = 1;
};

}  // namespace gcx
